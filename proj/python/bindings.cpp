#include <sstream>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "dpaudit/cli.hpp"
#include "dpaudit/config.hpp"
#include "dpaudit/corpus.hpp"
#include "dpaudit/detector.hpp"
#include "dpaudit/eval.hpp"
#include "dpaudit/harness.hpp"
#include "dpaudit/pipeline.hpp"
#include "dpaudit/promptkit.hpp"
#include "dpaudit/synth.hpp"

namespace py = pybind11;
using namespace dpaudit;

// Documents cross the boundary as canonical JSON text; the Python layer
// converts to and from dicts.

namespace {

WorkflowTrace trace_of(const std::string& text) { return trace_from_json(parse_document(text)); }

std::set<SubtypeId> subtypes_of_slugs(const std::vector<std::string>& slugs) {
  std::set<SubtypeId> out;
  for (const auto& s : slugs) {
    auto id = subtype_from_slug(s);
    if (!id) throw PreconditionError("unknown subtype '" + s + "'");
    out.insert(*id);
  }
  return out;
}

PlantSpec make_spec(const std::vector<std::string>& plants, std::uint64_t seed,
                    const std::string& broker_id, int page_count, int padding, int form_stages) {
  PlantSpec spec;
  const auto subs = subtypes_of_slugs(plants);
  for (auto s : subs) spec.plants.insert({subtype_info(s).category, s});
  spec.seed = seed;
  spec.broker_id = broker_id;
  spec.shape.page_count = page_count > 0 ? page_count : min_page_count(subs);
  spec.shape.benign_padding_sections = padding;
  spec.shape.form_stages = form_stages;
  return spec;
}

PortalBlueprint blueprint_of(const std::string& trace, const std::optional<std::string>& fault,
                             int step) {
  FaultPlan plan;
  if (fault) {
    auto kind = fault_from_string(*fault);
    if (!kind) throw PreconditionError("unknown fault '" + *fault + "'");
    plan.faults.push_back({*kind, step});
  }
  return inject_faults(trace_of(trace), plan);
}

py::dict ratio_dict(const Ratio& r) {
  py::dict d;
  d["value"] = r.value ? py::cast(*r.value) : py::none();
  d["reason"] = r.reason;
  return d;
}

DetectorConfig detector_config(const std::string& config_text) {
  return config_text.empty() ? DetectorConfig{} : parse_config(config_text).detector;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Dark-pattern audit core";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<PreconditionError>(m, "PreconditionError", base);
  py::register_exception<SchemaError>(m, "SchemaError", base);
  py::register_exception<UnknownEntity>(m, "UnknownEntity", base);
  py::register_exception<FabricatedEvidence>(m, "FabricatedEvidence", base);
  py::register_exception<UnreachableTarget>(m, "UnreachableTarget", base);
  py::register_exception<UnsatisfiablePlant>(m, "UnsatisfiablePlant", base);

  m.def("subtype_catalog", [] {
    py::list out;
    for (const auto& s : subtype_catalog()) {
      py::dict d;
      d["slug"] = std::string(s.slug);
      d["category"] = std::string(to_string(s.category));
      d["name"] = std::string(s.name);
      d["definition"] = std::string(s.definition_text);
      out.append(d);
    }
    return out;
  });

  m.def("generate",
        [](const std::vector<std::string>& plants, std::uint64_t seed, const std::string& broker_id,
           int page_count, int padding, int form_stages) {
          return canonical_dump(
              trace_to_json(generate(make_spec(plants, seed, broker_id, page_count, padding, form_stages))));
        },
        py::arg("plants"), py::arg("seed"), py::arg("broker_id") = "broker", py::arg("page_count") = 0,
        py::arg("padding") = 0, py::arg("form_stages") = 0);

  m.def("generate_corpus", [](int n, std::uint64_t seed, const std::string& mix) {
    CorpusMix cm;
    if (mix == "table4") cm = CorpusMix::table4();
    else if (mix != "none") throw PreconditionError("unknown mix '" + mix + "'");
    py::list traces;
    TruthLabels truth;
    for (const auto& it : generate_corpus(n, seed, cm)) {
      traces.append(canonical_dump(trace_to_json(it.trace)));
      truth[it.trace.broker_id] = it.truth;
    }
    return py::make_tuple(traces, canonical_dump(truth_to_json(truth)));
  });

  m.def("validate_trace", [](const std::string& trace) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& v : validate_trace(trace_of(trace))) out.emplace_back(v.entity_id, v.message);
    return out;
  });

  m.def("detect_all",
        [](const std::string& trace, const std::string& config) {
          return canonical_dump(report_to_json(detect_all(trace_of(trace), detector_config(config))));
        },
        py::arg("trace"), py::arg("config") = "");

  m.def("validate_report", [](const std::string& report, const std::optional<std::string>& trace) {
    const auto r = report_from_json(parse_document(report));
    std::vector<std::pair<std::string, std::string>> out;
    std::optional<WorkflowTrace> t;
    if (trace) t = trace_of(*trace);
    for (const auto& v : validate_report(r, t ? &*t : nullptr)) out.emplace_back(v.entity_id, v.message);
    return out;
  });

  m.def("run_session",
        [](const std::string& trace, const std::optional<std::string>& fault, int step, int budget) {
          const auto bp = blueprint_of(trace, fault, step);
          std::string broker = bp.trace.broker_id;
          py::gil_scoped_release release;
          return canonical_dump(session_log_to_json(broker, run_and_verify(bp, {}, budget)));
        },
        py::arg("trace"), py::arg("fault") = py::none(), py::arg("step") = 0, py::arg("budget") = 100);

  m.def("agent_run",
        [](const std::string& trace, const std::optional<std::string>& fault, int step) {
          const auto bp = blueprint_of(trace, fault, step);
          py::gil_scoped_release release;
          return canonical_dump(report_to_json(agent_run(bp, builtin_classifier())));
        },
        py::arg("trace"), py::arg("fault") = py::none(), py::arg("step") = 0);

  m.def("submit_count", [] { return PortalSession::global_submit_count(); });

  m.def("classification_metrics", [](std::int64_t tp, std::int64_t fp, std::int64_t fn, std::int64_t tn) {
    const auto ms = classification_metrics({tp, fp, fn, tn});
    py::dict d;
    d["accuracy"] = ratio_dict(ms.accuracy);
    d["precision"] = ratio_dict(ms.precision);
    d["recall"] = ratio_dict(ms.recall);
    d["f1"] = ratio_dict(ms.f1);
    return d;
  });

  m.def("cohen_kappa", &cohen_kappa);

  m.def("wald", [](std::int64_t positives, std::int64_t n) {
    const auto c = wald(positives, n);
    py::dict d;
    d["p_hat"] = c.p_hat;
    d["half_width"] = c.half_width;
    d["ci_low"] = c.ci_low;
    d["ci_high"] = c.ci_high;
    return d;
  });

  m.def("evaluate", [](const std::vector<std::string>& reports, const std::string& truth,
                       const std::vector<std::string>& traces) {
    std::vector<AuditReport> rs;
    for (const auto& r : reports) rs.push_back(report_from_json(parse_document(r)));
    std::map<std::string, WorkflowTrace> ts;
    for (const auto& t : traces) {
      auto tr = trace_of(t);
      ts[tr.broker_id] = std::move(tr);
    }
    return canonical_dump(metrics_to_json(evaluate(rs, truth_from_json(parse_document(truth)), ts)));
  });

  m.def("assemble", [](int level) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& s : assemble(level, subtype_catalog(), builtin_scenarios()).sections) {
      out.emplace_back(std::string(to_string(s.tag)), s.body);
    }
    return out;
  });

  m.def("gate_response", [](const std::string& body, const std::string& trace) {
    const auto g = gate_response(body, trace_of(trace));
    py::object report = py::none();
    if (g.report) report = py::str(canonical_dump(report_to_json(*g.report)));
    return py::make_tuple(report, g.reason);
  });

  m.def("run_command", [](const std::vector<std::string>& args) {
    std::vector<std::string> argv{"dpaudit"};
    argv.insert(argv.end(), args.begin(), args.end());
    std::ostringstream out, err;
    int code;
    {
      py::gil_scoped_release release;
      code = run_command(argv, out, err);
    }
    return py::make_tuple(code, out.str(), err.str());
  });
}
