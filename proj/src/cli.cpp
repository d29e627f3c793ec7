#include "dpaudit/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>

#include <fmt/format.h>

#include "CLI11.hpp"

#include "dpaudit/config.hpp"
#include "dpaudit/corpus.hpp"
#include "dpaudit/eval.hpp"
#include "dpaudit/pipeline.hpp"
#include "dpaudit/probe.hpp"

namespace dpaudit {

namespace {

// Files named in a run and where its manifest goes.
struct RunRecord {
  std::string command;
  std::vector<std::string> argv;
  json config;
  std::vector<fs::path> inputs;
  std::vector<fs::path> outputs;
  fs::path manifest;  // empty: derived from the first output
  std::map<std::string, std::string> input_digests;
  std::string started_at;

  void begin() {
    started_at = utc_now();
    input_digests = digest_paths(inputs);
  }

  fs::path finish() {
    RunManifest m;
    m.command = command;
    m.argv = argv;
    m.config = config;
    m.input_digests = input_digests;
    m.run_id = derive_run_id(argv, input_digests);
    m.output_digests = digest_paths(outputs);
    m.started_at = started_at;
    m.finished_at = utc_now();
    fs::path path = manifest;
    if (path.empty()) {
      if (!outputs.empty() && fs::is_directory(outputs.front())) {
        path = outputs.front() / "manifest.json";
      } else if (!outputs.empty()) {
        path = outputs.front().string() + ".manifest.json";
      } else {
        path = fs::path("dpaudit-runs") / (m.run_id + ".manifest.json");
      }
    }
    write_manifest(path, m);
    return path;
  }
};

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

// Removes stale outputs of a previous run so the directory mirrors this one.
void clear_ext(const fs::path& dir, std::string_view ext) {
  if (!fs::is_directory(dir)) return;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ext) fs::remove(e.path());
  }
}

std::string render(const Table& t, const std::string& format) {
  return format == "csv" ? t.to_csv() : t.to_text();
}

struct Options {
  // global
  std::string config_path;
  bool show_config = false;
  std::string manifest;
  int threads = 0;

  // shared
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string format = "text";

  // synth
  int n = 0;
  std::string mix = "table4";
  std::vector<double> prevalence;

  // audit / agent-run / ablation
  std::string corpus;
  std::string classifier = "builtin";
  int level = 4;
  std::string recording;
  double fault_rate = 0.0;
  std::vector<int> levels{1, 2, 3, 4};
  int m = 50;
  int B = 1000;

  // eval / report
  std::string preds;
  std::string truth;
  std::string style;
  std::string input;

  // probe
  std::string registry;
  std::optional<int> timeout_ms, concurrency, retries;
};

Config effective_config(const Options& o) {
  Config cfg = o.config_path.empty() ? Config{} : load_config(o.config_path);
  apply_environment(cfg);
  return cfg;
}

std::unique_ptr<Transport> make_transport(const Options& o, const Config& cfg) {
  if (o.classifier == "replay") {
    if (o.recording.empty()) throw CLI::ValidationError("--recording", "required for the replay classifier");
    return std::make_unique<ReplayTransport>(recording_from_json(read_document(o.recording)));
  }
  if (o.classifier == "remote") return std::make_unique<HttpTransport>(cfg.llm);
  return nullptr;
}

Classifier make_classifier(const Options& o, const Config& cfg, int level, Transport* transport) {
  if (o.classifier == "builtin") return builtin_classifier(cfg.detector);
  return remote_classifier(assemble(level, subtype_catalog(), builtin_scenarios()), *transport,
                           cfg.max_attempts);
}

std::vector<WorkflowTrace> trace_list(const std::map<std::string, WorkflowTrace>& traces) {
  std::vector<WorkflowTrace> out;
  for (const auto& [_, t] : traces) out.push_back(t);
  return out;
}

void summarize_runs(const std::vector<AuditReport>& reports, std::ostream& out) {
  std::size_t verified = 0;
  std::map<FailureCategory, int> failures;
  for (const auto& r : reports) {
    if (r.completion.verified_success) ++verified;
    else if (r.failure) ++failures[r.failure->category];
  }
  out << fmt::format("{} broker(s): {} verified, {} failed\n", reports.size(), verified,
                     reports.size() - verified);
  for (const auto& [c, k] : failures) out << fmt::format("  {}: {}\n", to_string(c), k);
}

// ---------------------------------------------------------------------------

int cmd_synth(const Options& o, RunRecord& rec, std::ostream& out) {
  CorpusMix mix;
  if (!o.prevalence.empty()) {
    if (o.prevalence.size() != kCategoryCount) {
      throw CLI::ValidationError("--prevalence", "expects 8 values in category order");
    }
    std::copy(o.prevalence.begin(), o.prevalence.end(), mix.prevalence.begin());
  } else if (o.mix == "table4") {
    mix = CorpusMix::table4();
  } else {
    mix.prevalence.fill(0.0);
  }
  const fs::path dir = o.out;
  rec.outputs = {dir};
  rec.begin();
  auto items = generate_corpus(o.n, *o.seed, mix);
  std::vector<WorkflowTrace> traces;
  TruthLabels truth;
  for (auto& it : items) {
    truth.emplace(it.trace.broker_id, it.truth);
    traces.push_back(std::move(it.trace));
  }
  fs::create_directories(dir);
  clear_ext(dir, kTraceExt);
  write_traces(dir, traces);
  write_truth(dir, truth);
  out << fmt::format("wrote {} trace(s) and {} to {}\n", traces.size(), kTruthFile, dir.string());
  return kExitOk;
}

int cmd_audit(const Options& o, const Config& cfg, RunRecord& rec, std::ostream& out) {
  rec.inputs = {o.corpus};
  rec.outputs = {o.out};
  rec.begin();
  const auto traces = read_traces(o.corpus);
  DetectorConfig dc = cfg.detector;
  std::vector<AuditReport> reports;
  for (const auto& [_, t] : traces) reports.push_back(detect_all(t, dc));
  fs::create_directories(o.out);
  clear_ext(o.out, kReportExt);
  write_reports(o.out, reports);
  out << fmt::format("wrote {} report(s) to {}\n", reports.size(), o.out);
  return kExitOk;
}

int cmd_agent_run(const Options& o, const Config& cfg, RunRecord& rec, std::ostream& out) {
  rec.inputs = {o.corpus};
  if (!o.recording.empty()) rec.inputs.push_back(o.recording);
  rec.outputs = {o.out};
  rec.begin();
  const auto traces = read_traces(o.corpus);
  auto transport = make_transport(o, cfg);
  auto classify = make_classifier(o, cfg, o.level, transport.get());
  const auto blueprints = plan_faults(trace_list(traces), o.fault_rate, *o.seed);
  const auto reports = agent_run_all(blueprints, classify, o.threads);
  fs::create_directories(o.out);
  clear_ext(o.out, kReportExt);
  write_reports(o.out, reports);
  summarize_runs(reports, out);
  out << fmt::format("wrote {} report(s) to {}\n", reports.size(), o.out);
  return kExitOk;
}

int cmd_eval(const Options& o, RunRecord& rec, std::ostream& out) {
  const fs::path truth_path = o.truth;
  const fs::path corpus = o.corpus.empty() ? truth_path.parent_path() : fs::path(o.corpus);
  rec.inputs = {o.preds, truth_path};
  if (!corpus.empty()) rec.inputs.push_back(corpus);
  if (!o.out.empty()) rec.outputs = {o.out};
  rec.begin();
  const auto reports = read_reports(o.preds);
  const auto truth = read_truth(truth_path);
  const auto traces = read_traces(corpus.empty() ? fs::path(".") : corpus);
  const auto metrics = evaluate(reports, truth, traces);
  const auto doc = metrics_to_json(metrics);
  if (!o.out.empty()) write_document(o.out, doc);
  if (o.format == "json") {
    out << canonical_dump(doc);
  } else {
    out << render(table3(doc), o.format);
    if (o.format == "text") {
      out << fmt::format("evaluated {} broker(s); {} failed run(s) excluded\n", metrics.n_evaluated,
                         metrics.excluded_failed_runs);
    }
  }
  return kExitOk;
}

int cmd_ablation(const Options& o, const Config& cfg, RunRecord& rec, std::ostream& out,
                 std::ostream& err) {
  rec.inputs = {o.corpus};
  if (!o.recording.empty()) rec.inputs.push_back(o.recording);
  rec.outputs = {o.out};
  rec.begin();
  const auto traces = read_traces(o.corpus);
  const auto truth = read_truth(fs::path(o.corpus) / std::string(kTruthFile));
  auto transport = make_transport(o, cfg);
  const auto blueprints = plan_faults(trace_list(traces), 0.0, *o.seed);

  AblationResult result;
  std::vector<std::vector<AuditReport>> per_level;
  for (int level : o.levels) {
    auto classify = make_classifier(o, cfg, level, transport.get());
    per_level.push_back(agent_run_all(blueprints, classify, o.threads));
    result.levels.push_back({level, evaluate(per_level.back(), truth, traces)});
  }

  // Bootstrap over brokers verified at every level.
  std::set<std::string> common;
  for (const auto& [id, _] : traces) common.insert(id);
  for (const auto& reports : per_level) {
    for (const auto& r : reports) {
      if (!r.completion.verified_success) common.erase(r.broker_id);
    }
  }
  std::vector<std::vector<EvaluatedRun>> runs;
  for (const auto& reports : per_level) {
    std::vector<AuditReport> kept;
    for (const auto& r : reports) {
      if (common.count(r.broker_id)) kept.push_back(r);
    }
    runs.push_back(kept.empty() ? std::vector<EvaluatedRun>{} : evaluated_runs(kept, truth, traces));
  }
  for (std::size_t i = 1; i < runs.size(); ++i) {
    const auto label = fmt::format("L{}-L{}", o.levels[i], o.levels[i - 1]);
    for (const char* name : kMetricNames) {
      if (runs[i].empty()) break;
      try {
        result.deltas.emplace_back(
            label, bootstrap_delta(name, named_metric(name), runs[i - 1], runs[i],
                                   {o.m, o.B, *o.seed, 0}));
      } catch (const PreconditionError& e) {
        err << fmt::format("warning: {} {} skipped: {}\n", label, name, e.what());
      }
    }
  }
  write_document(o.out, ablation_to_json(result));
  out << render(table2(ablation_from_json(ablation_to_json(result))), o.format);
  return kExitOk;
}

int cmd_report(const Options& o, RunRecord& rec, std::ostream& out) {
  rec.inputs = {o.input};
  if (!o.truth.empty()) rec.inputs.push_back(o.truth);
  if (!o.out.empty()) rec.outputs = {o.out};
  rec.begin();

  std::string text;
  json doc;
  if (o.style == "table2") {
    doc = read_document(o.input);
    text = render(table2(ablation_from_json(doc)), o.format);
  } else if (o.style == "table3") {
    doc = read_document(o.input);
    text = render(table3(doc), o.format);
  } else {
    auto prevalence_of = [](const fs::path& p) -> json {
      if (fs::is_directory(p)) {
        std::vector<AuditReport> verified;
        for (auto& r : read_reports(p)) {
          if (r.completion.verified_success) verified.push_back(std::move(r));
        }
        return prevalence_to_json(prevalence(verified));
      }
      auto d = read_document(p);
      if (d.contains("brokers")) return prevalence_to_json(prevalence(truth_from_json(d)));
      return d;
    };
    const auto primary = prevalence_of(o.input);
    if (!o.truth.empty()) {
      const auto reference = prevalence_of(o.truth);
      doc = {{"schema_version", kSchemaVersion}, {"truth", reference}, {"estimate", primary}};
      text = render(table4(reference, &primary), o.format);
    } else {
      doc = primary;
      text = render(table4(primary, nullptr), o.format);
    }
  }
  if (o.format == "json") text = canonical_dump(doc);
  if (!o.out.empty()) write_text(o.out, text);
  out << text;
  return kExitOk;
}

int cmd_probe(const Options& o, const Config& cfg, RunRecord& rec, std::ostream& out) {
  rec.inputs = {o.registry};
  rec.outputs = {o.out};
  rec.begin();
  auto opts = ProbeOptions::from(cfg.probe);
  if (o.timeout_ms) opts.timeout_ms = *o.timeout_ms;
  if (o.concurrency) opts.concurrency = *o.concurrency;
  if (o.retries) opts.retries = *o.retries;
  const auto entries = probe(read_registry(o.registry), opts);
  write_text(o.out, registry_to_csv(entries));
  const auto reachable = std::count_if(entries.begin(), entries.end(), [](const RegistryEntry& e) {
    return e.probe_result == ProbeResult::Reachable;
  });
  out << fmt::format("probed {} url(s): {} reachable, {} unreachable\n", entries.size(), reachable,
                     static_cast<long>(entries.size()) - reachable);
  return kExitOk;
}

}  // namespace

int run_command(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Dark-pattern audit of privacy-request workflows", "dpaudit"};
  app.set_help_all_flag("--help-all", "Expand all help");
  app.add_option("--config", o.config_path, "Settings file")->check(CLI::ExistingFile);
  app.add_flag("--show-config", o.show_config, "Print the effective settings and exit");
  app.add_option("--manifest", o.manifest, "Run manifest path");
  app.add_option("--threads", o.threads, "Worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
  app.require_subcommand(0, 1);

  auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus with ground truth");
  synth->add_option("--n", o.n, "Number of brokers")->required()->check(CLI::PositiveNumber);
  synth->add_option("--seed", o.seed, "Random seed")->required();
  synth->add_option("--out", o.out, "Corpus directory")->required();
  synth->add_option("--mix", o.mix, "Planted prevalence mix")
      ->check(CLI::IsMember({"table4", "none"}));
  synth->add_option("--prevalence", o.prevalence, "Eight per-category rates (overrides --mix)")
      ->delimiter(',')
      ->check(CLI::Range(0.0, 1.0));

  auto* audit = app.add_subcommand("audit", "Run the rule detector over a corpus");
  audit->add_option("corpus", o.corpus, "Corpus directory")->required()->check(CLI::ExistingDirectory);
  audit->add_option("--out", o.out, "Predictions directory")->required();

  auto add_classifier = [&](CLI::App* sub) {
    sub->add_option("--classifier", o.classifier, "builtin, replay or remote")
        ->check(CLI::IsMember({"builtin", "replay", "remote"}));
    sub->add_option("--recording", o.recording, "Recorded responses for replay")
        ->check(CLI::ExistingFile);
  };

  auto* agent = app.add_subcommand("agent-run", "Walk each portal with the harness, then classify");
  agent->add_option("corpus", o.corpus, "Corpus directory")->required()->check(CLI::ExistingDirectory);
  agent->add_option("--out", o.out, "Predictions directory")->required();
  agent->add_option("--seed", o.seed, "Random seed")->required();
  agent->add_option("--level", o.level, "Prompt level for model classifiers")->check(CLI::Range(1, 4));
  agent->add_option("--fault-rate", o.fault_rate, "Share of runs given an injected fault")
      ->check(CLI::Range(0.0, 1.0));
  add_classifier(agent);

  auto* eval = app.add_subcommand("eval", "Score predictions against ground truth");
  eval->add_option("preds", o.preds, "Predictions directory")->required()->check(CLI::ExistingDirectory);
  eval->add_option("truth", o.truth, "Ground-truth labels file")->required()->check(CLI::ExistingFile);
  eval->add_option("--corpus", o.corpus, "Trace directory (default: truth file's directory)");
  eval->add_option("--out", o.out, "Metrics document");
  eval->add_option("--format", o.format, "text, csv or json")
      ->check(CLI::IsMember({"text", "csv", "json"}));

  auto* ablation = app.add_subcommand("ablation", "Compare prompt levels with bootstrap deltas");
  ablation->add_option("corpus", o.corpus, "Corpus directory with truth.labels")
      ->required()
      ->check(CLI::ExistingDirectory);
  ablation->add_option("--out", o.out, "Ablation document")->required();
  ablation->add_option("--seed", o.seed, "Random seed")->required();
  ablation->add_option("--levels", o.levels, "Prompt levels in order")
      ->delimiter(',')
      ->check(CLI::Range(1, 4));
  ablation->add_option("--m", o.m, "Brokers per resample")->check(CLI::PositiveNumber);
  ablation->add_option("--B", o.B, "Resamples")->check(CLI::PositiveNumber);
  ablation->add_option("--format", o.format, "text or csv")->check(CLI::IsMember({"text", "csv"}));
  add_classifier(ablation);

  auto* report = app.add_subcommand("report", "Emit a results table");
  report->add_option("--style", o.style, "table2, table3 or table4")
      ->required()
      ->check(CLI::IsMember({"table2", "table3", "table4"}));
  report->add_option("input", o.input,
                     "Ablation or metrics document; for table4 a predictions directory, "
                     "truth file or prevalence document")
      ->required()
      ->check(CLI::ExistingPath);
  report->add_option("--truth", o.truth, "Reference for table4")->check(CLI::ExistingPath);
  report->add_option("--format", o.format, "text, csv or json")
      ->check(CLI::IsMember({"text", "csv", "json"}));
  report->add_option("--out", o.out, "Also write the table here");

  auto* probe_cmd = app.add_subcommand("probe", "Check registry URLs for reachability");
  probe_cmd->add_option("registry", o.registry, "CSV with header broker_name,url")
      ->required()
      ->check(CLI::ExistingFile);
  probe_cmd->add_option("--out", o.out, "Registry CSV with probe results")->required();
  probe_cmd->add_option("--timeout-ms", o.timeout_ms, "Per-request timeout")->check(CLI::PositiveNumber);
  probe_cmd->add_option("--concurrency", o.concurrency, "Parallel fetches")->check(CLI::PositiveNumber);
  probe_cmd->add_option("--retries", o.retries, "Retries after a network error")
      ->check(CLI::NonNegativeNumber);

  std::vector<std::string> args(argv.size() > 1 ? argv.begin() + 1 : argv.end(), argv.end());
  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << "run with --help for usage\n";
    return kExitUsage;
  }

  try {
    const auto cfg = effective_config(o);
    if (o.show_config) {
      out << config_to_text(cfg);
      return kExitOk;
    }
    if (app.get_subcommands().empty()) {
      err << "error: a subcommand is required\nrun with --help for usage\n";
      return kExitUsage;
    }
    auto* sub = app.get_subcommands().front();
    RunRecord rec;
    rec.command = sub->get_name();
    rec.argv = argv.empty() ? argv : std::vector<std::string>(argv.begin() + 1, argv.end());
    rec.config = config_to_json(cfg);
    rec.manifest = o.manifest;

    int code = kExitOk;
    if (sub == synth) code = cmd_synth(o, rec, out);
    else if (sub == audit) code = cmd_audit(o, cfg, rec, out);
    else if (sub == agent) code = cmd_agent_run(o, cfg, rec, out);
    else if (sub == eval) code = cmd_eval(o, rec, out);
    else if (sub == ablation) code = cmd_ablation(o, cfg, rec, out, err);
    else if (sub == report) code = cmd_report(o, rec, out);
    else if (sub == probe_cmd) code = cmd_probe(o, cfg, rec, out);
    rec.finish();
    return code;
  } catch (const CLI::ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }
}

}  // namespace dpaudit
