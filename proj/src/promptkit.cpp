#include "dpaudit/promptkit.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "dpaudit/digest.hpp"
#include "dpaudit/scenarios_data.hpp"

namespace dpaudit {

std::string_view to_string(SectionTag tag) {
  switch (tag) {
    case SectionTag::Role: return "ROLE";
    case SectionTag::Goal: return "GOAL";
    case SectionTag::InteractionPlan: return "INTERACTION_PLAN";
    case SectionTag::Taxonomy: return "TAXONOMY";
    case SectionTag::FewshotScenarios: return "FEWSHOT_SCENARIOS";
    case SectionTag::CotScaffold: return "COT_SCAFFOLD";
    case SectionTag::EvaluationInstructions: return "EVALUATION_INSTRUCTIONS";
    case SectionTag::DecisionRules: return "DECISION_RULES";
    case SectionTag::EvidenceRequirements: return "EVIDENCE_REQUIREMENTS";
    case SectionTag::OutputSchema: return "OUTPUT_SCHEMA";
  }
  return "?";
}

std::vector<ScenarioExample> scenarios_from_json(const json& doc) {
  auto fail = [](const std::string& m) -> void { throw SchemaError("scenarios: " + m); };
  if (!doc.is_object() || doc.value("schema_version", 0) != kSchemaVersion ||
      !doc.contains("scenarios") || !doc["scenarios"].is_array()) {
    fail("expected {schema_version: 1, scenarios: [...]}");
  }
  std::vector<ScenarioExample> out;
  for (const auto& s : doc["scenarios"]) {
    try {
      auto slug = s.at("subtype").get<std::string>();
      auto id = subtype_from_slug(slug);
      if (!id) fail("unknown subtype '" + slug + "'");
      ScenarioExample ex{*id, s.at("problematic_interface").get<std::string>(),
                         s.at("violated_expectation").get<std::string>(),
                         s.at("resulting_harm").get<std::string>(), std::nullopt};
      if (s.contains("cot_trace") && !s["cot_trace"].is_null()) {
        const auto& c = s["cot_trace"];
        ex.cot_trace = CotTrace{c.at("trigger_element").get<std::string>(),
                                c.at("observed_behavior").get<std::string>(),
                                c.at("revealing_actions").get<std::string>(),
                                c.at("dynamic_outcome").get<std::string>(),
                                c.at("rationale_steps").get<std::vector<std::string>>()};
      }
      out.push_back(std::move(ex));
    } catch (const json::exception& e) {
      fail(e.what());
    }
  }
  return out;
}

std::vector<ScenarioExample> builtin_scenarios() {
  return scenarios_from_json(parse_document(embedded::kScenarios));
}

bool PromptSpec::has(SectionTag tag) const {
  return std::any_of(sections.begin(), sections.end(),
                     [&](const PromptSection& s) { return s.tag == tag; });
}

std::string PromptSpec::render() const {
  std::string out;
  for (const auto& s : sections) {
    if (!out.empty()) out += "\n\n";
    out += fmt::format("[{}]\n{}", to_string(s.tag), s.body);
  }
  return out;
}

namespace {

std::string taxonomy_body(std::span<const Subtype> catalog) {
  std::string out;
  for (auto c : kAllCategories) {
    out += fmt::format("{}: {}\n", to_string(c), category_definition(c));
    for (const auto& s : catalog) {
      if (s.category == c) out += fmt::format("  - {} ({}): {}\n", s.name, s.slug, s.definition_text);
    }
  }
  return out;
}

std::string fewshot_body(const std::vector<const ScenarioExample*>& ordered) {
  std::string out;
  for (const auto* ex : ordered) {
    out += fmt::format("Scenario [{}]\n  Interface: {}\n  Expectation violated: {}\n  Harm: {}\n",
                       subtype_info(ex->subtype).slug, ex->problematic_interface,
                       ex->violated_expectation, ex->resulting_harm);
  }
  return out;
}

std::string cot_body(const std::vector<const ScenarioExample*>& ordered) {
  std::string out =
      "Before labeling, reason through each candidate pattern in this order: the element that "
      "triggers it, what the interface did, which actions revealed it, how the workflow outcome "
      "changed, then the step-by-step rationale. Worked traces:\n";
  for (const auto* ex : ordered) {
    const auto& c = *ex->cot_trace;
    out += fmt::format("Trace [{}]\n  Trigger: {}\n  Observed: {}\n  Revealed by: {}\n  Outcome: {}\n",
                       subtype_info(ex->subtype).slug, c.trigger_element, c.observed_behavior,
                       c.revealing_actions, c.dynamic_outcome);
    for (std::size_t i = 0; i < c.rationale_steps.size(); ++i) {
      out += fmt::format("  {}. {}\n", i + 1, c.rationale_steps[i]);
    }
  }
  return out;
}

constexpr std::string_view kRole =
    "You are an auditor of consumer privacy-request workflows. You judge interfaces against what a "
    "reasonable consumer expects and you only report what the recorded trace shows.";

constexpr std::string_view kGoal =
    "Audit one data broker's right-to-access workflow. Report the submission channels you found, "
    "the fields of every request form, a present/absent label for each of the eight categories, "
    "and for every present label at least one finding tied to evidence in the trace.";

constexpr std::string_view kPlan =
    "1. Start from the home page and locate the privacy policy.\n"
    "2. Find the sections describing consumer rights and how to submit requests.\n"
    "3. Open every submission mechanism the guidance points to.\n"
    "4. Expose every form field, including later form pages. Do not submit any request.";

constexpr std::string_view kEvaluation =
    "Judge each category in two parts. First decide whether the interface violates a reasonable "
    "expectation of clarity, symmetry or ease of execution. Then name the harm mechanism (one "
    "subtype from the taxonomy) through which it impairs the request.";

constexpr std::string_view kDecision =
    "Label a category present when at least one of its subtypes is supported by the trace. A "
    "workflow may carry several categories. When a path cannot be reached, report an execution "
    "failure instead of a pattern.";

constexpr std::string_view kEvidence =
    "Every finding cites one or more evidence references: page_id, element_or_disclosure_id and a "
    "quote copied verbatim from that entity's text or label. References that do not resolve in the "
    "trace invalidate the report.";

}  // namespace

std::string output_schema_descriptor() {
  json labels = json::object();
  for (auto c : kAllCategories) labels[std::string(to_string(c))] = "present|absent";
  json schema{
      {"schema_version", 1},
      {"broker_id", "string"},
      {"detected_channels", json::array({"webform|email|phone|postal|external_app"})},
      {"form_fields", json::array({"string"})},
      {"labels", labels},
      {"findings",
       json::array({{{"category", "Category"},
                     {"subtype", "subtype slug"},
                     {"evidence", json::array({{{"page_id", "string"},
                                                {"element_or_disclosure_id", "string"},
                                                {"quote", "verbatim substring"}}})},
                     {"assessment",
                      {{"expectation_violation", "string"}, {"harm_mechanism", "subtype slug"}}},
                     {"confidence", "number in [0,1]"}}})},
      {"completion",
       {{"internal_success", "bool"}, {"verified_success", "bool"}, {"reason", "string"}}},
      {"metadata",
       {{"duration_ms", "int"}, {"step_count", "int"}, {"internal_success", "bool"}}},
  };
  return schema.dump();
}

PromptSpec assemble(int level, std::span<const Subtype> catalog,
                    const std::vector<ScenarioExample>& scenarios) {
  if (level < 1 || level > 4) throw PreconditionError("prompt level must be in 1..4");

  std::vector<const ScenarioExample*> ordered;
  if (level >= 3) {
    std::vector<std::string> missing;
    std::vector<std::string> missing_cot;
    for (const auto& s : catalog) {
      auto it = std::find_if(scenarios.begin(), scenarios.end(),
                             [&](const ScenarioExample& e) { return e.subtype == s.id; });
      if (it == scenarios.end()) {
        missing.emplace_back(s.slug);
        continue;
      }
      ordered.push_back(&*it);
      if (!it->cot_trace) missing_cot.emplace_back(s.slug);
    }
    if (!missing.empty()) {
      throw PreconditionError(fmt::format("no scenario for {} subtype(s): {}", missing.size(),
                                          fmt::join(missing, ", ")));
    }
    if (level == 4 && !missing_cot.empty()) {
      throw PreconditionError(fmt::format("no reasoning trace for {} subtype(s): {}",
                                          missing_cot.size(), fmt::join(missing_cot, ", ")));
    }
  }

  PromptSpec spec;
  spec.level = level;
  auto add = [&](SectionTag tag, std::string body) { spec.sections.push_back({tag, std::move(body)}); };
  if (level >= 2) add(SectionTag::Role, std::string(kRole));
  add(SectionTag::Goal, std::string(kGoal));
  add(SectionTag::InteractionPlan, std::string(kPlan));
  add(SectionTag::Taxonomy, taxonomy_body(catalog));
  if (level >= 3) add(SectionTag::FewshotScenarios, fewshot_body(ordered));
  if (level >= 4) add(SectionTag::CotScaffold, cot_body(ordered));
  add(SectionTag::EvaluationInstructions, std::string(kEvaluation));
  add(SectionTag::DecisionRules, std::string(kDecision));
  add(SectionTag::EvidenceRequirements, std::string(kEvidence));
  add(SectionTag::OutputSchema, output_schema_descriptor());
  return spec;
}

// ---------------------------------------------------------------------------

std::string TransportRequest::digest() const {
  std::string buf;
  for (const auto* part : {&prompt, &trace_document, &output_schema}) {
    buf += std::to_string(part->size());
    buf += ':';
    buf += *part;
  }
  return sha256_hex(buf);
}

GateResult gate_response(const std::string& body, const WorkflowTrace& trace) {
  GateResult g;
  AuditReport report;
  try {
    report = report_from_json(parse_document(body));
  } catch (const SchemaError& e) {
    g.reason = e.what();
    return g;
  }
  if (report.broker_id != trace.broker_id) {
    g.reason = "broker_id '" + report.broker_id + "' does not match trace";
    return g;
  }
  const auto violations = validate_report(report, &trace);
  if (!violations.empty()) {
    g.reason = violations.front().entity_id + ": " + violations.front().message;
    return g;
  }
  g.report = std::move(report);
  return g;
}

ClassifyResult classify_remote(const WorkflowTrace& trace, const PromptSpec& prompt,
                               Transport& transport, int max_attempts) {
  if (max_attempts < 1) throw PreconditionError("max_attempts must be >= 1");
  if (!validate_trace(trace).empty()) throw PreconditionError("invalid trace " + trace.broker_id);
  const TransportRequest request{prompt.render(), canonical_dump(trace_to_json(trace)),
                                 output_schema_descriptor()};
  ClassifyResult out;
  bool last_network = false;
  while (out.attempts < max_attempts) {
    ++out.attempts;
    try {
      auto response = transport.send(request);
      last_network = false;
      auto gate = gate_response(response.body, trace);
      if (gate.report) {
        out.report = std::move(*gate.report);
        return out;
      }
      out.rejections.push_back(gate.reason);
    } catch (const TransportError& e) {
      last_network = true;
      out.rejections.push_back(std::string("transport: ") + e.what());
    }
  }
  auto& r = out.report;
  r.broker_id = trace.broker_id;
  r.labels = absent_labels();
  r.metadata = trace.metadata;
  r.completion = {trace.metadata.internal_success, false, "classifier output rejected"};
  FailureReport f;
  f.category = last_network ? FailureCategory::AutomationInstability : FailureCategory::AgentInstability;
  f.narrative = fmt::format("{} attempt(s) rejected; last: {}", out.attempts, out.rejections.back());
  r.failure = std::move(f);
  return out;
}

}  // namespace dpaudit
