#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <span>
#include <string>
#include <vector>

#include "dpaudit/error.hpp"
#include "dpaudit/serialize.hpp"
#include "dpaudit/taxonomy.hpp"
#include "dpaudit/trace.hpp"

namespace dpaudit {

enum class SectionTag {
  Role,
  Goal,
  InteractionPlan,
  Taxonomy,
  FewshotScenarios,
  CotScaffold,
  EvaluationInstructions,
  DecisionRules,
  EvidenceRequirements,
  OutputSchema
};

std::string_view to_string(SectionTag tag);

struct CotTrace {
  std::string trigger_element;
  std::string observed_behavior;
  std::string revealing_actions;
  std::string dynamic_outcome;
  std::vector<std::string> rationale_steps;
};

struct ScenarioExample {
  SubtypeId subtype;
  std::string problematic_interface;
  std::string violated_expectation;
  std::string resulting_harm;
  std::optional<CotTrace> cot_trace;
};

// Scenario library shipped in data/scenarios.json (compiled in).
std::vector<ScenarioExample> builtin_scenarios();
std::vector<ScenarioExample> scenarios_from_json(const json& doc);

struct PromptSection {
  SectionTag tag;
  std::string body;

  friend bool operator==(const PromptSection&, const PromptSection&) = default;
};

struct PromptSpec {
  int level = 1;
  std::vector<PromptSection> sections;

  bool has(SectionTag tag) const;
  // "[TAG]\nbody" blocks joined by blank lines.
  std::string render() const;
};

// Level 1: base sections. 2 adds ROLE, 3 adds FEWSHOT_SCENARIOS, 4 adds
// COT_SCAFFOLD. Throws PreconditionError for a level outside 1..4, when a
// level >= 3 lacks a scenario for some subtype, or level 4 lacks a cot_trace.
PromptSpec assemble(int level, std::span<const Subtype> catalog,
                    const std::vector<ScenarioExample>& scenarios);

// ---------------------------------------------------------------------------
// Transport

// Network-class failure (connection, timeout, HTTP status).
class TransportError : public Error {
 public:
  using Error::Error;
};

struct TransportRequest {
  std::string prompt;
  std::string trace_document;
  std::string output_schema;

  // sha256 over the three parts, length-prefixed.
  std::string digest() const;
};

struct TransportResponse {
  std::string body;
};

class Transport {
 public:
  virtual ~Transport() = default;
  virtual TransportResponse send(const TransportRequest& request) = 0;
};

class ReplayTransport : public Transport {
 public:
  enum class MissMode { Strict, Fallback };

  ReplayTransport(std::map<std::string, std::string> recording, MissMode mode = MissMode::Strict,
                  std::string fallback = {});
  static ReplayTransport from_json(const json& doc, MissMode mode = MissMode::Strict,
                                   std::string fallback = {});

  TransportResponse send(const TransportRequest& request) override;
  std::size_t calls() const;

 private:
  const std::map<std::string, std::string> recording_;
  const MissMode mode_;
  const std::string fallback_;
  mutable std::mutex mu_;
  std::size_t calls_ = 0;
};

// {schema_version: 1, responses: {digest: body}}
json recording_to_json(const std::map<std::string, std::string>& recording);
std::map<std::string, std::string> recording_from_json(const json& doc);

struct HttpTransportConfig {
  std::string endpoint;  // e.g. https://host/v1/chat/completions
  std::string api_key;
  std::string model;
  double temperature = 0.0;
  int max_in_flight = 4;
  int min_interval_ms = 500;
  int timeout_s = 120;
  std::filesystem::path log_path;  // empty disables logging
};

// Chat-style JSON POST; returns the first choice's message content.
class HttpTransport : public Transport {
 public:
  explicit HttpTransport(HttpTransportConfig config);
  TransportResponse send(const TransportRequest& request) override;

 private:
  void pace();
  void log_exchange(const std::string& request, int status, const std::string& response);

  HttpTransportConfig config_;
  std::counting_semaphore<64> in_flight_;
  std::mutex pace_mu_;
  std::chrono::steady_clock::time_point next_slot_{};
  std::mutex log_mu_;
};

// JSON descriptor of the expected AuditReport document.
std::string output_schema_descriptor();

struct GateResult {
  std::optional<AuditReport> report;
  std::string reason;
};

// Parses and validates one classifier response against the trace: strict
// schema, broker id, report invariants and evidence resolution.
GateResult gate_response(const std::string& body, const WorkflowTrace& trace);

struct ClassifyResult {
  AuditReport report;
  int attempts = 0;
  std::vector<std::string> rejections;
};

// Sends the trace to the transport at most `max_attempts` times. A rejected
// response is retried; when attempts run out the returned report carries a
// failure (AutomationInstability after a network error, else AgentInstability).
ClassifyResult classify_remote(const WorkflowTrace& trace, const PromptSpec& prompt,
                               Transport& transport, int max_attempts = 3);

}  // namespace dpaudit
