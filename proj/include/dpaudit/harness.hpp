#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "dpaudit/serialize.hpp"
#include "dpaudit/synth.hpp"
#include "dpaudit/taxonomy.hpp"
#include "dpaudit/trace.hpp"

namespace dpaudit {

// Anomalies the session loop can observe. Mapped onto FailureCategory by
// classify_failure.
enum class RawIssue {
  Crash,
  Timeout,
  BudgetExhausted,
  MalformedInternalState,
  Captcha,
  PdfOnly,
  BrokenPolicyLink,
  NothingDiscoverable,
  UnexposedFormPage,
  Unknown
};

std::string_view to_string(RawIssue issue);

// Executable portal: a state machine over the blueprint's pages. Every
// transition is logged; the terminal submit transition exists so that its
// count can be asserted to stay at zero.
class PortalSession {
 public:
  explicit PortalSession(const PortalBlueprint& blueprint);

  const PortalBlueprint& blueprint() const { return *blueprint_; }
  const PageState& cursor() const;
  const std::vector<NavigationStep>& step_log() const { return steps_; }
  const std::set<std::string>& exposed() const { return exposed_; }
  const std::set<std::string>& visited_pages() const { return visited_; }
  const std::optional<RawIssue>& fault_state() const { return fault_; }
  int fault_step() const { return fault_step_; }
  int submit_count() const { return submits_; }

  // Each returns false when the action raised a fault (session halts).
  bool click(const InterfaceElement& element);
  bool expand(const InterfaceElement& element);
  bool fill(const FormSpec& form);
  bool next_page(const FormSpec& form, int stage);
  bool open_url(const std::string& page_id);
  // Terminal submission. The protocol never calls this.
  void submit(const FormSpec& form);

  void raise(RawIssue issue);
  bool halted() const { return fault_.has_value(); }

  // Stage index of `form` reached so far; -1 when never filled.
  int stage_reached(const std::string& form_id) const;

  // Process-wide count of terminal submissions across all sessions.
  static std::int64_t global_submit_count();

 private:
  bool before_step();
  bool arrive(const std::string& page_id);
  void log(ActionKind action, std::optional<std::string> element, const std::string& dest);

  const PortalBlueprint* blueprint_;
  TraceIndex index_;
  std::string cursor_;
  std::vector<NavigationStep> steps_;
  std::set<std::string> exposed_;
  std::set<std::string> visited_;
  std::map<std::string, int> stages_;
  std::optional<RawIssue> fault_;
  int fault_step_ = -1;
  int submits_ = 0;
};

struct HarnessPolicy {
  // Link labels matching these phrases are followed first.
  std::vector<std::string> priority_lexicon{
      "privacy", "rights", "request", "access", "california", "ccpa", "do not sell",
      "your data", "submit", "continue", "contact"};
};

struct AuditOutcome {
  bool internal_success = false;
  std::optional<FailureReport> failure;
  // Portal as observed by the session: the blueprint trace with the session's
  // own walk and metadata.
  WorkflowTrace observed;
  std::vector<std::string> form_fields;
};

struct RunResult {
  AuditOutcome outcome;
  CompletionStatus completion;
  std::vector<NavigationStep> steps;
  int submit_count = 0;
};

// Scripted four-stage protocol: find policy and rights pages, read the
// guidance, open every submission mechanism and expose all form stages.
// Never submits. Faults become failure reports on the outcome.
struct ProtocolRun {
  PortalSession session;
  AuditOutcome outcome;
};
ProtocolRun run_protocol(const PortalBlueprint& blueprint, const HarnessPolicy& policy,
                         int budget);

// verified = internal success, no failure report, every form stage exposed.
CompletionStatus verify_completion(const PortalSession& session, const AuditOutcome& outcome);

FailureReport classify_failure(const PortalSession& session, RawIssue issue);

// run_protocol + verify_completion; an unverified run without a failure
// report receives an InteractionFailure report.
RunResult run_and_verify(const PortalBlueprint& blueprint, const HarnessPolicy& policy = {},
                         int budget = 100);

// Share of each failure category among failed runs. Throws PreconditionError
// when no run failed.
std::map<FailureCategory, double> failure_rates(std::span<const RunResult> runs);
std::map<FailureCategory, double> failure_rates(std::span<const FailureCategory> failures);

json session_log_to_json(const std::string& broker_id, const RunResult& run);

}  // namespace dpaudit
