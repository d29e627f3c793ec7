#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "dpaudit/detector.hpp"
#include "dpaudit/harness.hpp"
#include "dpaudit/promptkit.hpp"
#include "dpaudit/synth.hpp"

namespace dpaudit {

// Labels one observed trace.
using Classifier = std::function<AuditReport(const WorkflowTrace& observed)>;

Classifier builtin_classifier(DetectorConfig config = {});
// The transport must outlive the classifier.
Classifier remote_classifier(PromptSpec prompt, Transport& transport, int max_attempts = 3);

// Harness run followed by classification of the observed trace. Unverified
// runs are not classified: all labels absent, failure attached.
AuditReport agent_run(const PortalBlueprint& blueprint, const Classifier& classify,
                      const HarnessPolicy& policy = {}, int budget = 100);

// Runs every blueprint on `threads` workers (0 = hardware concurrency).
// Output order follows input order.
std::vector<AuditReport> agent_run_all(const std::vector<PortalBlueprint>& blueprints,
                                       const Classifier& classify, int threads = 0);

// Assigns at most one fault per trace: broker i gets a fault with
// probability `rate`, the kind drawn uniformly among those the trace supports.
std::vector<PortalBlueprint> plan_faults(const std::vector<WorkflowTrace>& traces, double rate,
                                         std::uint64_t seed);

}  // namespace dpaudit
