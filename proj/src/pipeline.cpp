#include "dpaudit/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <mutex>
#include <random>
#include <thread>

#include "dpaudit/error.hpp"

namespace dpaudit {

Classifier builtin_classifier(DetectorConfig config) {
  config.normalize();
  return [config](const WorkflowTrace& observed) { return detect_all(observed, config); };
}

Classifier remote_classifier(PromptSpec prompt, Transport& transport, int max_attempts) {
  return [prompt = std::move(prompt), &transport, max_attempts](const WorkflowTrace& observed) {
    return classify_remote(observed, prompt, transport, max_attempts).report;
  };
}

AuditReport agent_run(const PortalBlueprint& blueprint, const Classifier& classify,
                      const HarnessPolicy& policy, int budget) {
  auto run = run_and_verify(blueprint, policy, budget);
  const auto& observed = run.outcome.observed;
  if (run.completion.verified_success) {
    auto report = classify(observed);
    report.broker_id = observed.broker_id;
    report.metadata = observed.metadata;
    if (!report.failure) {
      report.completion = run.completion;
    } else {
      report.completion.internal_success = run.completion.internal_success;
      report.completion.verified_success = false;
    }
    return report;
  }
  AuditReport r;
  r.broker_id = observed.broker_id;
  r.labels = absent_labels();
  r.form_fields = run.outcome.form_fields;
  r.completion = run.completion;
  r.failure = run.outcome.failure;
  r.metadata = observed.metadata;
  return r;
}

std::vector<AuditReport> agent_run_all(const std::vector<PortalBlueprint>& blueprints,
                                       const Classifier& classify, int threads) {
  std::vector<AuditReport> out(blueprints.size());
  std::size_t n = threads > 0 ? static_cast<std::size_t>(threads)
                              : std::max(1u, std::thread::hardware_concurrency());
  n = std::min(n, blueprints.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  auto worker = [&] {
    for (std::size_t i = next++; i < blueprints.size(); i = next++) {
      try {
        out[i] = agent_run(blueprints[i], classify);
      } catch (...) {
        std::lock_guard lock(error_mu);
        if (!error) error = std::current_exception();
        next = blueprints.size();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < n; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
  return out;
}

std::vector<PortalBlueprint> plan_faults(const std::vector<WorkflowTrace>& traces, double rate,
                                         std::uint64_t seed) {
  if (rate < 0.0 || rate > 1.0) throw PreconditionError("fault rate must be in [0,1]");
  static constexpr FaultKind kKinds[] = {
      FaultKind::CaptchaPage,        FaultKind::CrashAtStep,
      FaultKind::TimeoutAtStep,      FaultKind::MalformedInternalState,
      FaultKind::PdfOnlyInstructions, FaultKind::BrokenPolicyLink,
      FaultKind::UnexposedFormPage};
  std::vector<PortalBlueprint> out;
  out.reserve(traces.size());
  for (std::size_t i = 0; i < traces.size(); ++i) {
    const auto& t = traces[i];
    std::mt19937_64 rng(splitmix64(seed + i));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    if (u(rng) >= rate) {
      out.push_back(inject_faults(t, {}));
      continue;
    }
    bool multi = false;
    for (const auto& p : t.pages) {
      for (const auto& f : p.forms) multi = multi || f.stage_count() > 1;
    }
    std::vector<FaultKind> kinds;
    for (auto k : kKinds) {
      if (k == FaultKind::UnexposedFormPage && !multi) continue;
      if ((k == FaultKind::CrashAtStep || k == FaultKind::TimeoutAtStep) && t.steps.empty()) continue;
      kinds.push_back(k);
    }
    const auto kind = kinds[rng() % kinds.size()];
    int step = 0;
    if (kind == FaultKind::CrashAtStep || kind == FaultKind::TimeoutAtStep) {
      step = static_cast<int>(rng() % t.steps.size());
    }
    out.push_back(inject_faults(t, {{Fault{kind, step}}}));
  }
  return out;
}

}  // namespace dpaudit
