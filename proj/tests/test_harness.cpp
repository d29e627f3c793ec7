#include "doctest.h"

#include <numeric>

#include "dpaudit/error.hpp"
#include "dpaudit/harness.hpp"
#include "fixtures.hpp"

using namespace dpaudit;

namespace {

WorkflowTrace portal(std::uint64_t seed, int stages = 2) {
  PlantSpec spec;
  spec.broker_id = "broker_h";
  spec.seed = seed;
  spec.shape.page_count = 3;
  spec.shape.form_stages = stages;
  return generate(spec);
}

PortalBlueprint with_fault(const WorkflowTrace& t, FaultKind kind, int step = 0) {
  return inject_faults(t, {{{kind, step}}});
}

}  // namespace

TEST_CASE("benign three-page portal is verified with every field listed") {
  const auto t = fixtures::benign_portal();
  const auto run = run_and_verify(inject_faults(t, {}));
  CHECK(run.completion.verified_success);
  CHECK_FALSE(run.outcome.failure.has_value());
  CHECK(run.outcome.form_fields ==
        std::vector<std::string>{"Full name", "Email address", "State of residence"});
  CHECK(run.submit_count == 0);
}

TEST_CASE("each fault kind maps to its failure category") {
  const std::vector<std::pair<FaultKind, FailureCategory>> cases{
      {FaultKind::CaptchaPage, FailureCategory::SecurityBarrier},
      {FaultKind::CrashAtStep, FailureCategory::AutomationInstability},
      {FaultKind::TimeoutAtStep, FailureCategory::AutomationInstability},
      {FaultKind::MalformedInternalState, FailureCategory::AgentInstability},
      {FaultKind::PdfOnlyInstructions, FailureCategory::ContentFormatLimitation},
      {FaultKind::BrokenPolicyLink, FailureCategory::NavigationFailure},
      {FaultKind::UnexposedFormPage, FailureCategory::InteractionFailure}};
  for (const auto& [kind, category] : cases) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto t = portal(seed);
      const auto run = run_and_verify(with_fault(t, kind, 1));
      CAPTURE(to_string(kind));
      REQUIRE(run.outcome.failure.has_value());
      CHECK(run.outcome.failure->category == category);
      CHECK_FALSE(run.completion.verified_success);
      CHECK(run.submit_count == 0);
    }
  }
}

TEST_CASE("step budget of one on a deep portal") {
  const auto run = run_and_verify(inject_faults(fixtures::benign_portal(), {}), {}, 1);
  REQUIRE(run.outcome.failure.has_value());
  CHECK(run.outcome.failure->category == FailureCategory::AutomationInstability);
}

TEST_CASE("identical inputs give identical step logs") {
  const auto bp = with_fault(portal(4), FaultKind::TimeoutAtStep, 2);
  const auto a = run_and_verify(bp);
  const auto b = run_and_verify(bp);
  REQUIRE(a.steps.size() == b.steps.size());
  for (std::size_t i = 0; i < a.steps.size(); ++i) {
    CHECK(a.steps[i].destination_page == b.steps[i].destination_page);
    CHECK(a.steps[i].element_id == b.steps[i].element_id);
  }
}

TEST_CASE("verify_completion") {
  const auto bp = inject_faults(portal(2), {});
  auto pr = run_protocol(bp, {}, 100);
  REQUIRE(pr.outcome.internal_success);

  SUBCASE("internal success, all stages exposed") {
    CHECK(verify_completion(pr.session, pr.outcome).verified_success);
  }
  SUBCASE("internal success overridden by a failure report") {
    pr.outcome.failure = FailureReport{FailureCategory::NavigationFailure, {}, {0}, "x", false};
    const auto c = verify_completion(pr.session, pr.outcome);
    CHECK(c.internal_success);
    CHECK_FALSE(c.verified_success);
  }
  SUBCASE("second form stage never exposed") {
    const auto fault = with_fault(portal(2), FaultKind::UnexposedFormPage);
    auto partial = run_protocol(fault, {}, 100);
    partial.outcome.failure.reset();
    partial.outcome.internal_success = true;
    const auto c = verify_completion(partial.session, partial.outcome);
    CHECK_FALSE(c.verified_success);
    CHECK(c.reason.find("InteractionFailure") != std::string::npos);
  }
}

TEST_CASE("classify_failure maps raw issues") {
  const auto bp = inject_faults(portal(5), {});
  PortalSession s(bp);
  CHECK(classify_failure(s, RawIssue::Crash).category == FailureCategory::AutomationInstability);
  CHECK(classify_failure(s, RawIssue::PdfOnly).category ==
        FailureCategory::ContentFormatLimitation);
  CHECK(classify_failure(s, RawIssue::NothingDiscoverable).category ==
        FailureCategory::NavigationFailure);
  const auto unknown = classify_failure(s, RawIssue::Unknown);
  CHECK(unknown.category == FailureCategory::AgentInstability);
  CHECK(unknown.needs_review);
}

TEST_CASE("failure_rates") {
  using FC = FailureCategory;
  SUBCASE("two automation, one security, one interaction") {
    const std::vector<FC> f{FC::AutomationInstability, FC::AutomationInstability,
                            FC::SecurityBarrier, FC::InteractionFailure};
    const auto r = failure_rates(f);
    CHECK(r.at(FC::AutomationInstability) == doctest::Approx(0.5));
    CHECK(r.at(FC::SecurityBarrier) == doctest::Approx(0.25));
    CHECK(r.at(FC::InteractionFailure) == doctest::Approx(0.25));
    const double sum = std::accumulate(r.begin(), r.end(), 0.0,
                                       [](double a, const auto& kv) { return a + kv.second; });
    CHECK(std::abs(sum - 1.0) < 1e-9);
  }
  SUBCASE("single failure") {
    const std::vector<FC> f{FC::NavigationFailure};
    CHECK(failure_rates(f).at(FC::NavigationFailure) == 1.0);
  }
  SUBCASE("all runs completed") {
    std::vector<RunResult> runs{run_and_verify(inject_faults(portal(1), {}))};
    CHECK_THROWS_AS(failure_rates(runs), PreconditionError);
  }
  SUBCASE("completed runs stay out of the denominator") {
    std::vector<RunResult> runs{run_and_verify(inject_faults(portal(1), {})),
                                run_and_verify(with_fault(portal(1), FaultKind::CaptchaPage))};
    CHECK(failure_rates(runs).at(FC::SecurityBarrier) == 1.0);
  }
}

TEST_CASE("sessions never submit") {
  const auto before = PortalSession::global_submit_count();
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto run = run_and_verify(inject_faults(portal(seed, 3), {}));
    CHECK(run.submit_count == 0);
  }
  CHECK(PortalSession::global_submit_count() == before);
}

TEST_CASE("session log document") {
  const auto run = run_and_verify(with_fault(portal(6), FaultKind::CaptchaPage));
  const auto doc = session_log_to_json("broker_h", run);
  CHECK(doc.at("schema_version") == 1);
  CHECK(doc.at("broker_id") == "broker_h");
  CHECK(doc.contains("steps"));
}
