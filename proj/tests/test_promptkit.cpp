#include "doctest.h"

#include <algorithm>

#include "dpaudit/detector.hpp"
#include "dpaudit/promptkit.hpp"
#include "dpaudit/synth.hpp"
#include "fuzz.hpp"

using namespace dpaudit;

namespace {

std::vector<SectionTag> tags(const PromptSpec& p) {
  std::vector<SectionTag> out;
  for (const auto& s : p.sections) out.push_back(s.tag);
  return out;
}

WorkflowTrace planted_trace() {
  PlantSpec spec{PlantSpec::of({SubtypeId::SubmissionChannelRestriction,
                                SubtypeId::AmbiguousRightsTerminology}),
                 "broker_p", 8, {}};
  spec.shape.page_count = min_page_count({SubtypeId::SubmissionChannelRestriction,
                                          SubtypeId::AmbiguousRightsTerminology});
  return generate(spec);
}

TransportRequest request_for(const WorkflowTrace& t, const PromptSpec& p) {
  return {p.render(), canonical_dump(trace_to_json(t)), output_schema_descriptor()};
}

class FailingTransport : public Transport {
 public:
  TransportResponse send(const TransportRequest&) override {
    ++calls;
    throw TransportError("connection refused");
  }
  int calls = 0;
};

}  // namespace

TEST_CASE("prompt levels grow monotonically") {
  const auto scenarios = builtin_scenarios();
  std::vector<PromptSpec> levels;
  for (int l = 1; l <= 4; ++l) levels.push_back(assemble(l, subtype_catalog(), scenarios));

  CHECK_FALSE(levels[0].has(SectionTag::Role));
  CHECK(levels[1].has(SectionTag::Role));
  CHECK_FALSE(levels[1].has(SectionTag::FewshotScenarios));
  CHECK(levels[2].has(SectionTag::FewshotScenarios));
  CHECK_FALSE(levels[2].has(SectionTag::CotScaffold));
  CHECK(levels[3].has(SectionTag::CotScaffold));
  for (const auto& p : levels) {
    for (auto t : {SectionTag::Goal, SectionTag::InteractionPlan, SectionTag::Taxonomy,
                   SectionTag::OutputSchema}) {
      CHECK(p.has(t));
    }
  }
  for (std::size_t i = 0; i + 1 < levels.size(); ++i) {
    CHECK(levels[i].sections.size() < levels[i + 1].sections.size());
    for (const auto& s : levels[i].sections) {
      CHECK(std::find(levels[i + 1].sections.begin(), levels[i + 1].sections.end(), s) !=
            levels[i + 1].sections.end());
    }
  }
  CHECK(tags(assemble(4, subtype_catalog(), scenarios)) == tags(levels[3]));
  CHECK(levels[0].render().find("[GOAL]") != std::string::npos);
}

TEST_CASE("assemble preconditions") {
  auto scenarios = builtin_scenarios();
  CHECK_THROWS_AS(assemble(0, subtype_catalog(), scenarios), PreconditionError);
  CHECK_THROWS_AS(assemble(5, subtype_catalog(), scenarios), PreconditionError);

  SUBCASE("twenty of twenty-nine scenarios") {
    std::vector<ScenarioExample> partial;
    std::set<SubtypeId> seen;
    for (const auto& s : scenarios) {
      if (seen.size() < 20 || seen.count(s.subtype)) {
        seen.insert(s.subtype);
        partial.push_back(s);
      }
    }
    REQUIRE(seen.size() == 20);
    CHECK_NOTHROW(assemble(2, subtype_catalog(), partial));
    CHECK_THROWS_AS(assemble(3, subtype_catalog(), partial), PreconditionError);
  }
  SUBCASE("level four needs reasoning traces") {
    for (auto& s : scenarios) s.cot_trace.reset();
    CHECK_NOTHROW(assemble(3, subtype_catalog(), scenarios));
    CHECK_THROWS_AS(assemble(4, subtype_catalog(), scenarios), PreconditionError);
  }
}

TEST_CASE("scenario library covers the catalog") {
  std::set<SubtypeId> covered;
  for (const auto& s : builtin_scenarios()) covered.insert(s.subtype);
  CHECK(covered.size() == kSubtypeCount);
  CHECK_THROWS_AS(scenarios_from_json(json::object()), SchemaError);
}

TEST_CASE("replay transport") {
  const auto t = planted_trace();
  const auto prompt = assemble(2, subtype_catalog(), builtin_scenarios());
  const auto req = request_for(t, prompt);
  const auto body = canonical_dump(report_to_json(detect_all(t)));

  SUBCASE("recorded pair replays byte-identical") {
    ReplayTransport rt(std::map<std::string, std::string>{{req.digest(), body}});
    CHECK(rt.send(req).body == body);
    CHECK(rt.calls() == 1);
  }
  SUBCASE("unknown digest, strict") {
    ReplayTransport rt({});
    CHECK_THROWS_AS(rt.send(req), Error);
  }
  SUBCASE("unknown digest, fallback") {
    ReplayTransport rt({}, ReplayTransport::MissMode::Fallback, "{}");
    CHECK(rt.send(req).body == "{}");
  }
  SUBCASE("recording documents") {
    const auto doc = recording_to_json({{req.digest(), body}});
    CHECK(recording_from_json(doc).at(req.digest()) == body);
    CHECK(ReplayTransport::from_json(doc).send(req).body == body);
  }
  SUBCASE("digest separates its parts") {
    TransportRequest a{"ab", "c", "d"}, b{"a", "bc", "d"};
    CHECK(a.digest() != b.digest());
    CHECK(a.digest().size() == 64);
  }
}

TEST_CASE("classify_remote") {
  const auto t = planted_trace();
  const auto prompt = assemble(1, subtype_catalog(), builtin_scenarios());
  const auto req = request_for(t, prompt);
  const auto good = report_to_json(detect_all(t));

  SUBCASE("valid canned report passes through") {
    ReplayTransport rt(std::map<std::string, std::string>{{req.digest(), canonical_dump(good)}});
    const auto r = classify_remote(t, prompt, rt);
    CHECK(r.attempts == 1);
    CHECK_FALSE(r.report.failure.has_value());
    CHECK(canonical_dump(report_to_json(r.report)) == canonical_dump(good));
  }
  SUBCASE("two labels missing") {
    auto bad = good;
    bad["labels"].erase("HiddenInfo");
    bad["labels"].erase("PrivacyMazes");
    ReplayTransport rt(std::map<std::string, std::string>{{req.digest(), bad.dump()}});
    const auto r = classify_remote(t, prompt, rt, 3);
    CHECK(rt.calls() == 3);
    CHECK(r.rejections.size() == 3);
    REQUIRE(r.report.failure.has_value());
    CHECK(r.report.failure->category == FailureCategory::AgentInstability);
    CHECK_FALSE(r.report.completion.verified_success);
  }
  SUBCASE("quote absent from the trace") {
    auto bad = good;
    bad["findings"][0]["evidence"][0]["quote"] = "words that never appeared";
    const auto gate = gate_response(bad.dump(), t);
    CHECK_FALSE(gate.report.has_value());
    CHECK(gate.reason.find("evidence") != std::string::npos);
  }
  SUBCASE("network failure") {
    FailingTransport ft;
    const auto r = classify_remote(t, prompt, ft, 2);
    CHECK(ft.calls == 2);
    REQUIRE(r.report.failure.has_value());
    CHECK(r.report.failure->category == FailureCategory::AutomationInstability);
  }
  SUBCASE("retry bound") {
    ReplayTransport rt({}, ReplayTransport::MissMode::Fallback, "not json");
    CHECK(classify_remote(t, prompt, rt, 5).attempts == 5);
    CHECK(rt.calls() == 5);
    CHECK_THROWS_AS(classify_remote(t, prompt, rt, 0), PreconditionError);
  }
}

TEST_CASE("gate rejects other brokers and malformed text") {
  const auto t = planted_trace();
  auto doc = report_to_json(detect_all(t));
  CHECK(gate_response(doc.dump(), t).report.has_value());
  doc["broker_id"] = "someone_else";
  CHECK_FALSE(gate_response(doc.dump(), t).report.has_value());
  CHECK_FALSE(gate_response("[1,2", t).report.has_value());
}

TEST_CASE("fuzzed responses never pass the gate") {
  const auto t = planted_trace();
  const auto good = report_to_json(detect_all(t));
  std::mt19937_64 rng(2024);
  int accepted = 0;
  for (int i = 0; i < 300; ++i) {
    const auto kind = static_cast<fuzz::Mutation>(i % 3);
    const auto bad = fuzz::mutate(good, kind, rng);
    if (gate_response(bad.dump(), t).report) {
      ++accepted;
      MESSAGE("accepted: " << bad.dump());
    }
  }
  CHECK(accepted == 0);
}
