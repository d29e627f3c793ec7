#include "doctest.h"

#include "dpaudit/detector.hpp"
#include "dpaudit/error.hpp"
#include "dpaudit/serialize.hpp"
#include "dpaudit/synth.hpp"

using namespace dpaudit;

namespace {

std::set<Category> present(const AuditReport& r) {
  std::set<Category> out;
  for (const auto& [c, p] : r.labels) {
    if (p) out.insert(c);
  }
  return out;
}

PlantSpec spec_for(std::set<SubtypeId> subs, std::uint64_t seed) {
  PlantSpec spec;
  for (auto s : subs) spec.plants.insert({subtype_info(s).category, s});
  spec.broker_id = "broker_s";
  spec.seed = seed;
  spec.shape.page_count = min_page_count(subs);
  return spec;
}

std::set<Category> planted(const PlantSpec& spec) {
  std::set<Category> out;
  for (const auto& [c, s] : spec.plants) out.insert(c);
  return out;
}

}  // namespace

TEST_CASE("benign portal from seed 42") {
  PlantSpec spec;
  spec.seed = 42;
  const auto t = generate(spec);
  CHECK(validate_trace(t).empty());
  CHECK(detect_all(t).findings.empty());
}

TEST_CASE("cross-page fragmentation splits the email channel across pages") {
  auto spec = spec_for({SubtypeId::CrossPageFragmentation}, 3);
  const auto t = generate(spec);
  const auto inv = channel_inventory(t);
  REQUIRE(inv.count(ChannelKind::Email));
  CHECK(inv.at(ChannelKind::Email).complete_on_pages.empty());
  CHECK(inv.at(ChannelKind::Email).complete_in_union);
  CHECK(present(detect_all(t)) == std::set<Category>{Category::PrivacyMazes});

  spec.shape.page_count = 2;
  CHECK_THROWS_AS(generate(spec), UnsatisfiablePlant);
}

TEST_CASE("malformed plant specs") {
  PlantSpec spec;
  spec.plants = {{Category::HiddenInfo, SubtypeId::IdentifierFragmentation}};
  CHECK_THROWS_AS(generate(spec), PreconditionError);
  spec.plants.clear();
  spec.shape.page_count = 9;
  CHECK_THROWS_AS(generate(spec), PreconditionError);
  spec.shape.page_count = 2;
  spec.shape.benign_padding_sections = 6;
  CHECK_THROWS_AS(generate(spec), PreconditionError);
}

TEST_CASE("every single plant round-trips under several shapes") {
  for (const auto& s : subtype_catalog()) {
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
      auto spec = spec_for({s.id}, seed);
      spec.shape.benign_padding_sections = static_cast<int>(seed);
      spec.shape.page_count += static_cast<int>(seed % 2);
      const auto t = generate(spec);
      REQUIRE(validate_trace(t).empty());
      const auto r = detect_all(t);
      CHECK_MESSAGE(present(r) == planted(spec), s.slug);
      CHECK(validate_report(r, &t).empty());
    }
  }
}

TEST_CASE("every compatible pair round-trips") {
  int pairs = 0;
  const auto catalog = subtype_catalog();
  for (std::size_t i = 0; i < catalog.size(); ++i) {
    for (std::size_t j = i + 1; j < catalog.size(); ++j) {
      const auto a = catalog[i].id, b = catalog[j].id;
      CHECK(plants_compatible(a, b) == plants_compatible(b, a));
      auto spec = spec_for({a, b}, i * 31 + j);
      if (!plants_compatible(a, b)) {
        CHECK_THROWS_AS(generate(spec), UnsatisfiablePlant);
        continue;
      }
      ++pairs;
      const auto t = generate(spec);
      CHECK_MESSAGE(present(detect_all(t)) == planted(spec), catalog[i].slug, " + ", catalog[j].slug);
    }
  }
  CHECK(pairs + static_cast<int>(incompatible_pairs().size()) == 29 * 28 / 2);
}

TEST_CASE("generation is a pure function of the spec") {
  const auto spec = spec_for({SubtypeId::VagueRequestLabels, SubtypeId::CoupledOutcomes}, 99);
  CHECK(canonical_dump(trace_to_json(generate(spec))) ==
        canonical_dump(trace_to_json(generate(spec))));
  auto other = spec;
  other.seed = 100;
  CHECK(present(detect_all(generate(other))) == planted(spec));
}

TEST_CASE("inject_faults") {
  const auto trace = generate(spec_for({}, 1));
  SUBCASE("empty plan replays the trace") {
    const auto bp = inject_faults(trace, {});
    CHECK_FALSE(bp.fault.has_value());
    CHECK(canonical_dump(trace_to_json(bp.trace)) == canonical_dump(trace_to_json(trace)));
  }
  SUBCASE("crash past the last step") {
    auto one = trace;
    one.steps.resize(1);
    one.metadata.step_count = 1;
    CHECK_THROWS_AS(inject_faults(one, {{{FaultKind::CrashAtStep, 2}}}), UnreachableTarget);
  }
  SUBCASE("two faults") {
    CHECK_THROWS_AS(
        inject_faults(trace, {{{FaultKind::CaptchaPage, 0}, {FaultKind::BrokenPolicyLink, 0}}}),
        PreconditionError);
  }
  SUBCASE("fault names") {
    for (auto k : {FaultKind::CaptchaPage, FaultKind::CrashAtStep, FaultKind::TimeoutAtStep,
                   FaultKind::MalformedInternalState, FaultKind::PdfOnlyInstructions,
                   FaultKind::BrokenPolicyLink, FaultKind::UnexposedFormPage}) {
      CHECK(fault_from_string(to_string(k)) == k);
    }
    CHECK_FALSE(fault_from_string("gremlins").has_value());
  }
}

TEST_CASE("corpus generation") {
  SUBCASE("table4 mix over 100 brokers") {
    const auto items = generate_corpus(100, 7, CorpusMix::table4());
    REQUIRE(items.size() == 100);
    const auto mix = CorpusMix::table4();
    for (std::size_t c = 0; c < kCategoryCount; ++c) {
      int n = 0;
      for (const auto& it : items) n += it.truth.labels.at(kAllCategories[c]) ? 1 : 0;
      CHECK(n == static_cast<int>(std::lround(mix.prevalence[c] * 100)));
    }
    int barriers = 0;
    for (const auto& it : items) barriers += it.truth.labels.at(Category::CreatingBarriers);
    CHECK(barriers == 56);
  }
  SUBCASE("single broker") { CHECK(generate_corpus(1, 3, CorpusMix::table4()).size() == 1); }
  SUBCASE("same seed, same corpus") {
    const auto a = generate_corpus(20, 11, CorpusMix::table4());
    const auto b = generate_corpus(20, 11, CorpusMix::table4());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(canonical_dump(trace_to_json(a[i].trace)) == canonical_dump(trace_to_json(b[i].trace)));
      CHECK(a[i].truth == b[i].truth);
    }
  }
  SUBCASE("large corpus stays within two points of the mix") {
    const auto items = generate_corpus(500, 5, CorpusMix::table4());
    const auto mix = CorpusMix::table4();
    for (std::size_t c = 0; c < kCategoryCount; ++c) {
      double n = 0;
      for (const auto& it : items) n += it.truth.labels.at(kAllCategories[c]) ? 1 : 0;
      CHECK(std::abs(n / 500.0 - mix.prevalence[c]) <= 0.02);
    }
  }
  SUBCASE("n = 0") { CHECK_THROWS_AS(generate_corpus(0, 1, {}), PreconditionError); }
}
