#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "dpaudit/detector.hpp"
#include "dpaudit/error.hpp"
#include "dpaudit/eval.hpp"
#include "dpaudit/synth.hpp"
#include "fixtures.hpp"

using namespace dpaudit;

namespace {

AuditReport report(const std::string& id, std::set<Category> present, bool verified = true) {
  AuditReport r;
  r.broker_id = id;
  r.labels = absent_labels();
  for (auto c : present) r.labels[c] = true;
  r.completion = {true, verified, ""};
  if (!verified) r.failure = FailureReport{};
  return r;
}

TruthEntry truth(std::set<Category> present) {
  TruthEntry t;
  for (auto c : kAllCategories) t.labels[c] = present.count(c) > 0;
  return t;
}

// Category-0 runs: each pair is (predicted, truth).
std::vector<EvaluatedRun> runs_of(const std::vector<std::pair<bool, bool>>& pairs) {
  std::vector<EvaluatedRun> out;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    EvaluatedRun r;
    r.broker_id = "b" + std::to_string(1000 + i);
    r.predicted[0] = pairs[i].first;
    r.truth[0] = pairs[i].second;
    out.push_back(r);
  }
  return out;
}

}  // namespace

TEST_CASE("confusion over hand-labeled reports") {
  const auto C = Category::HiddenInfo;
  std::vector<AuditReport> preds{report("a", {C}), report("b", {C}), report("c", {C}),
                                 report("d", {}),  report("e", {}),  report("f", {}),
                                 report("g", {}),  report("h", {})};
  TruthLabels t{{"a", truth({C})}, {"b", truth({C})}, {"c", truth({})}, {"d", truth({C})},
                {"e", truth({})},  {"f", truth({})},  {"g", truth({})}, {"h", truth({})}};
  const auto counts = confusion(preds, t);
  const auto& cell = counts.at(C);
  CHECK(cell.tp == 2);
  CHECK(cell.fp == 1);
  CHECK(cell.fn == 1);
  CHECK(cell.tn == 4);
  CHECK(counts.at(Category::AddingSteps).tn == 8);

  SUBCASE("broker sets differ") {
    auto fewer = t;
    fewer.erase("h");
    CHECK_THROWS_AS(confusion(preds, fewer), PreconditionError);
  }
  SUBCASE("unverified prediction") {
    preds[0] = report("a", {C}, false);
    CHECK_THROWS_AS(confusion(preds, t), PreconditionError);
  }
}

TEST_CASE("classification metrics") {
  SUBCASE("2/1/1/4") {
    const auto m = classification_metrics({2, 1, 1, 4});
    CHECK(std::abs(*m.accuracy.value - 0.75) < 1e-9);
    CHECK(std::abs(*m.precision.value - 2.0 / 3) < 1e-9);
    CHECK(std::abs(*m.recall.value - 2.0 / 3) < 1e-9);
    CHECK(std::abs(*m.f1.value - 2.0 / 3) < 1e-9);
  }
  SUBCASE("nothing predicted present") {
    const auto m = classification_metrics({0, 0, 3, 5});
    CHECK_FALSE(m.precision.defined());
    CHECK_FALSE(m.precision.reason.empty());
    CHECK(*m.recall.value == 0.0);
    CHECK_FALSE(m.f1.defined());
  }
  SUBCASE("nothing present at all") {
    const auto m = classification_metrics({0, 0, 0, 5});
    CHECK(*m.accuracy.value == 1.0);
    CHECK_FALSE(m.precision.defined());
    CHECK_FALSE(m.recall.defined());
  }
  SUBCASE("empty") { CHECK_FALSE(classification_metrics({}).accuracy.defined()); }
}

TEST_CASE("cohen_kappa") {
  const std::vector<bool> a{true, true, false, false};
  CHECK(cohen_kappa(a, {true, false, true, false}) == 0.0);
  CHECK(cohen_kappa({true, false, true, false}, {false, true, false, true}) == -1.0);
  CHECK(cohen_kappa(a, a) == 1.0);
  CHECK(cohen_kappa({true, true}, {true, true}) == 1.0);
  CHECK_THROWS_AS(cohen_kappa({}, {}), PreconditionError);
  CHECK_THROWS_AS(cohen_kappa({true}, {true, false}), PreconditionError);
}

TEST_CASE("explanation accuracy counts true positives with sound rationales") {
  std::vector<AuditReport> preds;
  TruthLabels t;
  std::map<std::string, WorkflowTrace> traces;
  for (int i = 0; i < 4; ++i) {
    PlantSpec spec{PlantSpec::of({SubtypeId::ExcessiveIdentityVerification}),
                   "b" + std::to_string(i), static_cast<std::uint64_t>(i), {}};
    spec.shape.page_count = min_page_count({SubtypeId::ExcessiveIdentityVerification});
    auto trace = generate(spec);
    auto r = detect_all(trace);
    if (i == 3) {
      for (auto& f : r.findings) {
        f.subtype = SubtypeId::RoleClassificationBarriers;
        f.assessment.harm_mechanism = SubtypeId::RoleClassificationBarriers;
      }
    }
    preds.push_back(r);
    t[spec.broker_id] = truth_for(spec);
    traces[spec.broker_id] = trace;
  }
  auto cells = explanation_accuracy(preds, t, traces);
  CHECK(cells.at(Category::CreatingBarriers).correct == 3);
  CHECK(cells.at(Category::CreatingBarriers).total == 4);
  CHECK(*cells.at(Category::CreatingBarriers).ratio().value == 0.75);
  CHECK_FALSE(cells.at(Category::HiddenInfo).ratio().defined());

  SUBCASE("fabricated quote is incorrect") {
    preds[0].findings[0].evidence[0].quote += " (paraphrased)";
    CHECK(explanation_accuracy(preds, t, traces).at(Category::CreatingBarriers).correct == 2);
  }
}

TEST_CASE("evaluate drops unverified runs") {
  const auto C = Category::PrivacyMazes;
  std::vector<AuditReport> preds{report("a", {C}), report("b", {}), report("c", {}, false)};
  TruthLabels t{{"a", truth({C})}, {"b", truth({})}, {"c", truth({C})}};
  std::map<std::string, WorkflowTrace> traces;
  for (const char* id : {"a", "b", "c"}) {
    traces[id] = fixtures::benign_portal();
    traces[id].broker_id = id;
  }
  CHECK_THROWS_AS(evaluate(preds, t, {}), PreconditionError);
  const auto m = evaluate(preds, t, traces);
  CHECK(m.n_evaluated == 2);
  CHECK(m.per_category.at(C).explanation.total == 1);
  CHECK(m.per_category.at(C).explanation.correct == 0);
  CHECK(m.excluded_failed_runs == 1);
  CHECK(m.per_category.at(C).counts.tp == 1);
  CHECK(m.aggregate.counts.total() == 16);
  CHECK(*m.aggregate.metrics.accuracy.value == 1.0);

  const auto doc = metrics_to_json(m);
  CHECK(doc.at("schema_version") == 1);
  CHECK(doc.at("per_category").at("HiddenInfo").at("precision").at("value").is_null());
  const auto t3 = table3(doc);
  CHECK(t3.rows.size() == 9);
  CHECK(t3.rows.back()[0] == "aggregate");
  CHECK(t3.to_csv().find("category,tp,fp,fn,tn") == 0);

  t.erase("c");
  CHECK_THROWS_AS(evaluate(preds, t, traces), PreconditionError);
}

TEST_CASE("percentile interpolates") {
  CHECK(percentile({1, 2, 3, 4}, 0.5) == doctest::Approx(2.5));
  CHECK(percentile({4, 1, 3, 2}, 0.0) == 1);
  CHECK(percentile({4, 1, 3, 2}, 1.0) == 4);
  CHECK(percentile({0, 10}, 0.025) == doctest::Approx(0.25));
}

TEST_CASE("bootstrap on identical configurations") {
  std::vector<std::pair<bool, bool>> pairs;
  for (int i = 0; i < 60; ++i) pairs.push_back({i % 3 == 0, i % 2 == 0});
  const auto runs = runs_of(pairs);
  for (const char* name : {"accuracy", "precision", "recall", "f1"}) {
    const auto d = bootstrap_delta(name, named_metric(name), runs, runs, {50, 1000, 7, 0});
    CHECK(d.delta == 0.0);
    CHECK(d.ci_low == 0.0);
    CHECK(d.ci_high == 0.0);
    CHECK_FALSE(d.significant);
  }
}

TEST_CASE("bootstrap detects a precision shift") {
  // 50 true positives, 50 false positives; config B clears 10 of the false
  // positives (20%).
  std::vector<std::pair<bool, bool>> a, b;
  for (int i = 0; i < 50; ++i) {
    a.push_back({true, true});
    b.push_back({true, true});
  }
  for (int i = 0; i < 50; ++i) {
    a.push_back({true, false});
    b.push_back({i >= 10, false});
  }
  const auto ra = runs_of(a), rb = runs_of(b);
  const auto d = bootstrap_delta("precision", named_metric("precision"), ra, rb, {50, 1000, 11, 0});
  CHECK(d.delta == doctest::Approx(50.0 / 90 - 0.5));
  CHECK(d.ci_low > 0);
  CHECK(d.significant);

  const auto again =
      bootstrap_delta("precision", named_metric("precision"), ra, rb, {50, 1000, 11, 0});
  CHECK(delta_to_json(again).dump() == delta_to_json(d).dump());
  CHECK(delta_from_json(delta_to_json(d)).ci_low == d.ci_low);

  SUBCASE("growing B keeps earlier resamples") {
    const auto more =
        bootstrap_delta("precision", named_metric("precision"), ra, rb, {50, 2000, 11, 0});
    CHECK(more.resamples == 2000);
    CHECK(std::abs(more.ci_low - d.ci_low) < 0.02);
  }
}

TEST_CASE("bootstrap agrees with exhaustive enumeration at m = 3") {
  // Five brokers; B wins on broker 3 only.
  const auto ra = runs_of({{true, true}, {true, false}, {false, true}, {true, false}, {false, false}});
  const auto rb = runs_of({{true, true}, {true, false}, {false, true}, {false, false}, {false, false}});
  const auto metric = named_metric("precision");

  std::vector<double> exact;
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 5; ++j) {
      for (int k = 0; k < 5; ++k) {
        std::vector<const EvaluatedRun*> sa{&ra[i], &ra[j], &ra[k]}, sb{&rb[i], &rb[j], &rb[k]};
        const auto ma = metric(sa), mb = metric(sb);
        if (ma && mb) exact.push_back(*mb - *ma);
      }
    }
  }
  const double lo = *std::min_element(exact.begin(), exact.end());
  const double hi = *std::max_element(exact.begin(), exact.end());
  double mean = 0;
  for (double x : exact) mean += x;
  mean /= static_cast<double>(exact.size());
  CHECK(lo >= 0.0);
  CHECK(mean > 0.0);

  const auto d = bootstrap_delta("precision", metric, ra, rb, {3, 4000, 5, 0});
  CHECK(d.delta > 0);
  CHECK(d.ci_low >= lo);
  CHECK(d.ci_high <= hi);
  CHECK(d.ci_low == doctest::Approx(percentile(exact, 0.025)).epsilon(0.05));
  CHECK(d.ci_high == doctest::Approx(percentile(exact, 0.975)).epsilon(0.05));
  CHECK(d.redraws > 0);
}

TEST_CASE("bootstrap preconditions") {
  const auto ra = runs_of({{true, true}, {false, false}});
  auto rb = ra;
  rb[0].broker_id = "other";
  CHECK_THROWS_AS(bootstrap_delta("accuracy", named_metric("accuracy"), ra, rb, {2, 10, 0, 0}),
                  PreconditionError);
  CHECK_THROWS_AS(named_metric("auc"), PreconditionError);

  SUBCASE("metric undefined everywhere") {
    const auto neg = runs_of({{false, false}, {false, false}});
    CHECK_THROWS_AS(
        bootstrap_delta("precision", named_metric("precision"), neg, neg, {2, 10, 0, 0}), Error);
  }
}

TEST_CASE("wald intervals") {
  SUBCASE("50 of 100") {
    const auto c = wald(50, 100);
    CHECK(c.ci_low == doctest::Approx(0.402).epsilon(1e-3));
    CHECK(c.ci_high == doctest::Approx(0.598).epsilon(1e-3));
  }
  SUBCASE("0 of 50") {
    const auto c = wald(0, 50);
    CHECK(c.ci_low == 0.0);
    CHECK(c.ci_high == 0.0);
    CHECK(c.half_width == 0.0);
  }
  SUBCASE("half width formula") {
    for (int k : {1, 7, 45, 80}) {
      const auto c = wald(k, 81);
      const double p = k / 81.0;
      CHECK(std::abs(c.half_width - 1.96 * std::sqrt(p * (1 - p) / 81)) < 1e-12);
    }
  }
  SUBCASE("creating barriers ground truth row") {
    const auto c = wald(45, 81);
    CHECK(std::abs(100 * c.ci_low - 44.7) <= 1.0);
    CHECK(std::abs(100 * c.ci_high - 66.4) <= 1.0);
  }
  SUBCASE("clamped") {
    const auto c = wald(1, 3);
    CHECK(c.ci_low == 0.0);
    CHECK(c.half_width > c.p_hat);
  }
  CHECK_THROWS_AS(wald(0, 0), PreconditionError);
}

TEST_CASE("prevalence over reports and truth") {
  const auto C = Category::VisualProminence;
  std::vector<AuditReport> preds{report("a", {C}), report("b", {})};
  const auto p = prevalence(preds);
  CHECK(p.at(C).positives == 1);
  CHECK(p.at(C).n == 2);
  CHECK(p.at(Category::AddingSteps).p_hat == 0.0);

  TruthLabels t{{"a", truth({C})}, {"b", truth({C})}};
  CHECK(prevalence(t).at(C).p_hat == 1.0);

  preds.push_back(report("c", {}, false));
  CHECK_THROWS_AS(prevalence(preds), PreconditionError);
  CHECK_THROWS_AS(prevalence(std::vector<AuditReport>{}), PreconditionError);

  const auto doc = prevalence_to_json(prevalence(t));
  const auto t4 = table4(doc, nullptr);
  CHECK(t4.rows.size() == 8);
  CHECK(t4.rows.back()[2] == "100.0");
}

TEST_CASE("table2 rows from an ablation document") {
  AblationResult res;
  for (int level : {1, 2}) {
    AblationLevel l;
    l.level = level;
    l.metrics.aggregate.metrics = classification_metrics({2, 1, 1, 4});
    res.levels.push_back(l);
  }
  BootstrapDelta d;
  d.metric = "precision";
  d.delta = 0.05;
  d.ci_low = 0.01;
  d.ci_high = 0.09;
  d.significant = true;
  res.deltas.push_back({"L2-L1", d});
  const auto t = table2(ablation_from_json(ablation_to_json(res)));
  REQUIRE(t.rows.size() == 3);
  CHECK(t.rows[0][0] == "L1");
  CHECK(t.rows[0][1] == "75.0");
  CHECK(t.rows[2][0] == "delta L2-L1");
  CHECK(t.rows[2][2] == "+5.0 [+1.0,+9.0]*");
  CHECK(t.rows[2][1] == "n/a");
  CHECK(t.to_text().find("strategy") == 0);
}
