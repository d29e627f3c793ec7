#include "dpaudit/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>

#include <fmt/format.h>

#include "dpaudit/error.hpp"
#include "dpaudit/synth.hpp"

namespace dpaudit {

Ratio Ratio::of(double num, double den, std::string_view what) {
  if (den == 0.0) return {std::nullopt, fmt::format("undefined: no {}", what)};
  return {num / den, {}};
}

ConfusionCell& ConfusionCell::operator+=(const ConfusionCell& o) {
  tp += o.tp;
  fp += o.fp;
  fn += o.fn;
  tn += o.tn;
  return *this;
}

Ratio ExplanationCell::ratio() const {
  return Ratio::of(static_cast<double>(correct), static_cast<double>(total), "true-positive pairs");
}

namespace {

void require_verified(const AuditReport& r) {
  if (!r.completion.verified_success) {
    throw PreconditionError("report " + r.broker_id + " is not a verified-completed run");
  }
}

void require_same_brokers(const std::vector<AuditReport>& reports, const TruthLabels& truth) {
  std::set<std::string> seen;
  for (const auto& r : reports) {
    if (!truth.count(r.broker_id)) {
      throw PreconditionError("no ground truth for broker " + r.broker_id);
    }
    if (!seen.insert(r.broker_id).second) {
      throw PreconditionError("duplicate prediction for broker " + r.broker_id);
    }
  }
  if (seen.size() != truth.size()) {
    for (const auto& [id, _] : truth) {
      if (!seen.count(id)) throw PreconditionError("no prediction for broker " + id);
    }
  }
}

bool label_of(const std::map<Category, bool>& labels, Category c) {
  auto it = labels.find(c);
  return it != labels.end() && it->second;
}

// Explanation correctness for one true-positive (broker, category) pair.
bool explanation_correct(const AuditReport& r, Category c, const TruthEntry& t,
                         const WorkflowTrace& trace) {
  bool mechanism_ok = false;
  bool any = false;
  for (const auto& f : r.findings) {
    if (f.category != c) continue;
    any = true;
    for (const auto& ref : f.evidence) {
      try {
        resolve_evidence(trace, ref);
      } catch (const Error&) {
        return false;
      }
    }
    if (t.subtypes.count(f.assessment.harm_mechanism)) mechanism_ok = true;
  }
  return any && mechanism_ok;
}

const WorkflowTrace& trace_for(const std::map<std::string, WorkflowTrace>& traces,
                               const std::string& id) {
  auto it = traces.find(id);
  if (it == traces.end()) throw PreconditionError("no trace for broker " + id);
  return it->second;
}

}  // namespace

ConfusionCounts confusion(const std::vector<AuditReport>& predictions, const TruthLabels& truth) {
  for (const auto& r : predictions) require_verified(r);
  require_same_brokers(predictions, truth);
  ConfusionCounts out;
  for (auto c : kAllCategories) out[c] = {};
  for (const auto& r : predictions) {
    const auto& t = truth.at(r.broker_id);
    for (auto c : kAllCategories) {
      const bool p = label_of(r.labels, c);
      const bool g = label_of(t.labels, c);
      auto& cell = out[c];
      if (p && g) ++cell.tp;
      else if (p) ++cell.fp;
      else if (g) ++cell.fn;
      else ++cell.tn;
    }
  }
  return out;
}

MetricSet classification_metrics(const ConfusionCell& k) {
  MetricSet m;
  m.accuracy = Ratio::of(static_cast<double>(k.tp + k.tn), static_cast<double>(k.total()), "pairs");
  m.precision = Ratio::of(static_cast<double>(k.tp), static_cast<double>(k.tp + k.fp),
                          "predicted positives");
  m.recall = Ratio::of(static_cast<double>(k.tp), static_cast<double>(k.tp + k.fn),
                       "actual positives");
  if (!m.precision.defined() || !m.recall.defined()) {
    m.f1 = {std::nullopt, "undefined: precision or recall undefined"};
  } else {
    m.f1 = Ratio::of(2.0 * *m.precision.value * *m.recall.value,
                     *m.precision.value + *m.recall.value, "precision or recall above zero");
  }
  return m;
}

std::map<Category, ExplanationCell> explanation_accuracy(
    const std::vector<AuditReport>& predictions, const TruthLabels& truth,
    const std::map<std::string, WorkflowTrace>& traces) {
  for (const auto& r : predictions) require_verified(r);
  require_same_brokers(predictions, truth);
  std::map<Category, ExplanationCell> out;
  for (auto c : kAllCategories) out[c] = {};
  for (const auto& r : predictions) {
    const auto& t = truth.at(r.broker_id);
    for (auto c : kAllCategories) {
      if (!label_of(r.labels, c) || !label_of(t.labels, c)) continue;
      auto& cell = out[c];
      ++cell.total;
      if (explanation_correct(r, c, t, trace_for(traces, r.broker_id))) ++cell.correct;
    }
  }
  return out;
}

double cohen_kappa(const std::vector<bool>& a, const std::vector<bool>& b) {
  if (a.empty()) throw PreconditionError("kappa: empty label vectors");
  if (a.size() != b.size()) throw PreconditionError("kappa: label vectors differ in length");
  const double n = static_cast<double>(a.size());
  double agree = 0, a1 = 0, b1 = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    agree += a[i] == b[i];
    a1 += a[i];
    b1 += b[i];
  }
  const double po = agree / n;
  const double pe = (a1 / n) * (b1 / n) + (1 - a1 / n) * (1 - b1 / n);
  if (pe >= 1.0) return 1.0;
  return (po - pe) / (1.0 - pe);
}

MetricsReport evaluate(const std::vector<AuditReport>& reports, const TruthLabels& truth,
                       const std::map<std::string, WorkflowTrace>& traces) {
  require_same_brokers(reports, truth);
  std::vector<AuditReport> verified;
  TruthLabels verified_truth;
  MetricsReport out;
  for (const auto& r : reports) {
    if (!r.completion.verified_success) {
      ++out.excluded_failed_runs;
      continue;
    }
    auto it = truth.find(r.broker_id);
    if (it == truth.end()) throw PreconditionError("no ground truth for broker " + r.broker_id);
    verified.push_back(r);
    verified_truth.insert(*it);
  }
  out.n_evaluated = static_cast<std::int64_t>(verified.size());
  const auto counts = confusion(verified, verified_truth);
  const auto expl = explanation_accuracy(verified, verified_truth, traces);
  for (auto c : kAllCategories) {
    auto& cm = out.per_category[c];
    cm.counts = counts.at(c);
    cm.metrics = classification_metrics(cm.counts);
    cm.explanation = expl.at(c);
    out.aggregate.counts += cm.counts;
    out.aggregate.explanation.correct += cm.explanation.correct;
    out.aggregate.explanation.total += cm.explanation.total;
  }
  out.aggregate.metrics = classification_metrics(out.aggregate.counts);
  return out;
}

// ---------------------------------------------------------------------------

std::vector<EvaluatedRun> evaluated_runs(const std::vector<AuditReport>& reports,
                                         const TruthLabels& truth,
                                         const std::map<std::string, WorkflowTrace>& traces) {
  std::vector<EvaluatedRun> out;
  for (const auto& r : reports) {
    require_verified(r);
    auto it = truth.find(r.broker_id);
    if (it == truth.end()) throw PreconditionError("no ground truth for broker " + r.broker_id);
    EvaluatedRun e;
    e.broker_id = r.broker_id;
    for (auto c : kAllCategories) {
      const auto i = index_of(c);
      e.predicted[i] = label_of(r.labels, c);
      e.truth[i] = label_of(it->second.labels, c);
      if (e.predicted[i] && e.truth[i]) {
        e.explanation_correct[i] =
            explanation_correct(r, c, it->second, trace_for(traces, r.broker_id));
      }
    }
    out.push_back(std::move(e));
  }
  std::sort(out.begin(), out.end(),
            [](const EvaluatedRun& a, const EvaluatedRun& b) { return a.broker_id < b.broker_id; });
  return out;
}

namespace {

struct SampleCounts {
  ConfusionCell cell;
  ExplanationCell expl;
};

SampleCounts tally(const std::vector<const EvaluatedRun*>& sample) {
  SampleCounts s;
  for (const auto* r : sample) {
    for (std::size_t i = 0; i < kCategoryCount; ++i) {
      const bool p = r->predicted[i], g = r->truth[i];
      if (p && g) ++s.cell.tp;
      else if (p) ++s.cell.fp;
      else if (g) ++s.cell.fn;
      else ++s.cell.tn;
      if (r->explanation_correct[i]) {
        ++s.expl.total;
        s.expl.correct += *r->explanation_correct[i];
      }
    }
  }
  return s;
}

}  // namespace

SampleMetric named_metric(const std::string& name) {
  if (name == "accuracy") {
    return [](const auto& s) { return classification_metrics(tally(s).cell).accuracy.value; };
  }
  if (name == "precision") {
    return [](const auto& s) { return classification_metrics(tally(s).cell).precision.value; };
  }
  if (name == "recall") {
    return [](const auto& s) { return classification_metrics(tally(s).cell).recall.value; };
  }
  if (name == "f1") {
    return [](const auto& s) { return classification_metrics(tally(s).cell).f1.value; };
  }
  if (name == "explanation") {
    return [](const auto& s) { return tally(s).expl.ratio().value; };
  }
  throw PreconditionError("unknown metric '" + name + "'");
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw PreconditionError("percentile of empty sample");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * std::clamp(q, 0.0, 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

BootstrapDelta bootstrap_delta(const std::string& metric_name, const SampleMetric& metric,
                               const std::vector<EvaluatedRun>& runs_a,
                               const std::vector<EvaluatedRun>& runs_b,
                               const BootstrapOptions& options) {
  if (options.m < 1 || options.B < 1) throw PreconditionError("bootstrap: m and B must be >= 1");
  if (runs_a.empty()) throw PreconditionError("bootstrap: no runs");
  std::map<std::string, const EvaluatedRun*> by_id_b;
  for (const auto& r : runs_b) by_id_b[r.broker_id] = &r;
  if (by_id_b.size() != runs_a.size()) {
    throw PreconditionError("bootstrap: the two strategies cover different brokers");
  }
  std::vector<const EvaluatedRun*> a_all, b_all;
  {
    std::map<std::string, const EvaluatedRun*> by_id_a;
    for (const auto& r : runs_a) by_id_a[r.broker_id] = &r;
    for (const auto& [id, ra] : by_id_a) {
      auto it = by_id_b.find(id);
      if (it == by_id_b.end()) {
        throw PreconditionError("bootstrap: broker " + id + " missing from second strategy");
      }
      a_all.push_back(ra);
      b_all.push_back(it->second);
    }
  }

  BootstrapDelta out;
  out.metric = metric_name;
  out.resamples = options.B;
  out.sample_size = options.m;
  out.seed = options.seed;

  const auto full_a = metric(a_all), full_b = metric(b_all);
  if (!full_a || !full_b) {
    throw PreconditionError("bootstrap: " + metric_name + " undefined on the full run set");
  }
  out.delta = *full_b - *full_a;

  const std::int64_t cap = options.redraw_cap > 0 ? options.redraw_cap : 10LL * options.B;
  const std::uint64_t n = a_all.size();
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::vector<double> deltas;
  deltas.reserve(static_cast<std::size_t>(options.B));
  std::vector<const EvaluatedRun*> sa(static_cast<std::size_t>(options.m));
  std::vector<const EvaluatedRun*> sb(static_cast<std::size_t>(options.m));
  for (int r = 0; r < options.B; ++r) {
    std::mt19937_64 rng(splitmix64(options.seed ^ splitmix64(static_cast<std::uint64_t>(r))));
    for (;;) {
      for (int j = 0; j < options.m; ++j) {
        std::uint64_t x;
        do x = rng();
        while (x >= limit);
        sa[static_cast<std::size_t>(j)] = a_all[x % n];
        sb[static_cast<std::size_t>(j)] = b_all[x % n];
      }
      const auto ma = metric(sa), mb = metric(sb);
      if (ma && mb) {
        deltas.push_back(*mb - *ma);
        break;
      }
      if (++out.redraws > cap) {
        throw PreconditionError(fmt::format(
            "bootstrap: {} undefined in too many resamples ({} redraws)", metric_name, out.redraws));
      }
    }
  }
  out.ci_low = percentile(deltas, 0.025);
  out.ci_high = percentile(deltas, 0.975);
  out.significant = out.ci_low > 0.0 || out.ci_high < 0.0;
  return out;
}

// ---------------------------------------------------------------------------

PrevalenceCell wald(std::int64_t positives, std::int64_t n) {
  if (n <= 0) throw PreconditionError("prevalence: no verified runs");
  if (positives < 0 || positives > n) throw PreconditionError("prevalence: positives out of range");
  PrevalenceCell c;
  c.positives = positives;
  c.n = n;
  c.p_hat = static_cast<double>(positives) / static_cast<double>(n);
  c.half_width = 1.96 * std::sqrt(c.p_hat * (1.0 - c.p_hat) / static_cast<double>(n));
  c.ci_low = std::max(0.0, c.p_hat - c.half_width);
  c.ci_high = std::min(1.0, c.p_hat + c.half_width);
  return c;
}

std::map<Category, PrevalenceCell> prevalence(const std::vector<AuditReport>& reports) {
  if (reports.empty()) throw PreconditionError("prevalence: no verified runs");
  std::array<std::int64_t, kCategoryCount> pos{};
  for (const auto& r : reports) {
    require_verified(r);
    for (auto c : kAllCategories) pos[index_of(c)] += label_of(r.labels, c);
  }
  std::map<Category, PrevalenceCell> out;
  const auto n = static_cast<std::int64_t>(reports.size());
  for (auto c : kAllCategories) out[c] = wald(pos[index_of(c)], n);
  return out;
}

std::map<Category, PrevalenceCell> prevalence(const TruthLabels& truth) {
  if (truth.empty()) throw PreconditionError("prevalence: empty ground truth");
  std::array<std::int64_t, kCategoryCount> pos{};
  for (const auto& [_, t] : truth) {
    for (auto c : kAllCategories) pos[index_of(c)] += label_of(t.labels, c);
  }
  std::map<Category, PrevalenceCell> out;
  const auto n = static_cast<std::int64_t>(truth.size());
  for (auto c : kAllCategories) out[c] = wald(pos[index_of(c)], n);
  return out;
}

// ---------------------------------------------------------------------------

namespace {

json ratio_json(const Ratio& r) {
  json j{{"value", r.value ? json(*r.value) : json(nullptr)}};
  if (!r.value) j["reason"] = r.reason;
  return j;
}

json category_json(const CategoryMetrics& m) {
  return {{"counts", {{"tp", m.counts.tp}, {"fp", m.counts.fp}, {"fn", m.counts.fn}, {"tn", m.counts.tn}}},
          {"accuracy", ratio_json(m.metrics.accuracy)},
          {"precision", ratio_json(m.metrics.precision)},
          {"recall", ratio_json(m.metrics.recall)},
          {"f1", ratio_json(m.metrics.f1)},
          {"explanation",
           [&] {
             auto j = ratio_json(m.explanation.ratio());
             j["correct"] = m.explanation.correct;
             j["total"] = m.explanation.total;
             return j;
           }()}};
}

Ratio ratio_from(const json& j) {
  try {
    const auto& v = j.at("value");
    if (v.is_null()) return {std::nullopt, j.value("reason", std::string("undefined"))};
    return {v.get<double>(), {}};
  } catch (const json::exception& e) {
    throw SchemaError(std::string("metric value: ") + e.what());
  }
}

std::string pct(double v) { return fmt::format("{:.1f}", 100.0 * v); }

}  // namespace

std::string percent(const Ratio& r) {
  if (!r.value) return "n/a";
  return pct(*r.value);
}

json metrics_to_json(const MetricsReport& report) {
  json per = json::object();
  for (const auto& [c, m] : report.per_category) per[std::string(to_string(c))] = category_json(m);
  return {{"schema_version", kSchemaVersion},
          {"n_evaluated", report.n_evaluated},
          {"excluded_failed_runs", report.excluded_failed_runs},
          {"aggregate", category_json(report.aggregate)},
          {"per_category", per}};
}

json delta_to_json(const BootstrapDelta& d) {
  return {{"metric", d.metric},   {"delta", d.delta},         {"ci_low", d.ci_low},
          {"ci_high", d.ci_high}, {"significant", d.significant}, {"resamples", d.resamples},
          {"sample_size", d.sample_size}, {"seed", d.seed},   {"redraws", d.redraws}};
}

BootstrapDelta delta_from_json(const json& doc) {
  try {
    BootstrapDelta d;
    d.metric = doc.at("metric").get<std::string>();
    d.delta = doc.at("delta").get<double>();
    d.ci_low = doc.at("ci_low").get<double>();
    d.ci_high = doc.at("ci_high").get<double>();
    d.significant = doc.at("significant").get<bool>();
    d.resamples = doc.at("resamples").get<int>();
    d.sample_size = doc.at("sample_size").get<int>();
    d.seed = doc.at("seed").get<std::uint64_t>();
    d.redraws = doc.at("redraws").get<std::int64_t>();
    return d;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("bootstrap delta: ") + e.what());
  }
}

json prevalence_to_json(const std::map<Category, PrevalenceCell>& prev) {
  json per = json::object();
  for (const auto& [c, p] : prev) {
    per[std::string(to_string(c))] = {{"positives", p.positives}, {"n", p.n},
                                      {"p_hat", p.p_hat},         {"half_width", p.half_width},
                                      {"ci_low", p.ci_low},       {"ci_high", p.ci_high}};
  }
  return {{"schema_version", kSchemaVersion}, {"per_category", per}};
}

json ablation_to_json(const AblationResult& result) {
  json levels = json::array();
  for (const auto& l : result.levels) {
    levels.push_back({{"level", l.level}, {"metrics", metrics_to_json(l.metrics)}});
  }
  json deltas = json::array();
  for (const auto& [label, d] : result.deltas) {
    auto j = delta_to_json(d);
    j["comparison"] = label;
    deltas.push_back(std::move(j));
  }
  return {{"schema_version", kSchemaVersion}, {"levels", levels}, {"deltas", deltas}};
}

AblationTableInput ablation_from_json(const json& doc) {
  if (!doc.is_object() || doc.value("schema_version", 0) != kSchemaVersion) {
    throw SchemaError("ablation: expected schema_version 1");
  }
  AblationTableInput in;
  try {
    for (const auto& l : doc.at("levels")) {
      in.levels.emplace_back(l.at("level").get<int>(), l.at("metrics"));
    }
    for (const auto& d : doc.at("deltas")) {
      in.deltas.emplace_back(d.at("comparison").get<std::string>(), delta_from_json(d));
    }
  } catch (const json::exception& e) {
    throw SchemaError(std::string("ablation: ") + e.what());
  }
  return in;
}

std::string Table::to_csv() const {
  auto cell = [](const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char ch : s) {
      if (ch == '"') q += '"';
      q += ch;
    }
    return q + "\"";
  };
  std::string out;
  auto line = [&](const std::vector<std::string>& r) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (i) out += ',';
      out += cell(r[i]);
    }
    out += '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
  return out;
}

std::string Table::to_text() const {
  std::vector<std::size_t> w(header.size(), 0);
  auto widen = [&](const std::vector<std::string>& r) {
    for (std::size_t i = 0; i < r.size() && i < w.size(); ++i) w[i] = std::max(w[i], r[i].size());
  };
  widen(header);
  for (const auto& r : rows) widen(r);
  std::string out;
  auto line = [&](const std::vector<std::string>& r) {
    std::string l;
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (i) l += "  ";
      l += i == 0 ? fmt::format("{:<{}}", r[i], w[i]) : fmt::format("{:>{}}", r[i], w[i]);
    }
    while (!l.empty() && l.back() == ' ') l.pop_back();
    out += l + '\n';
  };
  line(header);
  std::size_t total = 0;
  for (auto x : w) total += x;
  out += std::string(total + 2 * (w.empty() ? 0 : w.size() - 1), '-') + '\n';
  for (const auto& r : rows) line(r);
  return out;
}

Table table2(const AblationTableInput& ablation) {
  Table t;
  t.header = {"strategy", "accuracy", "precision", "recall", "f1", "explanation"};
  for (const auto& [level, doc] : ablation.levels) {
    const auto& agg = doc.at("aggregate");
    std::vector<std::string> row{fmt::format("L{}", level)};
    for (const char* m : kMetricNames) row.push_back(percent(ratio_from(agg.at(m))));
    t.rows.push_back(std::move(row));
  }
  std::map<std::string, std::map<std::string, const BootstrapDelta*>> by_cmp;
  std::vector<std::string> order;
  for (const auto& [label, d] : ablation.deltas) {
    if (!by_cmp.count(label)) order.push_back(label);
    by_cmp[label][d.metric] = &d;
  }
  for (const auto& label : order) {
    std::vector<std::string> row{"delta " + label};
    for (const char* m : kMetricNames) {
      auto it = by_cmp[label].find(m);
      if (it == by_cmp[label].end()) {
        row.emplace_back("n/a");
        continue;
      }
      const auto& d = *it->second;
      row.push_back(fmt::format("{:+.1f} [{:+.1f},{:+.1f}]{}", 100 * d.delta, 100 * d.ci_low,
                                100 * d.ci_high, d.significant ? "*" : ""));
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

Table table3(const json& metrics_doc) {
  Table t;
  t.header = {"category", "tp", "fp", "fn", "tn", "accuracy", "precision", "recall", "f1",
              "explanation"};
  auto row_of = [&](const std::string& name, const json& m) {
    const auto& k = m.at("counts");
    std::vector<std::string> row{name,
                                 std::to_string(k.at("tp").get<std::int64_t>()),
                                 std::to_string(k.at("fp").get<std::int64_t>()),
                                 std::to_string(k.at("fn").get<std::int64_t>()),
                                 std::to_string(k.at("tn").get<std::int64_t>())};
    for (const char* n : kMetricNames) row.push_back(percent(ratio_from(m.at(n))));
    t.rows.push_back(std::move(row));
  };
  try {
    for (auto c : kAllCategories) {
      const std::string name(to_string(c));
      row_of(name, metrics_doc.at("per_category").at(name));
    }
    row_of("aggregate", metrics_doc.at("aggregate"));
  } catch (const json::exception& e) {
    throw SchemaError(std::string("metrics document: ") + e.what());
  }
  return t;
}

Table table4(const json& truth_prevalence, const json* deployment_prevalence) {
  Table t;
  t.header = {"category", "n", "prevalence", "ci_low", "ci_high"};
  if (deployment_prevalence) {
    t.header = {"category", "n", "truth", "estimate", "ci_low", "ci_high"};
  }
  try {
    for (auto c : kAllCategories) {
      const std::string name(to_string(c));
      const auto& tp = truth_prevalence.at("per_category").at(name);
      if (deployment_prevalence) {
        const auto& dp = deployment_prevalence->at("per_category").at(name);
        t.rows.push_back({name, std::to_string(dp.at("n").get<std::int64_t>()),
                          pct(tp.at("p_hat").get<double>()), pct(dp.at("p_hat").get<double>()),
                          pct(dp.at("ci_low").get<double>()), pct(dp.at("ci_high").get<double>())});
      } else {
        t.rows.push_back({name, std::to_string(tp.at("n").get<std::int64_t>()),
                          pct(tp.at("p_hat").get<double>()), pct(tp.at("ci_low").get<double>()),
                          pct(tp.at("ci_high").get<double>())});
      }
    }
  } catch (const json::exception& e) {
    throw SchemaError(std::string("prevalence document: ") + e.what());
  }
  return t;
}

}  // namespace dpaudit
