#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dpaudit/serialize.hpp"
#include "dpaudit/taxonomy.hpp"
#include "dpaudit/trace.hpp"

namespace dpaudit {

// A ratio that may be undefined; `reason` says why when `value` is empty.
struct Ratio {
  std::optional<double> value;
  std::string reason;

  static Ratio of(double num, double den, std::string_view what);
  bool defined() const { return value.has_value(); }
};

struct ConfusionCell {
  std::int64_t tp = 0, fp = 0, fn = 0, tn = 0;
  std::int64_t total() const { return tp + fp + fn + tn; }
  ConfusionCell& operator+=(const ConfusionCell& o);
};

using ConfusionCounts = std::map<Category, ConfusionCell>;

// Throws PreconditionError when broker sets differ or a prediction is not a
// verified-completed run.
ConfusionCounts confusion(const std::vector<AuditReport>& predictions, const TruthLabels& truth);

struct MetricSet {
  Ratio accuracy, precision, recall, f1;
};

MetricSet classification_metrics(const ConfusionCell& counts);

struct ExplanationCell {
  std::int64_t correct = 0, total = 0;
  Ratio ratio() const;
};

// Per category over true-positive pairs: correct iff every cited evidence
// ref of that category resolves in the broker's trace and some finding's
// harm mechanism is a ground-truth subtype.
std::map<Category, ExplanationCell> explanation_accuracy(
    const std::vector<AuditReport>& predictions, const TruthLabels& truth,
    const std::map<std::string, WorkflowTrace>& traces);

// Throws PreconditionError on empty or mismatched vectors.
double cohen_kappa(const std::vector<bool>& a, const std::vector<bool>& b);

struct CategoryMetrics {
  ConfusionCell counts;
  MetricSet metrics;
  ExplanationCell explanation;
};

struct MetricsReport {
  std::map<Category, CategoryMetrics> per_category;
  // Micro-averaged over all (broker, category) pairs.
  CategoryMetrics aggregate;
  std::int64_t n_evaluated = 0;
  std::int64_t excluded_failed_runs = 0;
};

// Reports and truth must cover the same brokers. Drops unverified runs
// (counted in excluded_failed_runs), then computes
// confusion, metrics and explanation accuracy.
MetricsReport evaluate(const std::vector<AuditReport>& reports, const TruthLabels& truth,
                       const std::map<std::string, WorkflowTrace>& traces);

// ---------------------------------------------------------------------------
// Bootstrap

// One broker's verified outcome, reduced for resampling.
struct EvaluatedRun {
  std::string broker_id;
  std::array<bool, kCategoryCount> predicted{};
  std::array<bool, kCategoryCount> truth{};
  // Set for true-positive pairs only.
  std::array<std::optional<bool>, kCategoryCount> explanation_correct{};
};

std::vector<EvaluatedRun> evaluated_runs(const std::vector<AuditReport>& reports,
                                         const TruthLabels& truth,
                                         const std::map<std::string, WorkflowTrace>& traces);

using SampleMetric = std::function<std::optional<double>(const std::vector<const EvaluatedRun*>&)>;

// Micro-averaged metric by name: accuracy, precision, recall, f1, explanation.
SampleMetric named_metric(const std::string& name);
inline constexpr std::array<const char*, 5> kMetricNames{"accuracy", "precision", "recall", "f1",
                                                         "explanation"};

struct BootstrapDelta {
  std::string metric;
  double delta = 0.0;
  double ci_low = 0.0, ci_high = 0.0;
  bool significant = false;
  int resamples = 0;
  int sample_size = 0;
  std::uint64_t seed = 0;
  std::int64_t redraws = 0;
};

struct BootstrapOptions {
  int m = 50;
  int B = 1000;
  std::uint64_t seed = 0;
  // Undefined-metric redraws allowed over the whole run; 0 means 10 * B.
  std::int64_t redraw_cap = 0;
};

// delta = metric(b) - metric(a). Runs are aligned by broker id; both sets must
// cover the same brokers. Resample r draws from its own generator seeded
// from (seed, r), so earlier resamples do not change when B grows.
BootstrapDelta bootstrap_delta(const std::string& metric_name, const SampleMetric& metric,
                               const std::vector<EvaluatedRun>& runs_a,
                               const std::vector<EvaluatedRun>& runs_b,
                               const BootstrapOptions& options);

// Type-7 (linear interpolation) percentile of unsorted values, q in [0,1].
double percentile(std::vector<double> values, double q);

// ---------------------------------------------------------------------------
// Prevalence

struct PrevalenceCell {
  std::int64_t positives = 0;
  std::int64_t n = 0;
  double p_hat = 0.0;
  double half_width = 0.0;  // before clamping
  double ci_low = 0.0, ci_high = 0.0;
};

// 95% Wald interval, clamped to [0,1]. Throws PreconditionError when n == 0.
PrevalenceCell wald(std::int64_t positives, std::int64_t n);

// Throws PreconditionError when any report is not verified-completed or the
// collection is empty.
std::map<Category, PrevalenceCell> prevalence(const std::vector<AuditReport>& reports);
std::map<Category, PrevalenceCell> prevalence(const TruthLabels& truth);

// ---------------------------------------------------------------------------
// Documents and tables

json metrics_to_json(const MetricsReport& report);
json delta_to_json(const BootstrapDelta& d);
BootstrapDelta delta_from_json(const json& doc);
json prevalence_to_json(const std::map<Category, PrevalenceCell>& prev);

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::string to_csv() const;
  std::string to_text() const;
};

struct AblationLevel {
  int level = 1;
  MetricsReport metrics;
};

struct AblationResult {
  std::vector<AblationLevel> levels;
  // Consecutive-level deltas, one per (pair, metric).
  std::vector<std::pair<std::string, BootstrapDelta>> deltas;
};

json ablation_to_json(const AblationResult& result);
// Reads the level metrics back as aggregate rows and the deltas verbatim.
struct AblationTableInput {
  std::vector<std::pair<int, json>> levels;
  std::vector<std::pair<std::string, BootstrapDelta>> deltas;
};
AblationTableInput ablation_from_json(const json& doc);

Table table2(const AblationTableInput& ablation);
Table table3(const json& metrics_doc);
Table table4(const json& truth_prevalence, const json* deployment_prevalence);

std::string percent(const Ratio& r);

}  // namespace dpaudit
