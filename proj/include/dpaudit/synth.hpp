#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "dpaudit/serialize.hpp"
#include "dpaudit/taxonomy.hpp"
#include "dpaudit/trace.hpp"

namespace dpaudit {

struct PortalShape {
  int page_count = 2;               // 2..8
  int benign_padding_sections = 0;  // 0..5
  // Stages of the main request form, 1..3; 0 lets the seed pick 1 or 2.
  int form_stages = 0;
};

struct PlantSpec {
  std::set<std::pair<Category, SubtypeId>> plants;
  std::string broker_id = "broker";
  std::uint64_t seed = 0;
  PortalShape shape;

  // Convenience: the plant set for a list of subtypes.
  static std::set<std::pair<Category, SubtypeId>> of(std::initializer_list<SubtypeId> subtypes);
};

// Pages a plant set needs beyond the two-page base portal.
int extra_pages_required(const std::set<SubtypeId>& subtypes);
// Smallest page_count satisfying the plants.
int min_page_count(const std::set<SubtypeId>& subtypes);

// Subtype pairs that cannot share one portal (their constructions contradict).
bool plants_compatible(SubtypeId a, SubtypeId b);
std::vector<std::pair<SubtypeId, SubtypeId>> incompatible_pairs();

// Builds a portal exhibiting exactly the planted subtypes. Throws
// PreconditionError for a malformed spec (subtype outside its category, shape
// out of range) and UnsatisfiablePlant when plants conflict or do not fit the
// page budget.
WorkflowTrace generate(const PlantSpec& spec);

// Truth entry for a plant set.
TruthEntry truth_for(const PlantSpec& spec);

// ---------------------------------------------------------------------------
// Runtime faults

enum class FaultKind {
  CaptchaPage,
  CrashAtStep,
  TimeoutAtStep,
  MalformedInternalState,
  PdfOnlyInstructions,
  BrokenPolicyLink,
  UnexposedFormPage
};

struct Fault {
  FaultKind kind = FaultKind::CaptchaPage;
  // Step index for crash/timeout.
  int step = 0;
};

struct FaultPlan {
  std::vector<Fault> faults;
};

struct PortalBlueprint {
  WorkflowTrace trace;
  std::optional<Fault> fault;
};

// Throws PreconditionError for an invalid trace, more than one fault, or a
// fault that needs a multi-page form on a trace without one; throws
// UnreachableTarget when a crash/timeout step is beyond the trace length.
PortalBlueprint inject_faults(const WorkflowTrace& trace, const FaultPlan& plan);

std::string_view to_string(FaultKind kind);
std::optional<FaultKind> fault_from_string(std::string_view name);

// ---------------------------------------------------------------------------
// Corpus

struct CorpusMix {
  // Planted prevalence per category, in Category order.
  std::array<double, kCategoryCount> prevalence{};

  // Reference category prevalences behind `--mix table4`.
  static CorpusMix table4();
};

struct CorpusItem {
  PlantSpec spec;
  WorkflowTrace trace;
  TruthEntry truth;
};

// Stratified: exactly round(p * n) brokers carry each category. One subtype
// per planted category, drawn among those compatible with the rest.
// Item i uses a seed derived from (seed, i); same inputs give identical output.
std::vector<CorpusItem> generate_corpus(int n, std::uint64_t seed, const CorpusMix& mix);

// Deterministic 64-bit mixer used for per-item seed derivation.
std::uint64_t splitmix64(std::uint64_t x);

}  // namespace dpaudit
