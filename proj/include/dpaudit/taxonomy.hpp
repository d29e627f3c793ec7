#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dpaudit/enums.hpp"
#include "dpaudit/trace.hpp"

namespace dpaudit {

// The 29 harm-mechanism subtypes, grouped by category in catalog order.
enum class SubtypeId {
  // AddingSteps
  IdentifierFragmentation,
  RequestTypeFragmentation,
  // ConflictingInfo
  SubmissionPathConflict,
  SubmissionScopeContradiction,
  FormLabelingContradiction,
  // CreatingBarriers
  RoleClassificationBarriers,
  SubmissionChannelRestriction,
  ExcessiveIdentityVerification,
  TechnicalIdentifierBurden,
  NonEssentialRequiredFields,
  InstallExternalApp,
  SelfIdentificationBurden,
  // FeedforwardAmbiguity
  InstructionOutcomeMismatch,
  AmbiguousRightsTerminology,
  CoupledOutcomes,
  // HiddenInfo
  VisuallyDisguisedAffordances,
  NonActionableReferences,
  InteractionGatedDisclosure,
  SelectiveOmission,
  // InfoWithoutContext
  ContextualMisplacement,
  MisleadingFormFraming,
  VagueRequestLabels,
  SectionLabelMismatch,
  MisdirectPathways,
  // PrivacyMazes
  ExcessiveNavigationalDepth,
  WithinPageFragmentation,
  CrossPageFragmentation,
  // VisualProminence
  CompetingCallToActionDominance,
  PersistentOverlayInterference,
};
inline constexpr std::size_t kSubtypeCount = 29;

struct Subtype {
  SubtypeId id;
  std::string_view slug;
  Category category;
  std::string_view name;
  std::string_view definition_text;
};

// Fixed, ordered catalog (category order, then listing order).
std::span<const Subtype> subtype_catalog();
const Subtype& subtype_info(SubtypeId id);
std::optional<SubtypeId> subtype_from_slug(std::string_view slug);
std::vector<SubtypeId> subtypes_of(Category category);

// One-line definition of each category.
std::string_view category_definition(Category category);
// Reasonable expectation each category violates; used for finding rationales.
std::string_view category_expectation(Category category);

struct Assessment {
  std::string expectation_violation;
  SubtypeId harm_mechanism;
};

struct Finding {
  Category category;
  SubtypeId subtype;
  std::vector<EvidenceRef> evidence;
  Assessment assessment;
  double confidence = 1.0;
};

// Throws PreconditionError on category/subtype mismatch, empty evidence,
// empty expectation text, or confidence outside [0,1].
Finding make_finding(Category category, SubtypeId subtype, std::vector<EvidenceRef> evidence,
                     std::string expectation_text, double confidence);

struct CompletionStatus {
  bool internal_success = false;
  bool verified_success = false;
  std::string reason;
};

struct FailureReport {
  FailureCategory category = FailureCategory::AgentInstability;
  std::vector<EvidenceRef> evidence;
  std::vector<int> step_indices;
  std::string narrative;
  // Raised issue could not be mapped to a category.
  bool needs_review = false;
};

struct AuditReport {
  std::string broker_id;
  std::vector<ChannelKind> detected_channels;
  std::vector<std::string> form_fields;
  std::map<Category, bool> labels;
  std::vector<Finding> findings;
  CompletionStatus completion;
  std::optional<FailureReport> failure;
  RunMetadata metadata;
};

// All-absent labels for every category.
std::map<Category, bool> absent_labels();

// Checks every AuditReport invariant; when `trace` is supplied, also that
// every evidence reference resolves in it.
ValidationReport validate_report(const AuditReport& report,
                                 const WorkflowTrace* trace = nullptr);

}  // namespace dpaudit
