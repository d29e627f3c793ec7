#include "dpaudit/taxonomy.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "dpaudit/error.hpp"

namespace dpaudit {

namespace {

using C = Category;
using S = SubtypeId;

constexpr std::array<Subtype, kSubtypeCount> kCatalog{{
    {S::IdentifierFragmentation, "identifier_fragmentation", C::AddingSteps,
     "Identifier fragmentation",
     "The request form takes one identifier per submission although several identifier kinds "
     "are accepted, so a consumer with several identifiers must file several requests."},
    {S::RequestTypeFragmentation, "request_type_fragmentation", C::AddingSteps,
     "Request-type fragmentation",
     "The access right is divided into several request options that cannot be selected "
     "together, so a complete disclosure needs several submissions."},

    {S::SubmissionPathConflict, "submission_path_conflict", C::ConflictingInfo,
     "Submission path conflict",
     "One statement accepts a submission channel that another statement excludes by declaring "
     "a different channel set to be the only valid one."},
    {S::SubmissionScopeContradiction, "submission_scope_contradiction", C::ConflictingInfo,
     "Submission scope contradiction",
     "A statement promises more rights for a pathway than the pathway's destination provides."},
    {S::FormLabelingContradiction, "form_labeling_contradiction", C::ConflictingInfo,
     "Form labeling contradiction",
     "A control advertised for access requests opens a page whose form is presented as an "
     "opt-out control."},

    {S::RoleClassificationBarriers, "role_classification_barriers", C::CreatingBarriers,
     "Role classification barriers",
     "The form forces the requester into one of a fixed list of relationships with no "
     "catch-all option."},
    {S::SubmissionChannelRestriction, "submission_channel_restriction", C::CreatingBarriers,
     "Submission channel restriction",
     "Fewer request submission methods are reachable than the required minimum."},
    {S::ExcessiveIdentityVerification, "excessive_identity_verification", C::CreatingBarriers,
     "Excessive identity verification",
     "A required field demands highly sensitive proof such as a government ID, a social "
     "security number or biometrics."},
    {S::TechnicalIdentifierBurden, "technical_identifier_burden", C::CreatingBarriers,
     "Technical identifier burden",
     "A required field asks for a device-level identifier that ordinary consumers cannot "
     "readily find."},
    {S::NonEssentialRequiredFields, "non_essential_required_fields", C::CreatingBarriers,
     "Non-essential required fields",
     "A required field is needed neither for verification nor for fulfilling the request."},
    {S::InstallExternalApp, "install_external_app", C::CreatingBarriers, "Install external App",
     "The workflow sends the requester to install a separate application."},
    {S::SelfIdentificationBurden, "self_identification_burden", C::CreatingBarriers,
     "Self-identification burden",
     "The requester must find and submit their own records, such as profile URLs."},

    {S::InstructionOutcomeMismatch, "instruction_outcome_mismatch", C::FeedforwardAmbiguity,
     "Instruction-outcome mismatch",
     "A control advertises rights that its destination does not support."},
    {S::AmbiguousRightsTerminology, "ambiguous_rights_terminology", C::FeedforwardAmbiguity,
     "Ambiguous rights terminology",
     "A control or form carries a vague label with no nearby statement explaining it."},
    {S::CoupledOutcomes, "coupled_outcomes", C::FeedforwardAmbiguity, "Coupled outcomes",
     "Submitting the request also triggers other actions automatically."},

    {S::VisuallyDisguisedAffordances, "visually_disguised_affordances", C::HiddenInfo,
     "Visually disguised affordances",
     "A working link is rendered like plain text without link styling."},
    {S::NonActionableReferences, "non_actionable_references", C::HiddenInfo,
     "Non-actionable references",
     "A statement names a submission channel but gives neither a link nor the contact detail."},
    {S::InteractionGatedDisclosure, "interaction_gated_disclosure", C::HiddenInfo,
     "Interaction-gated disclosure",
     "Rights instructions or controls only appear after opening an expandable element."},
    {S::SelectiveOmission, "selective_omission", C::HiddenInfo, "Selective omission",
     "A section presented as the complete rights reference leaves out a channel that is "
     "documented elsewhere, without pointing to it."},

    {S::ContextualMisplacement, "contextual_misplacement", C::InfoWithoutContext,
     "Contextual misplacement of execution guidance",
     "Access instructions live only in contact, opt-out or marketing sections and the rights "
     "section does not point to them."},
    {S::MisleadingFormFraming, "misleading_form_framing", C::InfoWithoutContext,
     "Contextual misleading form framing",
     "A form that handles access requests is presented as an opt-out or marketing control."},
    {S::VagueRequestLabels, "vague_request_labels", C::InfoWithoutContext,
     "Vague or non-standard request labels",
     "A request-type option uses a label that does not map to a legal right."},
    {S::SectionLabelMismatch, "section_label_mismatch", C::InfoWithoutContext,
     "Section label mismatch",
     "A statement points to a named section that does not exist; the content sits under a "
     "different heading."},
    {S::MisdirectPathways, "misdirect_pathways", C::InfoWithoutContext, "Misdirect pathways",
     "A pathway serves only a restricted audience and the restriction is not stated where the "
     "pathway is entered."},

    {S::ExcessiveNavigationalDepth, "excessive_navigational_depth", C::PrivacyMazes,
     "Excessive navigational depth",
     "The submission interface sits deeper than the configured number of page transitions."},
    {S::WithinPageFragmentation, "within_page_fragmentation", C::PrivacyMazes,
     "Within-page fragmentation",
     "Complete instructions for a channel exist on one page only when several of its sections "
     "are combined."},
    {S::CrossPageFragmentation, "cross_page_fragmentation", C::PrivacyMazes,
     "Cross-page fragmentation",
     "No single page holds complete instructions for a channel, but the pages together do."},

    {S::CompetingCallToActionDominance, "competing_cta_dominance", C::VisualProminence,
     "Competing call-to-action dominance",
     "An unrelated control on the rights page is much more prominent than the rights pathway."},
    {S::PersistentOverlayInterference, "persistent_overlay_interference", C::VisualProminence,
     "Persistent overlay interference",
     "A fixed or floating element overlaps the rights pathway."},
}};

}  // namespace

std::span<const Subtype> subtype_catalog() { return kCatalog; }

const Subtype& subtype_info(SubtypeId id) { return kCatalog[static_cast<std::size_t>(id)]; }

std::optional<SubtypeId> subtype_from_slug(std::string_view slug) {
  for (const auto& s : kCatalog) {
    if (s.slug == slug) return s.id;
  }
  return std::nullopt;
}

std::vector<SubtypeId> subtypes_of(Category category) {
  std::vector<SubtypeId> out;
  for (const auto& s : kCatalog) {
    if (s.category == category) out.push_back(s.id);
  }
  return out;
}

std::string_view category_definition(Category category) {
  switch (category) {
    case C::AddingSteps:
      return "The workflow adds interactions beyond what the task technically needs.";
    case C::ConflictingInfo:
      return "Two or more sources give incompatible information about how to act.";
    case C::CreatingBarriers:
      return "The interface obstructs or needlessly complicates exercising the right.";
    case C::FeedforwardAmbiguity:
      return "What a control promises differs from what it actually does.";
    case C::HiddenInfo:
      return "Relevant information is disguised, buried, or presented as irrelevant.";
    case C::InfoWithoutContext:
      return "Information or controls are placed or framed so they are hard to find.";
    case C::PrivacyMazes:
      return "The task needs many screens or fragmented pathways with no overview.";
    case C::VisualProminence:
      return "A more prominent element competes with the element the user needs.";
  }
  return "";
}

std::string_view category_expectation(Category category) {
  switch (category) {
    case C::AddingSteps:
      return "A single request should need no more steps than technically necessary.";
    case C::ConflictingInfo:
      return "Instructions about how to submit a request should be consistent.";
    case C::CreatingBarriers:
      return "The interface should support the request without disproportionate burden.";
    case C::FeedforwardAmbiguity:
      return "A control should lead to the outcome it announces.";
    case C::HiddenInfo:
      return "Information needed to exercise the right should be visible and actionable.";
    case C::InfoWithoutContext:
      return "Guidance should appear where a consumer would reasonably look for it.";
    case C::PrivacyMazes:
      return "Submission guidance should be reachable directly and presented in one place.";
    case C::VisualProminence:
      return "The rights pathway should not be overpowered by unrelated elements.";
  }
  return "";
}

Finding make_finding(Category category, SubtypeId subtype, std::vector<EvidenceRef> evidence,
                     std::string expectation_text, double confidence) {
  if (subtype_info(subtype).category != category) {
    throw PreconditionError("subtype " + std::string(subtype_info(subtype).slug) +
                            " belongs to " + std::string(to_string(subtype_info(subtype).category)) +
                            ", not " + std::string(to_string(category)));
  }
  if (evidence.empty()) throw PreconditionError("finding without evidence");
  if (expectation_text.empty()) throw PreconditionError("finding without expectation assessment");
  if (!(confidence >= 0.0 && confidence <= 1.0)) {
    throw PreconditionError("confidence outside [0,1]");
  }
  return Finding{category, subtype, std::move(evidence),
                 Assessment{std::move(expectation_text), subtype}, confidence};
}

std::map<Category, bool> absent_labels() {
  std::map<Category, bool> out;
  for (auto c : kAllCategories) out[c] = false;
  return out;
}

ValidationReport validate_report(const AuditReport& report, const WorkflowTrace* trace) {
  ValidationReport v;
  auto add = [&](std::string entity, std::string msg) {
    v.push_back({std::move(entity), std::move(msg)});
  };
  if (report.broker_id.empty()) add("report", "empty broker_id");
  for (auto c : kAllCategories) {
    if (!report.labels.count(c)) add(std::string(to_string(c)), "missing category");
  }
  std::map<Category, int> per_category;
  for (std::size_t i = 0; i < report.findings.size(); ++i) {
    const auto& f = report.findings[i];
    const std::string fid = "finding:" + std::to_string(i);
    ++per_category[f.category];
    if (subtype_info(f.subtype).category != f.category) {
      add(fid, "subtype does not belong to category");
    }
    if (f.assessment.harm_mechanism != f.subtype) {
      add(fid, "harm mechanism differs from subtype");
    }
    if (f.assessment.expectation_violation.empty()) add(fid, "empty expectation assessment");
    if (f.evidence.empty()) add(fid, "no evidence");
    if (!(f.confidence >= 0.0 && f.confidence <= 1.0)) add(fid, "confidence outside [0,1]");
    if (trace != nullptr) {
      for (const auto& ref : f.evidence) {
        try {
          resolve_evidence(*trace, ref);
        } catch (const Error& e) {
          add(fid, std::string("evidence does not resolve: ") + e.what());
        }
      }
    }
  }
  for (const auto& [c, present] : report.labels) {
    const int n = per_category.count(c) ? per_category.at(c) : 0;
    if (present && n == 0) add(std::string(to_string(c)), "labeled present without findings");
    if (!present && n > 0) add(std::string(to_string(c)), "findings for a category labeled absent");
  }
  const auto& comp = report.completion;
  if (!comp.verified_success && !report.failure) {
    add("completion", "failed run without failure report");
  }
  if (comp.verified_success && report.failure) {
    add("completion", "verified success with a failure report attached");
  }
  if (comp.verified_success && !comp.internal_success) {
    add("completion", "verified success without internal success");
  }
  std::sort(v.begin(), v.end());
  return v;
}

}  // namespace dpaudit
