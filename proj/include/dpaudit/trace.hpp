#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "dpaudit/enums.hpp"

namespace dpaudit {

// ---------------------------------------------------------------------------
// Workflow trace: the normalized, evidence-complete record of one portal.
// All types are plain values; a trace is treated as immutable once built.
// ---------------------------------------------------------------------------

struct DisclosureStatement {
  std::string disclosure_id;
  std::string text;
  // Channels the statement names as valid request methods.
  std::set<ChannelKind> declared_channels;
  // Channels for which the statement supplies the actionable detail
  // (address, number, link target).
  std::set<ChannelKind> detailed_channels;
  // The statement asserts that ONLY `declared_channels` are valid.
  bool declared_exclusive = false;
  std::set<RightKind> declared_rights;
  std::optional<std::string> referenced_section_label;
  bool is_hyperlinked = false;
  bool referenced_channel_actionable = false;
  // Element whose pathway the statement describes.
  std::optional<std::string> pathway_element;
  // Expandable element that must be opened before the statement is visible.
  std::optional<std::string> gated_behind;
};

struct Section {
  std::string section_id;
  std::string label;
  SectionKind kind = SectionKind::Other;
  bool claims_completeness = false;
  std::vector<DisclosureStatement> disclosures;
};

struct InterfaceElement {
  std::string element_id;
  std::string page_id;
  ElementKind kind = ElementKind::Link;
  std::string label_text;
  bool link_affordance = true;
  int prominence = 1;  // ordinal 0..3
  bool persistent_overlay = false;
  bool overlaps_rights_pathway = false;
  std::optional<std::string> gated_behind;
  std::optional<std::string> target_page;
  std::set<RightKind> advertised_rights;
  std::set<RightKind> actual_rights;
  std::optional<std::string> scope_restriction;
  bool restriction_disclosed_at_entry = false;
};

struct RequestOption {
  std::string label;
  RightKind right = RightKind::Access;
};

struct RoleOptions {
  std::vector<std::string> options;
  bool has_other_option = false;
};

struct FormField {
  std::string field_id;
  std::string name;
  bool required = true;
  Sensitivity sensitivity = Sensitivity::None;
  Relevance relevance = Relevance::FulfillmentEssential;
  // 0-based form page; stages beyond 0 need an explicit next_page action.
  int stage = 0;
};

struct FormSpec {
  std::string form_id;
  std::string page_id;
  std::string label_text;
  FormFraming framing = FormFraming::Access;
  bool multi_page = false;
  std::set<IdentifierKind> identifier_kinds_supported;
  int identifiers_per_submission = 1;
  std::vector<RequestOption> request_type_options;
  bool multi_select_allowed = false;
  std::optional<RoleOptions> role_options;
  std::vector<FormField> fields;
  std::set<RightKind> coupled_actions;
  bool coupled_actions_disclosed = false;
  std::set<RightKind> supported_rights;

  int stage_count() const;
};

struct PageState {
  std::string page_id;
  std::string url;
  std::string title;
  bool is_start = false;
  std::vector<Section> sections;
  std::vector<InterfaceElement> elements;
  std::vector<FormSpec> forms;
};

struct SubmissionChannel {
  std::string channel_id;
  ChannelKind kind = ChannelKind::Webform;
  std::set<std::string> declared_in;
  bool reachable = true;
  std::optional<std::string> entry_element;
};

struct NavigationStep {
  int index = 0;
  std::string source_page;
  ActionKind action = ActionKind::Click;
  std::optional<std::string> element_id;
  std::string destination_page;
};

struct RunMetadata {
  std::int64_t duration_ms = 0;
  std::int64_t step_count = 0;
  std::optional<std::int64_t> token_usage;
  bool internal_success = false;
};

struct WorkflowTrace {
  std::string broker_id;
  std::string start_url;
  std::vector<PageState> pages;
  std::vector<SubmissionChannel> channels;
  std::vector<NavigationStep> steps;
  RunMetadata metadata;
};

struct EvidenceRef {
  std::string page_id;
  // Element, disclosure, section, form or form-field id.
  std::string entity_id;
  std::string quote;

  friend bool operator==(const EvidenceRef&, const EvidenceRef&) = default;
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

struct Violation {
  std::string entity_id;
  std::string message;

  friend bool operator==(const Violation&, const Violation&) = default;
  friend auto operator<=>(const Violation&, const Violation&) = default;
};

using ValidationReport = std::vector<Violation>;

// Every invariant violation, ordered by (entity id, message).
ValidationReport validate_trace(const WorkflowTrace& trace);

enum class EntityKind { Section, Disclosure, Element, Form, FormField };

struct ResolvedEvidence {
  EntityKind kind;
  std::string page_id;
  std::string entity_id;
  std::string text;
};

// Throws UnknownEntity when the id (or its page) does not exist, and
// FabricatedEvidence when the quote is not a verbatim substring.
ResolvedEvidence resolve_evidence(const WorkflowTrace& trace, const EvidenceRef& ref);

// Breadth-first page depth from the start page over link/button edges.
std::map<std::string, int> page_depths(const WorkflowTrace& trace);

// Minimum page transitions from the start page to the page holding `element_id`.
// Throws UnknownEntity or UnreachableTarget.
int navigation_depth(const WorkflowTrace& trace, std::string_view element_id);

struct ChannelInventoryEntry {
  std::set<std::string> declared_in;
  bool reachable = false;
  std::set<std::string> complete_on_pages;
  // Union over all pages names and details the channel.
  bool complete_in_union = false;
};

using ChannelInventory = std::map<ChannelKind, ChannelInventoryEntry>;

ChannelInventory channel_inventory(const WorkflowTrace& trace);

// True when a set of disclosures both names `kind` as a request method and
// supplies its actionable detail.
bool instructions_complete(const std::vector<const DisclosureStatement*>& disclosures,
                           ChannelKind kind);

// Heading lexicon helper; the explicit Section::kind tag stays authoritative.
SectionKind classify_heading(std::string_view heading,
                             const std::set<std::string>& vague_lexicon = {});

// Lookup tables over one trace. Holds pointers into `trace`, which must
// outlive the index.
class TraceIndex {
 public:
  explicit TraceIndex(const WorkflowTrace& trace);

  const WorkflowTrace& trace() const { return *trace_; }
  const PageState* page(std::string_view id) const;
  const InterfaceElement* element(std::string_view id) const;
  const DisclosureStatement* disclosure(std::string_view id) const;
  const Section* section(std::string_view id) const;
  const FormSpec* form(std::string_view id) const;
  // Page/section owning a disclosure.
  const PageState* page_of_disclosure(std::string_view id) const;
  const Section* section_of_disclosure(std::string_view id) const;
  const PageState* start_page() const { return start_; }

  std::vector<const DisclosureStatement*> all_disclosures() const;

 private:
  const WorkflowTrace* trace_;
  const PageState* start_ = nullptr;
  std::map<std::string, const PageState*, std::less<>> pages_;
  std::map<std::string, const InterfaceElement*, std::less<>> elements_;
  std::map<std::string, const DisclosureStatement*, std::less<>> disclosures_;
  std::map<std::string, const Section*, std::less<>> sections_;
  std::map<std::string, const FormSpec*, std::less<>> forms_;
  std::map<std::string, const PageState*, std::less<>> disclosure_page_;
  std::map<std::string, const Section*, std::less<>> disclosure_section_;
};

}  // namespace dpaudit
