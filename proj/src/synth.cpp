#include "dpaudit/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <fmt/format.h>

#include "dpaudit/error.hpp"

namespace dpaudit {

using S = SubtypeId;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::set<std::pair<Category, SubtypeId>> PlantSpec::of(std::initializer_list<SubtypeId> subtypes) {
  std::set<std::pair<Category, SubtypeId>> out;
  for (auto s : subtypes) out.emplace(subtype_info(s).category, s);
  return out;
}

namespace {

constexpr std::pair<S, S> kIncompatible[] = {
    // Single-channel portals have no email channel to conflict over, omit
    // or fragment.
    {S::SubmissionChannelRestriction, S::SubmissionPathConflict},
    {S::SubmissionChannelRestriction, S::SelectiveOmission},
    {S::SubmissionChannelRestriction, S::WithinPageFragmentation},
    {S::SubmissionChannelRestriction, S::CrossPageFragmentation},
    // Omission keeps email out of the rights section; fragmentation names it there.
    {S::SelectiveOmission, S::WithinPageFragmentation},
    {S::SelectiveOmission, S::CrossPageFragmentation},
    // Both relocate the email detail.
    {S::WithinPageFragmentation, S::CrossPageFragmentation},
};

constexpr int kMaxPages = 8;

bool has(const std::set<SubtypeId>& s, SubtypeId id) { return s.count(id) > 0; }

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(engine_() % n); }
  template <class T, std::size_t N>
  const T& pick(const std::array<T, N>& items) {
    return items[below(N)];
  }
  bool coin() { return (engine_() & 1U) != 0; }

 private:
  std::mt19937_64 engine_;
};

// Cosmetic vocabularies. None of these may contain a term from the default
// ambiguous lexicon or change any rule-relevant attribute.
constexpr std::array<std::string_view, 4> kRightsLabels{
    "California Privacy Rights", "Your California Rights", "CCPA Rights Requests",
    "California Consumer Privacy Rights"};
constexpr std::array<std::string_view, 3> kReferenceLabels{
    "Your State Privacy Rights", "Notice to California Residents", "CCPA Consumer Disclosures"};
constexpr std::array<std::string_view, 3> kContactLabels{"Contact Us", "Contact Information",
                                                          "How to Contact Us"};
constexpr std::array<std::string_view, 7> kPaddingSections{
    "Information We Collect", "How We Use Information", "Cookies and Tracking",
    "Data Retention",         "Children's Privacy",     "Security Practices",
    "Changes to This Policy"};
constexpr std::array<std::string_view, 6> kPaddingPages{"About Us", "Our Products", "Careers",
                                                        "Newsroom", "Partners",     "Blog"};
constexpr std::array<std::string_view, 3> kMailboxes{"privacy", "dataprivacy", "consumerrights"};
constexpr std::array<std::string_view, 3> kFormLabels{"Privacy Request Form",
                                                       "Consumer Rights Request",
                                                       "Submit a Privacy Request"};
constexpr std::array<std::string_view, 3> kPrivacyLinks{"Privacy Policy", "Privacy Notice",
                                                        "Privacy"};
constexpr std::array<std::string_view, 3> kCtaLabels{"Sign Up for Exclusive Offers",
                                                     "Start Your Free Trial", "Get a Demo Today"};
constexpr std::array<std::string_view, 3> kAmbiguousLabels{"Info Request", "Data Processing",
                                                           "General Inquiry"};
constexpr std::array<std::string_view, 2> kVagueOptionLabels{"Data Inquiry",
                                                             "Information Request"};
constexpr std::array<Sensitivity, 3> kExcessive{Sensitivity::GovId, Sensitivity::Ssn,
                                                Sensitivity::Biometric};

std::string slug_of(std::string_view broker_id) {
  std::string out;
  for (char c : broker_id) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else if (!out.empty() && out.back() != '-') {
      out += '-';
    }
  }
  while (!out.empty() && out.back() == '-') out.pop_back();
  return out.empty() ? "broker" : out;
}

InterfaceElement link(std::string id, std::string page, std::string label, std::string target) {
  InterfaceElement e;
  e.element_id = std::move(id);
  e.page_id = std::move(page);
  e.kind = ElementKind::Link;
  e.label_text = std::move(label);
  e.target_page = std::move(target);
  return e;
}

FormField field(std::string id, std::string name, Relevance relevance,
                Sensitivity sensitivity = Sensitivity::None, int stage = 0) {
  FormField f;
  f.field_id = std::move(id);
  f.name = std::move(name);
  f.required = true;
  f.sensitivity = sensitivity;
  f.relevance = relevance;
  f.stage = stage;
  return f;
}

DisclosureStatement disclosure(std::string id, std::string text) {
  DisclosureStatement d;
  d.disclosure_id = std::move(id);
  d.text = std::move(text);
  d.is_hyperlinked = true;
  d.referenced_channel_actionable = true;
  return d;
}

void validate_spec(const PlantSpec& spec, const std::set<SubtypeId>& subtypes) {
  for (const auto& [c, s] : spec.plants) {
    if (subtype_info(s).category != c) {
      throw PreconditionError(fmt::format("subtype {} does not belong to {}",
                                          subtype_info(s).slug, to_string(c)));
    }
  }
  if (spec.broker_id.empty()) throw PreconditionError("empty broker_id");
  if (spec.shape.page_count < 2 || spec.shape.page_count > kMaxPages) {
    throw PreconditionError("page_count outside [2, 8]");
  }
  if (spec.shape.benign_padding_sections < 0 || spec.shape.benign_padding_sections > 5) {
    throw PreconditionError("benign_padding_sections outside [0, 5]");
  }
  if (spec.shape.form_stages < 0 || spec.shape.form_stages > 3) {
    throw PreconditionError("form_stages outside [0, 3]");
  }
  for (auto a : subtypes) {
    for (auto b : subtypes) {
      if (a < b && !plants_compatible(a, b)) {
        throw UnsatisfiablePlant(fmt::format("{} cannot be planted together with {}",
                                             subtype_info(a).slug, subtype_info(b).slug));
      }
    }
  }
  const int needed = min_page_count(subtypes);
  if (needed > spec.shape.page_count) {
    throw UnsatisfiablePlant(
        fmt::format("plants need {} pages, shape allows {}", needed, spec.shape.page_count));
  }
}

}  // namespace

bool plants_compatible(SubtypeId a, SubtypeId b) {
  for (const auto& [x, y] : kIncompatible) {
    if ((x == a && y == b) || (x == b && y == a)) return false;
  }
  return true;
}

std::vector<std::pair<SubtypeId, SubtypeId>> incompatible_pairs() {
  return {std::begin(kIncompatible), std::end(kIncompatible)};
}

int extra_pages_required(const std::set<SubtypeId>& s) {
  int extra = 0;
  if (has(s, S::ExcessiveNavigationalDepth)) extra += 3;
  if (has(s, S::CrossPageFragmentation)) extra += 1;
  if (has(s, S::FormLabelingContradiction)) extra += 1;
  if (has(s, S::InstructionOutcomeMismatch)) extra += 1;
  return extra;
}

int min_page_count(const std::set<SubtypeId>& s) { return 2 + extra_pages_required(s); }

WorkflowTrace generate(const PlantSpec& spec) {
  std::set<SubtypeId> p;
  for (const auto& [c, s] : spec.plants) p.insert(s);
  validate_spec(spec, p);

  Rng rng(spec.seed);
  const std::string slug = slug_of(spec.broker_id);
  const std::string base_url = "https://www." + slug + ".example";
  const std::string email = fmt::format("{}@{}.example", rng.pick(kMailboxes), slug);
  const std::string rights_label(rng.pick(kRightsLabels));
  const std::string contact_label(rng.pick(kContactLabels));
  int stages = spec.shape.form_stages;
  if (stages == 0) stages = rng.coin() ? 2 : 1;

  WorkflowTrace t;
  t.broker_id = spec.broker_id;
  t.start_url = base_url + "/";

  const bool deep_form = has(p, S::ExcessiveNavigationalDepth);
  const std::string form_page = deep_form ? "form" : "policy";

  PageState home{"home", t.start_url, "Home", true, {}, {}, {}};
  home.sections.push_back({"sec_welcome", "Welcome", SectionKind::Other, false, {}});
  auto privacy_link = link("el_privacy", "home", std::string(rng.pick(kPrivacyLinks)), "policy");
  if (has(p, S::VisuallyDisguisedAffordances)) {
    privacy_link.link_affordance = false;
    privacy_link.prominence = 0;
  }
  home.elements.push_back(privacy_link);

  PageState policy{"policy", base_url + "/privacy", "Privacy Policy", false, {}, {}, {}};

  // -- main disclosure ------------------------------------------------------
  const bool email_channel = !has(p, S::SubmissionChannelRestriction);
  const bool email_in_rights = email_channel && !has(p, S::SelectiveOmission);
  const bool email_detail_elsewhere =
      has(p, S::WithinPageFragmentation) || has(p, S::CrossPageFragmentation);

  auto d_main = disclosure("dsc_main", "");
  d_main.declared_rights = {RightKind::Access, RightKind::Delete};
  d_main.declared_channels = {ChannelKind::Webform};
  d_main.detailed_channels = {ChannelKind::Webform};
  if (email_in_rights) {
    d_main.declared_channels.insert(ChannelKind::Email);
    if (email_detail_elsewhere) {
      d_main.text =
          "To request access to or deletion of your personal information, contact our privacy "
          "team by email or submit the online request form.";
    } else {
      d_main.detailed_channels.insert(ChannelKind::Email);
      d_main.text = fmt::format(
          "To request access to or deletion of your personal information, email {} or submit "
          "the online request form.",
          email);
    }
  } else {
    d_main.text =
        "To request access to or deletion of your personal information, submit the online "
        "request form.";
  }
  if (has(p, S::InteractionGatedDisclosure)) {
    d_main.gated_behind = "el_expand";
    InterfaceElement e;
    e.element_id = "el_expand";
    e.page_id = "policy";
    e.kind = ElementKind::Expandable;
    e.label_text = rng.coin() ? "Read more" : "Show details";
    e.link_affordance = false;
    policy.elements.push_back(e);
  }

  // -- rights section -------------------------------------------------------
  Section rights{"sec_rights", rights_label, SectionKind::CcpaRights, true, {}};
  Section contact{"sec_contact", contact_label, SectionKind::Contact, false, {}};
  const bool misplaced = has(p, S::ContextualMisplacement);
  if (misplaced) {
    contact.disclosures.push_back(d_main);
    rights.claims_completeness = has(p, S::SelectiveOmission);
  } else {
    rights.disclosures.push_back(d_main);
  }
  if (has(p, S::SelectiveOmission)) {
    auto d = disclosure("dsc_contact_email",
                        fmt::format("You can also reach our privacy office by email at {}.", email));
    d.declared_channels = {ChannelKind::Email};
    d.detailed_channels = {ChannelKind::Email};
    contact.disclosures.push_back(d);
  }
  if (has(p, S::SubmissionScopeContradiction)) {
    auto d = disclosure("dsc_scope",
                        "Use the Do Not Sell or Share link to access, delete, or opt out of the "
                        "sale of your personal information.");
    d.declared_rights = {RightKind::Access, RightKind::Delete, RightKind::OptOut};
    d.pathway_element = "el_optout";
    rights.disclosures.push_back(d);
    auto e = link("el_optout", "policy", "Do Not Sell or Share My Personal Information", "policy");
    e.advertised_rights = {RightKind::OptOut};
    e.actual_rights = {RightKind::OptOut};
    policy.elements.push_back(e);
  }
  if (has(p, S::NonActionableReferences)) {
    auto d = disclosure("dsc_postal", "Written requests may also be sent to our privacy office by mail.");
    d.declared_channels = {ChannelKind::Postal};
    d.is_hyperlinked = false;
    d.referenced_channel_actionable = false;
    rights.disclosures.push_back(d);
  }
  if (has(p, S::InstallExternalApp)) {
    auto d = disclosure("dsc_app",
                        fmt::format("To verify your identity you must install the {} Privacy app "
                                    "on your phone.",
                                    slug));
    d.declared_channels = {ChannelKind::ExternalApp};
    d.detailed_channels = {ChannelKind::ExternalApp};
    rights.disclosures.push_back(d);
  }
  if (has(p, S::SectionLabelMismatch)) {
    const std::string ref(rng.pick(kReferenceLabels));
    auto d = disclosure("dsc_reference",
                        fmt::format("Details on how to submit a request appear under \"{}\" below.", ref));
    d.referenced_section_label = ref;
    d.is_hyperlinked = false;
    d.referenced_channel_actionable = false;
    rights.disclosures.push_back(d);
  }
  policy.sections.push_back(rights);
  if (!contact.disclosures.empty()) policy.sections.push_back(contact);

  if (has(p, S::SubmissionPathConflict)) {
    auto d = disclosure("dsc_exclusive",
                        "Requests can only be submitted through our online request form.");
    d.declared_channels = {ChannelKind::Webform};
    d.detailed_channels = {ChannelKind::Webform};
    d.declared_exclusive = true;
    policy.sections.push_back({"sec_submitting", "Submitting Requests", SectionKind::Other, false, {d}});
  }
  if (has(p, S::WithinPageFragmentation)) {
    auto d = disclosure("dsc_email_detail",
                        fmt::format("Our privacy team can be reached at {}.", email));
    d.detailed_channels = {ChannelKind::Email};
    policy.sections.push_back(
        {"sec_privacy_team", "Reaching Our Privacy Team", SectionKind::Other, false, {d}});
  }
  {
    std::vector<std::string_view> pool(kPaddingSections.begin(), kPaddingSections.end());
    for (int i = 0; i < spec.shape.benign_padding_sections; ++i) {
      const auto k = rng.below(pool.size());
      const std::string label(pool[k]);
      pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(k));
      auto d = disclosure(fmt::format("dsc_pad{}", i),
                          fmt::format("This part of our policy covers {}.", label));
      d.is_hyperlinked = false;
      d.referenced_channel_actionable = false;
      policy.sections.push_back(
          {fmt::format("sec_pad{}", i), label, SectionKind::Other, false, {d}});
    }
  }

  // -- pages reached from the policy page -----------------------------------
  std::vector<PageState> extra_pages;
  std::vector<std::string> path_to_form{"el_privacy"};
  std::vector<std::string> path_pages{"home", "policy"};
  if (deep_form) {
    const std::array<std::string, 3> chain{"req1", "req2", "form"};
    const std::array<std::string, 3> labels{"Submit a Request", "Continue", "Continue to Request Form"};
    std::string from = "policy";
    for (std::size_t i = 0; i < chain.size(); ++i) {
      const std::string id = fmt::format("el_step{}", i + 1);
      auto e = link(id, from, labels[i], chain[i]);
      (from == "policy" ? policy.elements : extra_pages.back().elements).push_back(e);
      extra_pages.push_back({chain[i], fmt::format("{}/privacy/request/{}", base_url, i + 1),
                             fmt::format("Request step {}", i + 1), false, {}, {}, {}});
      extra_pages.back().sections.push_back(
          {fmt::format("sec_step{}", i + 1), fmt::format("Step {}", i + 1), SectionKind::Other,
           false, {}});
      path_to_form.push_back(id);
      path_pages.push_back(chain[i]);
      from = chain[i];
    }
  }
  auto page_ref = [&](const std::string& id) -> PageState& {
    if (id == "policy") return policy;
    for (auto& pg : extra_pages) {
      if (pg.page_id == id) return pg;
    }
    throw std::logic_error("no page " + id);
  };

  if (has(p, S::FormLabelingContradiction)) {
    auto e = link("el_access_data", "policy", "Access My Data", "optout");
    e.advertised_rights = {RightKind::Access};
    e.actual_rights = {RightKind::Access};
    policy.elements.push_back(e);
    PageState pg{"optout", base_url + "/privacy/choices", "Your Privacy Choices", false, {}, {}, {}};
    FormSpec f;
    f.form_id = "frm_optout";
    f.page_id = "optout";
    f.label_text = "Do Not Sell My Personal Information";
    f.framing = FormFraming::OptOut;
    f.identifier_kinds_supported = {IdentifierKind::Email};
    f.supported_rights = {RightKind::Access, RightKind::OptOut};
    f.fields = {field("fld_optout_email", "Email Address", Relevance::VerificationEssential)};
    pg.forms.push_back(f);
    extra_pages.push_back(pg);
  }
  if (has(p, S::InstructionOutcomeMismatch)) {
    auto e = link("el_account", "policy", "Access Your Data", "account");
    e.advertised_rights = {RightKind::Access};
    policy.elements.push_back(e);
    PageState pg{"account", base_url + "/account/create", "Create an Account", false, {}, {}, {}};
    pg.sections.push_back({"sec_account", "Create Your Account", SectionKind::Other, false, {}});
    extra_pages.push_back(pg);
  }
  if (has(p, S::CrossPageFragmentation)) {
    policy.elements.push_back(link("el_contact", "policy", contact_label, "contact"));
    PageState pg{"contact", base_url + "/contact", "Contact", false, {}, {}, {}};
    auto d = disclosure("dsc_email_address", fmt::format("Email: {}", email));
    d.detailed_channels = {ChannelKind::Email};
    pg.sections.push_back({"sec_contact_page", "Contact Details", SectionKind::Contact, false, {d}});
    extra_pages.push_back(pg);
  }

  // -- main form --------------------------------------------------------------
  PageState& fpage = page_ref(form_page);
  {
    InterfaceElement e;
    e.element_id = "el_form";
    e.page_id = form_page;
    e.kind = ElementKind::FormRef;
    e.label_text = "Submit a Privacy Request";
    e.advertised_rights = {RightKind::Access, RightKind::Delete};
    e.actual_rights = {RightKind::Access, RightKind::Delete};
    if (has(p, S::MisdirectPathways)) e.scope_restriction = "Business clients only";
    fpage.elements.push_back(e);
  }
  FormSpec form;
  form.form_id = "frm_main";
  form.page_id = form_page;
  form.label_text = has(p, S::AmbiguousRightsTerminology) ? std::string(rng.pick(kAmbiguousLabels))
                                                          : std::string(rng.pick(kFormLabels));
  form.framing = has(p, S::MisleadingFormFraming)
                     ? (rng.coin() ? FormFraming::OptOut : FormFraming::Marketing)
                     : FormFraming::Access;
  form.supported_rights = {RightKind::Access, RightKind::Delete};
  form.identifier_kinds_supported = {IdentifierKind::Email};
  if (has(p, S::IdentifierFragmentation)) {
    form.identifier_kinds_supported = {IdentifierKind::Email, IdentifierKind::IpAddress,
                                       IdentifierKind::Maid};
  }
  if (has(p, S::RequestTypeFragmentation)) {
    form.request_type_options = {{"Categories of personal information", RightKind::Access},
                                 {"Specific pieces of personal information", RightKind::Access},
                                 {"Delete my personal information", RightKind::Delete}};
  } else {
    form.request_type_options = {{"Access my personal information", RightKind::Access},
                                 {"Delete my personal information", RightKind::Delete}};
  }
  if (has(p, S::VagueRequestLabels)) {
    form.request_type_options.front().label = std::string(rng.pick(kVagueOptionLabels));
  }
  if (has(p, S::RoleClassificationBarriers)) {
    form.role_options = RoleOptions{{"Consumer", "Employee", "Business Contact"}, false};
  }
  if (has(p, S::CoupledOutcomes)) form.coupled_actions = {RightKind::OptOut};
  form.fields = {field("fld_name", "Full Name", Relevance::VerificationEssential),
                 field("fld_email", "Email Address", Relevance::VerificationEssential),
                 field("fld_request", "Request Type", Relevance::FulfillmentEssential)};
  if (stages >= 2) {
    form.fields.push_back(
        field("fld_address", "Mailing Address", Relevance::VerificationEssential, Sensitivity::None, 1));
  }
  if (stages >= 3) {
    form.fields.push_back(
        field("fld_confirm", "Confirm Email Address", Relevance::VerificationEssential, Sensitivity::None, 2));
  }
  form.multi_page = stages > 1;
  if (has(p, S::ExcessiveIdentityVerification)) {
    const auto sens = rng.pick(kExcessive);
    const char* name = sens == Sensitivity::GovId ? "Government ID Upload"
                       : sens == Sensitivity::Ssn ? "Social Security Number"
                                                  : "Face Scan";
    form.fields.push_back(field("fld_identity", name, Relevance::VerificationEssential, sens));
  }
  if (has(p, S::TechnicalIdentifierBurden)) {
    form.fields.push_back(field("fld_device", "Mobile Advertising ID",
                                Relevance::VerificationEssential, Sensitivity::DeviceIdentifier));
  }
  if (has(p, S::NonEssentialRequiredFields)) {
    form.fields.push_back(field("fld_income", "Annual Household Income", Relevance::NonEssential));
  }
  if (has(p, S::SelfIdentificationBurden)) {
    form.fields.push_back(field("fld_profile", "Profile URL", Relevance::VerificationEssential,
                                Sensitivity::ProfileUrl));
  }
  fpage.forms.push_back(form);

  if (has(p, S::CompetingCallToActionDominance)) {
    InterfaceElement e;
    e.element_id = "el_cta";
    e.page_id = form_page;
    e.kind = ElementKind::Button;
    e.label_text = std::string(rng.pick(kCtaLabels));
    e.prominence = 3;
    fpage.elements.push_back(e);
  }
  if (has(p, S::PersistentOverlayInterference)) {
    InterfaceElement e;
    e.element_id = "el_chat";
    e.page_id = form_page;
    e.kind = ElementKind::Overlay;
    e.label_text = "Chat with us";
    e.link_affordance = false;
    e.persistent_overlay = true;
    e.overlaps_rights_pathway = true;
    fpage.elements.push_back(e);
  }

  // -- padding pages ----------------------------------------------------------
  const int used = 2 + static_cast<int>(extra_pages.size());
  std::vector<PageState> padding;
  for (int i = 0; used + i < spec.shape.page_count; ++i) {
    const std::string id = fmt::format("pad{}", i + 1);
    const std::string label(kPaddingPages[(i + rng.below(kPaddingPages.size())) % kPaddingPages.size()]);
    home.elements.push_back(link(fmt::format("el_pad{}", i + 1), "home", label, id));
    PageState pg{id, fmt::format("{}/{}", base_url, id), label, false, {}, {}, {}};
    pg.sections.push_back({fmt::format("sec_pad_page{}", i + 1), "Overview", SectionKind::Other, false, {}});
    padding.push_back(pg);
  }

  // -- channels ---------------------------------------------------------------
  t.channels.push_back({"ch_webform", ChannelKind::Webform, {"dsc_main"}, true, "el_form"});
  if (email_channel) {
    std::set<std::string> declared;
    if (email_in_rights) declared.insert("dsc_main");
    if (has(p, S::SelectiveOmission)) declared.insert("dsc_contact_email");
    t.channels.push_back({"ch_email", ChannelKind::Email, declared, true, std::nullopt});
  }
  if (has(p, S::InstallExternalApp)) {
    t.channels.push_back({"ch_app", ChannelKind::ExternalApp, {"dsc_app"}, true, std::nullopt});
  }

  // -- walk -------------------------------------------------------------------
  for (std::size_t i = 0; i < path_to_form.size(); ++i) {
    t.steps.push_back({static_cast<int>(i), path_pages[i], ActionKind::Click, path_to_form[i],
                       path_pages[i + 1]});
  }
  auto push_step = [&](ActionKind a) {
    t.steps.push_back({static_cast<int>(t.steps.size()), form_page, a, "frm_main", form_page});
  };
  push_step(ActionKind::Fill);
  for (int s = 1; s < stages; ++s) push_step(ActionKind::NextPage);

  t.pages.push_back(std::move(home));
  t.pages.push_back(std::move(policy));
  for (auto& pg : extra_pages) t.pages.push_back(std::move(pg));
  for (auto& pg : padding) t.pages.push_back(std::move(pg));
  t.metadata.step_count = static_cast<std::int64_t>(t.steps.size());
  t.metadata.internal_success = true;
  return canonicalize(std::move(t));
}

TruthEntry truth_for(const PlantSpec& spec) {
  TruthEntry e;
  e.labels = absent_labels();
  for (const auto& [c, s] : spec.plants) {
    e.labels[c] = true;
    e.subtypes.insert(s);
  }
  return e;
}

// ---------------------------------------------------------------------------

namespace {
constexpr std::array<std::pair<FaultKind, std::string_view>, 7> kFaultNames{{
    {FaultKind::CaptchaPage, "captcha_page"},
    {FaultKind::CrashAtStep, "crash_at_step"},
    {FaultKind::TimeoutAtStep, "timeout_at_step"},
    {FaultKind::MalformedInternalState, "malformed_internal_state"},
    {FaultKind::PdfOnlyInstructions, "pdf_only_instructions"},
    {FaultKind::BrokenPolicyLink, "broken_policy_link"},
    {FaultKind::UnexposedFormPage, "unexposed_form_page"},
}};
}  // namespace

std::string_view to_string(FaultKind kind) {
  for (const auto& [k, n] : kFaultNames) {
    if (k == kind) return n;
  }
  return "?";
}

std::optional<FaultKind> fault_from_string(std::string_view name) {
  for (const auto& [k, n] : kFaultNames) {
    if (n == name) return k;
  }
  return std::nullopt;
}

PortalBlueprint inject_faults(const WorkflowTrace& trace, const FaultPlan& plan) {
  const auto violations = validate_trace(trace);
  if (!violations.empty()) {
    throw PreconditionError("invalid trace: " + violations.front().entity_id + ": " +
                            violations.front().message);
  }
  if (plan.faults.size() > 1) throw PreconditionError("at most one fault per run");
  PortalBlueprint bp{trace, std::nullopt};
  if (plan.faults.empty()) return bp;
  const auto& f = plan.faults.front();
  if (f.kind == FaultKind::CrashAtStep || f.kind == FaultKind::TimeoutAtStep) {
    if (f.step < 0 || f.step >= static_cast<int>(trace.steps.size())) {
      throw UnreachableTarget(fmt::format("{} {} beyond a {}-step trace", to_string(f.kind), f.step,
                                          trace.steps.size()));
    }
  }
  if (f.kind == FaultKind::UnexposedFormPage) {
    bool multi = false;
    for (const auto& pg : trace.pages) {
      for (const auto& form : pg.forms) multi = multi || form.stage_count() > 1;
    }
    if (!multi) throw PreconditionError("unexposed_form_page needs a multi-page form");
  }
  bp.fault = f;
  return bp;
}

// ---------------------------------------------------------------------------

CorpusMix CorpusMix::table4() {
  return CorpusMix{{0.241, 0.261, 0.556, 0.378, 0.211, 0.337, 0.268, 0.278}};
}

std::vector<CorpusItem> generate_corpus(int n, std::uint64_t seed, const CorpusMix& mix) {
  if (n < 1) throw PreconditionError("corpus size must be >= 1");
  for (double p : mix.prevalence) {
    if (!(p >= 0.0 && p <= 1.0)) throw PreconditionError("prevalence outside [0,1]");
  }
  Rng rng(seed);
  std::vector<std::set<Category>> assigned(static_cast<std::size_t>(n));
  for (auto c : kAllCategories) {
    const auto k = static_cast<std::size_t>(std::llround(mix.prevalence[index_of(c)] * n));
    std::vector<std::size_t> order(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    for (std::size_t i = 0; i < k; ++i) assigned[order[i]].insert(c);
  }

  std::vector<CorpusItem> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    std::vector<Category> cats(assigned[static_cast<std::size_t>(i)].begin(),
                               assigned[static_cast<std::size_t>(i)].end());
    for (std::size_t j = cats.size(); j > 1; --j) std::swap(cats[j - 1], cats[rng.below(j)]);
    std::set<SubtypeId> chosen;
    for (auto c : cats) {
      std::vector<SubtypeId> candidates;
      for (auto s : subtypes_of(c)) {
        bool ok = std::all_of(chosen.begin(), chosen.end(),
                              [&](SubtypeId o) { return plants_compatible(s, o); });
        auto with = chosen;
        with.insert(s);
        if (ok && min_page_count(with) <= kMaxPages) candidates.push_back(s);
      }
      if (candidates.empty()) {
        throw UnsatisfiablePlant(fmt::format("no compatible subtype left for {}", to_string(c)));
      }
      chosen.insert(candidates[rng.below(candidates.size())]);
    }
    PlantSpec spec;
    for (auto s : chosen) spec.plants.emplace(subtype_info(s).category, s);
    spec.broker_id = fmt::format("broker_{:04d}", i);
    spec.seed = splitmix64(seed + static_cast<std::uint64_t>(i));
    const int lo = min_page_count(chosen);
    spec.shape.page_count = lo + static_cast<int>(rng.below(static_cast<std::size_t>(kMaxPages - lo + 1)));
    spec.shape.benign_padding_sections = static_cast<int>(rng.below(6));
    auto trace = generate(spec);
    auto truth = truth_for(spec);
    out.push_back({std::move(spec), std::move(trace), std::move(truth)});
  }
  return out;
}

}  // namespace dpaudit
