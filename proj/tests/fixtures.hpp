#pragma once

#include <string>

#include "dpaudit/trace.hpp"

namespace fixtures {

using namespace dpaudit;

inline InterfaceElement link(const std::string& id, const std::string& page, const std::string& label,
                             const std::string& target) {
  InterfaceElement e;
  e.element_id = id;
  e.page_id = page;
  e.kind = ElementKind::Link;
  e.label_text = label;
  e.target_page = target;
  return e;
}

inline PageState page(const std::string& id, bool start = false) {
  PageState p;
  p.page_id = id;
  p.url = "https://broker.example/" + (start ? std::string() : id);
  p.title = id;
  p.is_start = start;
  return p;
}

// Three pages: home -> policy -> form. Policy names email and webform with
// full detail; the form asks for name, email and state.
inline WorkflowTrace benign_portal() {
  WorkflowTrace t;
  t.broker_id = "broker_f1";
  t.start_url = "https://broker.example/";

  auto home = page("home", true);
  home.elements.push_back(link("el_privacy", "home", "Privacy Policy", "policy"));

  auto policy = page("policy");
  Section rights;
  rights.section_id = "sec_rights";
  rights.label = "Your Privacy Rights";
  rights.kind = SectionKind::PrivacyRights;
  DisclosureStatement d;
  d.disclosure_id = "dsc_methods";
  d.text = "Submit an access request via email or webform: write to privacy@broker.example or "
           "use our request form.";
  d.declared_channels = {ChannelKind::Email, ChannelKind::Webform};
  d.detailed_channels = {ChannelKind::Email, ChannelKind::Webform};
  d.declared_rights = {RightKind::Access};
  d.is_hyperlinked = true;
  d.referenced_channel_actionable = true;
  rights.disclosures.push_back(d);
  policy.sections.push_back(rights);
  auto to_form = link("el_form", "policy", "Request access to your data", "form");
  to_form.advertised_rights = {RightKind::Access};
  to_form.actual_rights = {RightKind::Access};
  policy.elements.push_back(to_form);

  auto form_page = page("form");
  FormSpec f;
  f.form_id = "frm_access";
  f.page_id = "form";
  f.label_text = "Access request";
  f.framing = FormFraming::Access;
  f.identifier_kinds_supported = {IdentifierKind::Email};
  f.supported_rights = {RightKind::Access};
  f.fields = {{"fld_name", "Full name", true, Sensitivity::None, Relevance::VerificationEssential, 0},
              {"fld_email", "Email address", true, Sensitivity::None, Relevance::VerificationEssential, 0},
              {"fld_state", "State of residence", true, Sensitivity::None,
               Relevance::FulfillmentEssential, 0}};
  form_page.forms.push_back(f);

  t.pages = {home, policy, form_page};
  t.channels = {{"ch_web", ChannelKind::Webform, {"dsc_methods"}, true, "el_form"},
                {"ch_email", ChannelKind::Email, {"dsc_methods"}, true, std::nullopt}};
  t.steps = {{0, "home", ActionKind::Click, "el_privacy", "policy"},
             {1, "policy", ActionKind::Click, "el_form", "form"}};
  t.metadata = {500, 2, std::nullopt, true};
  return t;
}

// p0 -> p1 -> ... -> p{n-1}; element `el_end` sits on the last page.
inline WorkflowTrace chain(int n) {
  WorkflowTrace t;
  t.broker_id = "broker_chain";
  t.start_url = "https://broker.example/";
  for (int i = 0; i < n; ++i) {
    auto p = page("p" + std::to_string(i), i == 0);
    if (i + 1 < n) {
      p.elements.push_back(link("el_next" + std::to_string(i), p.page_id, "Next",
                                "p" + std::to_string(i + 1)));
    }
    t.pages.push_back(p);
  }
  auto end = link("el_end", t.pages.back().page_id, "End", t.pages.back().page_id);
  t.pages.back().elements.push_back(end);
  return t;
}

inline FormSpec& form_of(WorkflowTrace& t) { return t.pages[2].forms[0]; }
inline DisclosureStatement& methods_of(WorkflowTrace& t) {
  return t.pages[1].sections[0].disclosures[0];
}

}  // namespace fixtures
