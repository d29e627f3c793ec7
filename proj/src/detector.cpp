#include "dpaudit/detector.hpp"

#include <algorithm>

#include "dpaudit/error.hpp"
#include "dpaudit/text.hpp"

namespace dpaudit {

DetectorConfig& DetectorConfig::normalize() {
  if (maze_depth_threshold < 1 || prominence_gap_threshold < 1 || min_required_channels < 1) {
    throw PreconditionError("detector thresholds must be >= 1");
  }
  auto norm = [](const std::set<std::string>& in) {
    std::set<std::string> out;
    for (const auto& s : in) {
      auto n = text::normalize(s);
      if (!n.empty()) out.insert(std::move(n));
    }
    return out;
  };
  ambiguous_label_lexicon = norm(ambiguous_label_lexicon);
  vague_section_lexicon = norm(vague_section_lexicon);
  return *this;
}

namespace {

constexpr std::size_t kMaxQuote = 160;

template <class T>
bool subset_of(const std::set<T>& a, const std::set<T>& b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

bool is_rights_section(SectionKind k) {
  return k == SectionKind::PrivacyRights || k == SectionKind::CcpaRights;
}

// Accumulates evidence and detail lines for one subtype.
class FindingBuilder {
 public:
  FindingBuilder(SubtypeId subtype) : subtype_(subtype) {}

  void cite(const std::string& page_id, const std::string& entity_id, const std::string& text) {
    if (text.empty()) return;
    EvidenceRef ref{page_id, entity_id, text.substr(0, kMaxQuote)};
    if (std::find(evidence_.begin(), evidence_.end(), ref) == evidence_.end()) {
      evidence_.push_back(std::move(ref));
    }
  }
  void cite(const InterfaceElement& e) { cite(e.page_id, e.element_id, e.label_text); }
  void cite(const FormSpec& f) { cite(f.page_id, f.form_id, f.label_text); }
  void cite(const FormSpec& f, const FormField& ff) { cite(f.page_id, ff.field_id, ff.name); }
  void cite(const TraceIndex& index, const DisclosureStatement& d) {
    if (const auto* p = index.page_of_disclosure(d.disclosure_id)) {
      cite(p->page_id, d.disclosure_id, d.text);
    }
  }
  void cite(const PageState& p, const Section& s) { cite(p.page_id, s.section_id, s.label); }

  void note(std::string detail) {
    if (std::find(details_.begin(), details_.end(), detail) == details_.end()) {
      details_.push_back(std::move(detail));
    }
  }

  void emit_into(std::vector<Finding>& out) const {
    if (details_.empty() || evidence_.empty()) return;
    const auto& info = subtype_info(subtype_);
    std::string rationale(category_expectation(info.category));
    rationale += " Violated by ";
    rationale += info.name;
    rationale += ": ";
    for (std::size_t i = 0; i < details_.size(); ++i) {
      if (i) rationale += "; ";
      rationale += details_[i];
    }
    rationale += ".";
    out.push_back(make_finding(info.category, subtype_, evidence_, std::move(rationale), 1.0));
  }

 private:
  SubtypeId subtype_;
  std::vector<EvidenceRef> evidence_;
  std::vector<std::string> details_;
};

template <class Fn>
void for_each_form(const WorkflowTrace& trace, Fn&& fn) {
  for (const auto& p : trace.pages) {
    for (const auto& f : p.forms) fn(p, f);
  }
}

template <class Fn>
void for_each_element(const WorkflowTrace& trace, Fn&& fn) {
  for (const auto& p : trace.pages) {
    for (const auto& e : p.elements) fn(p, e);
  }
}

template <class Fn>
void for_each_disclosure(const WorkflowTrace& trace, Fn&& fn) {
  for (const auto& p : trace.pages) {
    for (const auto& s : p.sections) {
      for (const auto& d : s.disclosures) fn(p, s, d);
    }
  }
}

// Cites whatever anchors a channel: its declaring disclosures and entry element.
void cite_channel(FindingBuilder& b, const TraceIndex& index, const SubmissionChannel& c) {
  for (const auto& id : c.declared_in) {
    if (const auto* d = index.disclosure(id)) b.cite(index, *d);
  }
  if (c.entry_element) {
    if (const auto* e = index.element(*c.entry_element)) b.cite(*e);
  }
}

// Start-page anchor for findings about something that is absent.
void cite_fallback(FindingBuilder& b, const TraceIndex& index) {
  const auto* start = index.start_page();
  if (start == nullptr) return;
  for (const auto& s : start->sections) {
    if (!s.label.empty()) return b.cite(*start, s);
  }
  for (const auto& e : start->elements) {
    if (!e.label_text.empty()) return b.cite(e);
  }
}

std::optional<FormFraming> dominant_framing(const PageState& page) {
  if (page.forms.empty()) return std::nullopt;
  std::vector<const FormSpec*> forms;
  for (const auto& f : page.forms) forms.push_back(&f);
  std::sort(forms.begin(), forms.end(),
            [](const FormSpec* a, const FormSpec* b) { return a->form_id < b->form_id; });
  std::map<FormFraming, int> counts;
  for (const auto* f : forms) ++counts[f->framing];
  FormFraming best = forms.front()->framing;
  for (const auto* f : forms) {
    if (counts[f->framing] > counts[best]) best = f->framing;
  }
  return best;
}

std::string join_rights(const std::set<RightKind>& rights) {
  std::string out = "{";
  for (auto r : rights) {
    if (out.size() > 1) out += ",";
    out += to_string(r);
  }
  return out + "}";
}

}  // namespace

bool is_rights_bearing(const WorkflowTrace& trace, const InterfaceElement& element) {
  if (!element.advertised_rights.empty() || !element.actual_rights.empty()) return true;
  if (element.kind == ElementKind::FormRef) return true;
  for (const auto& c : trace.channels) {
    if (c.entry_element && *c.entry_element == element.element_id) return true;
  }
  return false;
}

// ---------------------------------------------------------------------------

std::vector<Finding> detect_adding_steps(const WorkflowTrace& trace, const DetectorConfig&) {
  FindingBuilder identifiers(SubtypeId::IdentifierFragmentation);
  FindingBuilder request_types(SubtypeId::RequestTypeFragmentation);
  for_each_form(trace, [&](const PageState&, const FormSpec& f) {
    if (f.identifier_kinds_supported.size() > 1 && f.identifiers_per_submission == 1) {
      identifiers.cite(f);
      identifiers.note("form '" + f.label_text + "' accepts " +
                       std::to_string(f.identifier_kinds_supported.size()) +
                       " identifier kinds but one per submission");
    }
    const auto access_options =
        std::count_if(f.request_type_options.begin(), f.request_type_options.end(),
                      [](const RequestOption& o) { return o.right == RightKind::Access; });
    if (access_options >= 2 && !f.multi_select_allowed) {
      request_types.cite(f);
      request_types.note("form '" + f.label_text + "' splits access over " +
                         std::to_string(access_options) + " exclusive options");
    }
  });
  std::vector<Finding> out;
  identifiers.emit_into(out);
  request_types.emit_into(out);
  return out;
}

std::vector<Finding> detect_conflicting_info(const WorkflowTrace& trace, const DetectorConfig&) {
  const TraceIndex index(trace);
  FindingBuilder path(SubtypeId::SubmissionPathConflict);
  FindingBuilder scope(SubtypeId::SubmissionScopeContradiction);
  FindingBuilder labeling(SubtypeId::FormLabelingContradiction);

  const auto disclosures = index.all_disclosures();
  for (const auto* exclusive : disclosures) {
    if (!exclusive->declared_exclusive) continue;
    for (const auto* other : disclosures) {
      if (other == exclusive) continue;
      for (auto k : other->declared_channels) {
        if (!exclusive->declared_channels.count(k)) {
          path.cite(index, *other);
          path.cite(index, *exclusive);
          path.note(std::string(to_string(k)) + " accepted by " + other->disclosure_id +
                    " but excluded by " + exclusive->disclosure_id);
        }
      }
    }
  }

  for (const auto* d : disclosures) {
    if (!d->pathway_element || d->declared_rights.empty()) continue;
    const auto* e = index.element(*d->pathway_element);
    if (e == nullptr || subset_of(d->declared_rights, e->actual_rights)) continue;
    scope.cite(index, *d);
    scope.cite(*e);
    scope.note(d->disclosure_id + " claims " + join_rights(d->declared_rights) + " for " +
               e->element_id + " which provides " + join_rights(e->actual_rights));
  }

  for_each_element(trace, [&](const PageState&, const InterfaceElement& e) {
    if (!e.advertised_rights.count(RightKind::Access) || !e.target_page) return;
    const auto* target = index.page(*e.target_page);
    if (target == nullptr) return;
    if (dominant_framing(*target) != FormFraming::OptOut) return;
    labeling.cite(e);
    for (const auto& f : target->forms) labeling.cite(f);
    labeling.note("access control " + e.element_id + " opens opt-out page " + target->page_id);
  });

  std::vector<Finding> out;
  path.emit_into(out);
  scope.emit_into(out);
  labeling.emit_into(out);
  return out;
}

std::vector<Finding> detect_creating_barriers(const WorkflowTrace& trace,
                                              const DetectorConfig& config) {
  const TraceIndex index(trace);
  FindingBuilder role(SubtypeId::RoleClassificationBarriers);
  FindingBuilder restriction(SubtypeId::SubmissionChannelRestriction);
  FindingBuilder verification(SubtypeId::ExcessiveIdentityVerification);
  FindingBuilder technical(SubtypeId::TechnicalIdentifierBurden);
  FindingBuilder non_essential(SubtypeId::NonEssentialRequiredFields);
  FindingBuilder app(SubtypeId::InstallExternalApp);
  FindingBuilder self_id(SubtypeId::SelfIdentificationBurden);

  // External apps are tools, not request submission methods.
  std::set<ChannelKind> reachable;
  for (const auto& c : trace.channels) {
    if (c.reachable && c.kind != ChannelKind::ExternalApp) reachable.insert(c.kind);
  }
  if (static_cast<int>(reachable.size()) < config.min_required_channels) {
    for (const auto& c : trace.channels) {
      if (c.reachable) cite_channel(restriction, index, c);
    }
    cite_fallback(restriction, index);
    restriction.note(std::to_string(reachable.size()) + " reachable submission method(s), " +
                     std::to_string(config.min_required_channels) + " required");
  }

  for (const auto& c : trace.channels) {
    if (c.kind != ChannelKind::ExternalApp || !c.reachable) continue;
    cite_channel(app, index, c);
    app.note("channel " + c.channel_id + " requires installing an external application");
  }

  for_each_form(trace, [&](const PageState&, const FormSpec& f) {
    if (f.role_options && !f.role_options->has_other_option) {
      role.cite(f);
      role.note("form '" + f.label_text + "' offers " +
                std::to_string(f.role_options->options.size()) + " fixed roles and no other");
    }
    for (const auto& ff : f.fields) {
      if (!ff.required) continue;
      if (config.excessive_sensitivities.count(ff.sensitivity)) {
        verification.cite(f, ff);
        verification.note("required field '" + ff.name + "' (" +
                          std::string(to_string(ff.sensitivity)) + ")");
      }
      if (ff.sensitivity == Sensitivity::DeviceIdentifier) {
        technical.cite(f, ff);
        technical.note("required device identifier field '" + ff.name + "'");
      }
      if (ff.relevance == Relevance::NonEssential) {
        non_essential.cite(f, ff);
        non_essential.note("required non-essential field '" + ff.name + "'");
      }
      if (ff.sensitivity == Sensitivity::ProfileUrl) {
        self_id.cite(f, ff);
        self_id.note("required profile URL field '" + ff.name + "'");
      }
    }
  });

  std::vector<Finding> out;
  role.emit_into(out);
  restriction.emit_into(out);
  verification.emit_into(out);
  technical.emit_into(out);
  non_essential.emit_into(out);
  app.emit_into(out);
  self_id.emit_into(out);
  return out;
}

std::vector<Finding> detect_feedforward_ambiguity(const WorkflowTrace& trace,
                                                  const DetectorConfig& config) {
  FindingBuilder mismatch(SubtypeId::InstructionOutcomeMismatch);
  FindingBuilder terminology(SubtypeId::AmbiguousRightsTerminology);
  FindingBuilder coupled(SubtypeId::CoupledOutcomes);

  auto defined_on_page = [](const PageState& p, const std::string& label) {
    for (const auto& s : p.sections) {
      for (const auto& d : s.disclosures) {
        if (text::contains_phrase(d.text, label)) return true;
      }
    }
    return false;
  };

  for (const auto& p : trace.pages) {
    for (const auto& e : p.elements) {
      if (!e.advertised_rights.empty() && !subset_of(e.advertised_rights, e.actual_rights)) {
        mismatch.cite(e);
        mismatch.note(e.element_id + " advertises " + join_rights(e.advertised_rights) +
                      " but provides " + join_rights(e.actual_rights));
      }
      if (text::in_lexicon(e.label_text, config.ambiguous_label_lexicon) &&
          !defined_on_page(p, e.label_text)) {
        terminology.cite(e);
        terminology.note("undefined label '" + e.label_text + "'");
      }
    }
    for (const auto& f : p.forms) {
      if (text::in_lexicon(f.label_text, config.ambiguous_label_lexicon) &&
          !defined_on_page(p, f.label_text)) {
        terminology.cite(f);
        terminology.note("undefined form label '" + f.label_text + "'");
      }
      if (!f.coupled_actions.empty()) {
        coupled.cite(f);
        coupled.note("form '" + f.label_text + "' also triggers " + join_rights(f.coupled_actions));
      }
    }
  }

  std::vector<Finding> out;
  mismatch.emit_into(out);
  terminology.emit_into(out);
  coupled.emit_into(out);
  return out;
}

std::vector<Finding> detect_hidden_info(const WorkflowTrace& trace, const DetectorConfig&) {
  const TraceIndex index(trace);
  FindingBuilder disguised(SubtypeId::VisuallyDisguisedAffordances);
  FindingBuilder non_actionable(SubtypeId::NonActionableReferences);
  FindingBuilder gated(SubtypeId::InteractionGatedDisclosure);
  FindingBuilder omission(SubtypeId::SelectiveOmission);

  for_each_element(trace, [&](const PageState&, const InterfaceElement& e) {
    if (e.kind == ElementKind::Link && !e.link_affordance) {
      disguised.cite(e);
      disguised.note("link '" + e.label_text + "' styled as plain text");
    }
    if (e.gated_behind && is_rights_bearing(trace, e)) {
      gated.cite(e);
      if (const auto* g = index.element(*e.gated_behind)) gated.cite(*g);
      gated.note(e.element_id + " hidden behind " + *e.gated_behind);
    }
  });

  for_each_disclosure(trace, [&](const PageState&, const Section&, const DisclosureStatement& d) {
    if (!d.declared_channels.empty() && !d.is_hyperlinked && !d.referenced_channel_actionable) {
      non_actionable.cite(index, d);
      non_actionable.note(d.disclosure_id + " names a channel without a link or detail");
    }
    const bool rights_bearing = !d.declared_rights.empty() || !d.declared_channels.empty();
    if (d.gated_behind && rights_bearing) {
      gated.cite(index, d);
      if (const auto* g = index.element(*d.gated_behind)) gated.cite(*g);
      gated.note(d.disclosure_id + " hidden behind " + *d.gated_behind);
    }
  });

  const auto inventory = channel_inventory(trace);
  for (const auto& p : trace.pages) {
    for (const auto& s : p.sections) {
      if (!s.claims_completeness) continue;
      for (const auto& [kind, entry] : inventory) {
        bool referenced = false;
        for (const auto& d : s.disclosures) {
          referenced = referenced || d.declared_channels.count(kind) || d.detailed_channels.count(kind);
        }
        if (referenced) continue;
        omission.cite(p, s);
        for (const auto& id : entry.declared_in) {
          if (const auto* d = index.disclosure(id)) omission.cite(index, *d);
        }
        for (const auto& c : trace.channels) {
          if (c.kind == kind && c.entry_element) {
            if (const auto* e = index.element(*c.entry_element)) omission.cite(*e);
          }
        }
        omission.note("section '" + s.label + "' omits the " + std::string(to_string(kind)) +
                      " channel documented elsewhere");
      }
    }
  }

  std::vector<Finding> out;
  disguised.emit_into(out);
  non_actionable.emit_into(out);
  gated.emit_into(out);
  omission.emit_into(out);
  return out;
}

std::vector<Finding> detect_info_without_context(const WorkflowTrace& trace,
                                                 const DetectorConfig& config) {
  const TraceIndex index(trace);
  FindingBuilder misplacement(SubtypeId::ContextualMisplacement);
  FindingBuilder framing(SubtypeId::MisleadingFormFraming);
  FindingBuilder vague(SubtypeId::VagueRequestLabels);
  FindingBuilder label_mismatch(SubtypeId::SectionLabelMismatch);
  FindingBuilder misdirect(SubtypeId::MisdirectPathways);

  // Contextual misplacement.
  {
    std::vector<std::pair<const PageState*, const Section*>> instruction_sections;
    bool only_unrelated = true;
    std::vector<std::pair<const PageState*, const Section*>> rights_sections;
    for (const auto& p : trace.pages) {
      for (const auto& s : p.sections) {
        if (is_rights_section(s.kind)) rights_sections.emplace_back(&p, &s);
        bool has_instructions = false;
        for (const auto& d : s.disclosures) {
          has_instructions = has_instructions || (d.declared_rights.count(RightKind::Access) &&
                                                  !d.declared_channels.empty());
        }
        if (!has_instructions) continue;
        instruction_sections.emplace_back(&p, &s);
        if (s.kind != SectionKind::Contact && s.kind != SectionKind::OptOut &&
            s.kind != SectionKind::Marketing) {
          only_unrelated = false;
        }
      }
    }
    auto referenced_from_rights = [&](const Section& target) {
      const auto label = text::normalize(target.label);
      for (const auto& [p, s] : rights_sections) {
        for (const auto& d : s->disclosures) {
          if (d.referenced_section_label && text::normalize(*d.referenced_section_label) == label) {
            return true;
          }
        }
      }
      return false;
    };
    if (!instruction_sections.empty() && only_unrelated && !rights_sections.empty()) {
      for (const auto& [p, s] : instruction_sections) {
        if (referenced_from_rights(*s)) continue;
        misplacement.cite(*p, *s);
        for (const auto& d : s->disclosures) {
          if (d.declared_rights.count(RightKind::Access)) misplacement.cite(index, d);
        }
        misplacement.cite(*rights_sections.front().first, *rights_sections.front().second);
        misplacement.note("access instructions only under '" + s->label +
                          "' and not referenced from the rights section");
      }
    }
  }

  // Forms reached through a control advertising access belong to the
  // labeling-contradiction rule instead.
  std::set<std::string> access_targets;
  for_each_element(trace, [&](const PageState&, const InterfaceElement& e) {
    if (e.advertised_rights.count(RightKind::Access) && e.target_page) {
      access_targets.insert(*e.target_page);
    }
    if (e.scope_restriction && !e.restriction_disclosed_at_entry) {
      misdirect.cite(e);
      misdirect.note(e.element_id + " is limited to '" + *e.scope_restriction +
                     "' without saying so at entry");
    }
  });

  for_each_form(trace, [&](const PageState& p, const FormSpec& f) {
    if (f.supported_rights.count(RightKind::Access) &&
        (f.framing == FormFraming::OptOut || f.framing == FormFraming::Marketing) &&
        !access_targets.count(p.page_id)) {
      framing.cite(f);
      framing.note("access-capable form '" + f.label_text + "' framed as " +
                   std::string(to_string(f.framing)));
    }
    for (const auto& o : f.request_type_options) {
      if (text::in_lexicon(o.label, config.ambiguous_label_lexicon)) {
        vague.cite(f);
        vague.note("request option '" + o.label + "'");
      }
    }
  });

  std::set<std::string> labels;
  for (const auto& p : trace.pages) {
    for (const auto& s : p.sections) labels.insert(text::normalize(s.label));
  }
  for_each_disclosure(trace, [&](const PageState&, const Section&, const DisclosureStatement& d) {
    if (!d.referenced_section_label) return;
    const auto& ref = *d.referenced_section_label;
    if (labels.count(text::normalize(ref))) return;
    const auto kind = classify_heading(ref, config.vague_section_lexicon);
    if (kind == SectionKind::Other) return;
    for (const auto& p : trace.pages) {
      for (const auto& s : p.sections) {
        if (s.kind != kind) continue;
        label_mismatch.cite(index, d);
        label_mismatch.cite(p, s);
        label_mismatch.note(d.disclosure_id + " points to '" + ref + "' but the content is under '" +
                            s.label + "'");
      }
    }
  });

  std::vector<Finding> out;
  misplacement.emit_into(out);
  framing.emit_into(out);
  vague.emit_into(out);
  label_mismatch.emit_into(out);
  misdirect.emit_into(out);
  return out;
}

std::vector<Finding> detect_privacy_mazes(const WorkflowTrace& trace,
                                          const DetectorConfig& config) {
  const TraceIndex index(trace);
  FindingBuilder depth(SubtypeId::ExcessiveNavigationalDepth);
  FindingBuilder within(SubtypeId::WithinPageFragmentation);
  FindingBuilder cross(SubtypeId::CrossPageFragmentation);

  const auto depths = page_depths(trace);
  for (const auto& c : trace.channels) {
    if (!c.entry_element) continue;
    const auto* e = index.element(*c.entry_element);
    if (e == nullptr) continue;
    auto it = depths.find(e->page_id);
    if (it == depths.end()) continue;  // unreachable targets are execution failures
    if (it->second > config.maze_depth_threshold) {
      depth.cite(*e);
      depth.note(std::string(to_string(c.kind)) + " entry " + e->element_id + " is " +
                 std::to_string(it->second) + " transitions deep");
    }
  }

  const auto inventory = channel_inventory(trace);
  for (const auto& [kind, entry] : inventory) {
    auto cite_involved = [&](FindingBuilder& b, const std::vector<const DisclosureStatement*>& ds) {
      for (const auto* d : ds) {
        if (d->declared_channels.count(kind) || d->detailed_channels.count(kind)) b.cite(index, *d);
      }
    };
    for (const auto& p : trace.pages) {
      std::vector<const DisclosureStatement*> on_page;
      bool some_section_complete = false;
      for (const auto& s : p.sections) {
        std::vector<const DisclosureStatement*> in_section;
        for (const auto& d : s.disclosures) {
          in_section.push_back(&d);
          on_page.push_back(&d);
        }
        some_section_complete = some_section_complete || instructions_complete(in_section, kind);
      }
      if (instructions_complete(on_page, kind) && !some_section_complete) {
        cite_involved(within, on_page);
        within.note(std::string(to_string(kind)) + " instructions split across sections of " +
                    p.page_id);
      }
    }
    if (entry.complete_on_pages.empty() && entry.complete_in_union) {
      cite_involved(cross, index.all_disclosures());
      cross.note(std::string(to_string(kind)) + " instructions only complete across pages");
    }
  }

  std::vector<Finding> out;
  depth.emit_into(out);
  within.emit_into(out);
  cross.emit_into(out);
  return out;
}

std::vector<Finding> detect_visual_prominence(const WorkflowTrace& trace,
                                              const DetectorConfig& config) {
  FindingBuilder dominance(SubtypeId::CompetingCallToActionDominance);
  FindingBuilder overlay(SubtypeId::PersistentOverlayInterference);
  for (const auto& p : trace.pages) {
    const InterfaceElement* strongest_rights = nullptr;
    for (const auto& e : p.elements) {
      if (is_rights_bearing(trace, e) &&
          (strongest_rights == nullptr || e.prominence > strongest_rights->prominence)) {
        strongest_rights = &e;
      }
    }
    for (const auto& e : p.elements) {
      if (e.persistent_overlay && e.overlaps_rights_pathway) {
        overlay.cite(e);
        overlay.note(e.element_id + " overlaps the rights pathway on " + p.page_id);
      }
      if (strongest_rights == nullptr || is_rights_bearing(trace, e)) continue;
      if (e.prominence >= strongest_rights->prominence + config.prominence_gap_threshold) {
        dominance.cite(e);
        dominance.cite(*strongest_rights);
        dominance.note(e.element_id + " (prominence " + std::to_string(e.prominence) +
                       ") outweighs " + strongest_rights->element_id + " (prominence " +
                       std::to_string(strongest_rights->prominence) + ")");
      }
    }
  }
  std::vector<Finding> out;
  dominance.emit_into(out);
  overlay.emit_into(out);
  return out;
}

AuditReport detect_all(const WorkflowTrace& trace, const DetectorConfig& config) {
  const auto violations = validate_trace(trace);
  if (!violations.empty()) {
    throw PreconditionError("invalid trace " + trace.broker_id + ": " +
                            violations.front().entity_id + ": " + violations.front().message);
  }
  AuditReport report;
  report.broker_id = trace.broker_id;
  report.labels = absent_labels();

  using Detector = std::vector<Finding> (*)(const WorkflowTrace&, const DetectorConfig&);
  constexpr Detector detectors[] = {
      detect_adding_steps,          detect_conflicting_info, detect_creating_barriers,
      detect_feedforward_ambiguity, detect_hidden_info,      detect_info_without_context,
      detect_privacy_mazes,         detect_visual_prominence};
  for (auto* detect : detectors) {
    for (auto& f : detect(trace, config)) {
      report.labels[f.category] = true;
      report.findings.push_back(std::move(f));
    }
  }

  std::set<ChannelKind> channels;
  for (const auto& c : trace.channels) {
    if (c.reachable) channels.insert(c.kind);
  }
  report.detected_channels.assign(channels.begin(), channels.end());
  for (const auto& p : trace.pages) {
    for (const auto& f : p.forms) {
      for (const auto& ff : f.fields) report.form_fields.push_back(ff.name);
    }
  }
  report.completion = {true, true, "rule engine over complete trace"};
  report.metadata = trace.metadata;
  return report;
}

}  // namespace dpaudit
