#include "dpaudit/trace.hpp"

#include <algorithm>
#include <deque>

#include "dpaudit/error.hpp"
#include "dpaudit/text.hpp"

namespace dpaudit {

int FormSpec::stage_count() const {
  int max_stage = 0;
  for (const auto& f : fields) max_stage = std::max(max_stage, f.stage);
  return max_stage + 1;
}

// ---------------------------------------------------------------------------
// TraceIndex

TraceIndex::TraceIndex(const WorkflowTrace& trace) : trace_(&trace) {
  for (const auto& page : trace.pages) {
    pages_.emplace(page.page_id, &page);
    if (page.is_start && start_ == nullptr) start_ = &page;
    for (const auto& section : page.sections) {
      sections_.emplace(section.section_id, &section);
      for (const auto& d : section.disclosures) {
        disclosures_.emplace(d.disclosure_id, &d);
        disclosure_page_.emplace(d.disclosure_id, &page);
        disclosure_section_.emplace(d.disclosure_id, &section);
      }
    }
    for (const auto& e : page.elements) elements_.emplace(e.element_id, &e);
    for (const auto& f : page.forms) forms_.emplace(f.form_id, &f);
  }
}

namespace {
template <class M>
auto lookup(const M& m, std::string_view id) -> typename M::mapped_type {
  auto it = m.find(id);
  return it == m.end() ? nullptr : it->second;
}
}  // namespace

const PageState* TraceIndex::page(std::string_view id) const { return lookup(pages_, id); }
const InterfaceElement* TraceIndex::element(std::string_view id) const {
  return lookup(elements_, id);
}
const DisclosureStatement* TraceIndex::disclosure(std::string_view id) const {
  return lookup(disclosures_, id);
}
const Section* TraceIndex::section(std::string_view id) const { return lookup(sections_, id); }
const FormSpec* TraceIndex::form(std::string_view id) const { return lookup(forms_, id); }
const PageState* TraceIndex::page_of_disclosure(std::string_view id) const {
  return lookup(disclosure_page_, id);
}
const Section* TraceIndex::section_of_disclosure(std::string_view id) const {
  return lookup(disclosure_section_, id);
}

std::vector<const DisclosureStatement*> TraceIndex::all_disclosures() const {
  std::vector<const DisclosureStatement*> out;
  out.reserve(disclosures_.size());
  for (const auto& [id, d] : disclosures_) out.push_back(d);
  return out;
}

// ---------------------------------------------------------------------------
// validate_trace

namespace {

class Collector {
 public:
  void add(std::string entity, std::string message) {
    out_.push_back({std::move(entity), std::move(message)});
  }
  ValidationReport finish() {
    std::sort(out_.begin(), out_.end());
    out_.erase(std::unique(out_.begin(), out_.end()), out_.end());
    return std::move(out_);
  }

 private:
  ValidationReport out_;
};

}  // namespace

ValidationReport validate_trace(const WorkflowTrace& trace) {
  Collector v;
  if (trace.pages.empty()) {
    v.add("trace", "pages empty");
    return v.finish();
  }

  // Global id registry: every entity id must be declared exactly once.
  std::map<std::string, int> id_count;
  std::set<std::string> page_ids;
  for (const auto& page : trace.pages) {
    if (!page_ids.insert(page.page_id).second) v.add(page.page_id, "duplicate page id");
    for (const auto& s : page.sections) {
      ++id_count[s.section_id];
      for (const auto& d : s.disclosures) ++id_count[d.disclosure_id];
    }
    for (const auto& e : page.elements) ++id_count[e.element_id];
    for (const auto& f : page.forms) {
      ++id_count[f.form_id];
      for (const auto& ff : f.fields) ++id_count[ff.field_id];
    }
  }
  for (const auto& [id, n] : id_count) {
    if (id.empty()) v.add(id, "empty entity id");
    if (n > 1) v.add(id, "entity id declared " + std::to_string(n) + " times");
    if (page_ids.count(id)) v.add(id, "entity id collides with a page id");
  }

  const TraceIndex index(trace);

  int start_pages = 0;
  for (const auto& page : trace.pages) {
    if (page.is_start) {
      ++start_pages;
      if (page.url != trace.start_url) v.add(page.page_id, "start page url differs from start_url");
    }
  }
  if (start_pages != 1) {
    v.add("trace", "expected exactly one start page, found " + std::to_string(start_pages));
  }

  auto check_gate = [&](const std::string& owner, const std::string& page_id,
                        const std::optional<std::string>& gate) {
    if (!gate) return;
    const auto* g = index.element(*gate);
    if (g == nullptr) {
      v.add(owner, "gated_behind references unknown element " + *gate);
    } else if (g->kind != ElementKind::Expandable) {
      v.add(owner, "gated_behind element " + *gate + " is not expandable");
    } else if (g->page_id != page_id) {
      v.add(owner, "gated_behind element " + *gate + " is on another page");
    }
  };

  for (const auto& page : trace.pages) {
    std::set<std::string> labels;
    for (const auto& s : page.sections) {
      if (!labels.insert(s.label).second) {
        v.add(s.section_id, "section label '" + s.label + "' repeated on page " + page.page_id);
      }
      for (const auto& d : s.disclosures) {
        if (d.declared_exclusive && d.declared_channels.empty()) {
          v.add(d.disclosure_id, "declared_exclusive without declared channels");
        }
        if (d.pathway_element && index.element(*d.pathway_element) == nullptr) {
          v.add(d.disclosure_id, "pathway_element references unknown element " + *d.pathway_element);
        }
        check_gate(d.disclosure_id, page.page_id, d.gated_behind);
      }
    }
    for (const auto& e : page.elements) {
      if (e.page_id != page.page_id) {
        v.add(e.element_id, "element page_id " + e.page_id + " differs from owning page");
      }
      if (e.kind == ElementKind::Link && !e.target_page) {
        v.add(e.element_id, "link without target_page");
      }
      if (e.target_page && index.page(*e.target_page) == nullptr) {
        v.add(e.element_id, "target_page references unknown page " + *e.target_page);
      }
      if (e.prominence < 0 || e.prominence > 3) {
        v.add(e.element_id, "prominence outside [0,3]");
      }
      check_gate(e.element_id, page.page_id, e.gated_behind);
    }
    for (const auto& f : page.forms) {
      if (f.page_id != page.page_id) {
        v.add(f.form_id, "form page_id " + f.page_id + " differs from owning page");
      }
      if (f.identifiers_per_submission < 1) v.add(f.form_id, "identifiers_per_submission < 1");
      if (f.role_options && f.role_options->options.empty()) {
        v.add(f.form_id, "role_options present but empty");
      }
      for (const auto& ff : f.fields) {
        if (ff.stage < 0) v.add(ff.field_id, "negative form stage");
      }
      if (f.multi_page != (f.stage_count() > 1)) {
        v.add(f.form_id, "multi_page flag disagrees with field stages");
      }
    }
  }

  std::set<std::string> channel_ids;
  for (const auto& c : trace.channels) {
    if (!channel_ids.insert(c.channel_id).second) v.add(c.channel_id, "duplicate channel id");
    for (const auto& d : c.declared_in) {
      if (index.disclosure(d) == nullptr) {
        v.add(c.channel_id, "declared_in references unknown disclosure " + d);
      }
    }
    if (c.entry_element && index.element(*c.entry_element) == nullptr) {
      v.add(c.channel_id, "entry_element references unknown element " + *c.entry_element);
    }
    if (c.kind == ChannelKind::Webform && c.reachable && !c.entry_element) {
      v.add(c.channel_id, "reachable webform without entry_element");
    }
  }

  for (std::size_t i = 0; i < trace.steps.size(); ++i) {
    const auto& s = trace.steps[i];
    const std::string sid = "step:" + std::to_string(i);
    if (s.index != static_cast<int>(i)) v.add(sid, "step index out of sequence");
    if (index.page(s.source_page) == nullptr) {
      v.add(sid, "source_page references unknown page " + s.source_page);
    }
    if (index.page(s.destination_page) == nullptr) {
      v.add(sid, "destination_page references unknown page " + s.destination_page);
    }
    if (s.element_id && index.element(*s.element_id) == nullptr &&
        index.form(*s.element_id) == nullptr) {
      v.add(sid, "element_id references unknown element " + *s.element_id);
    }
    if (i + 1 < trace.steps.size() && s.destination_page != trace.steps[i + 1].source_page) {
      v.add(sid, "walk disconnected: destination differs from next source");
    }
  }

  const auto& m = trace.metadata;
  if (m.duration_ms < 0 || m.step_count < 0 || (m.token_usage && *m.token_usage < 0)) {
    v.add("metadata", "negative count");
  }
  return v.finish();
}

// ---------------------------------------------------------------------------
// Evidence

ResolvedEvidence resolve_evidence(const WorkflowTrace& trace, const EvidenceRef& ref) {
  const PageState* page = nullptr;
  for (const auto& p : trace.pages) {
    if (p.page_id == ref.page_id) page = &p;
  }
  if (page == nullptr) throw UnknownEntity(ref.page_id);

  auto check = [&](EntityKind kind, const std::string& text) {
    if (ref.quote.empty() || text.find(ref.quote) == std::string::npos) {
      throw FabricatedEvidence("quote \"" + ref.quote + "\" is not a substring of " +
                               ref.entity_id);
    }
    return ResolvedEvidence{kind, page->page_id, ref.entity_id, text};
  };

  for (const auto& s : page->sections) {
    if (s.section_id == ref.entity_id) return check(EntityKind::Section, s.label);
    for (const auto& d : s.disclosures) {
      if (d.disclosure_id == ref.entity_id) return check(EntityKind::Disclosure, d.text);
    }
  }
  for (const auto& e : page->elements) {
    if (e.element_id == ref.entity_id) return check(EntityKind::Element, e.label_text);
  }
  for (const auto& f : page->forms) {
    if (f.form_id == ref.entity_id) return check(EntityKind::Form, f.label_text);
    for (const auto& ff : f.fields) {
      if (ff.field_id == ref.entity_id) return check(EntityKind::FormField, ff.name);
    }
  }
  throw UnknownEntity(ref.entity_id);
}

// ---------------------------------------------------------------------------
// Navigation

std::map<std::string, int> page_depths(const WorkflowTrace& trace) {
  std::map<std::string, std::vector<std::string>> edges;
  std::string start;
  for (const auto& p : trace.pages) {
    if (p.is_start && start.empty()) start = p.page_id;
    for (const auto& e : p.elements) {
      if ((e.kind == ElementKind::Link || e.kind == ElementKind::Button) && e.target_page) {
        edges[p.page_id].push_back(*e.target_page);
      }
    }
  }
  std::map<std::string, int> depth;
  if (start.empty()) return depth;
  std::deque<std::string> queue{start};
  depth[start] = 0;
  while (!queue.empty()) {
    const std::string cur = queue.front();
    queue.pop_front();
    for (const auto& next : edges[cur]) {
      if (depth.emplace(next, depth[cur] + 1).second) queue.push_back(next);
    }
  }
  return depth;
}

int navigation_depth(const WorkflowTrace& trace, std::string_view element_id) {
  const TraceIndex index(trace);
  const auto* e = index.element(element_id);
  if (e == nullptr) throw UnknownEntity(std::string(element_id));
  const auto depths = page_depths(trace);
  auto it = depths.find(e->page_id);
  if (it == depths.end()) {
    throw UnreachableTarget("element " + std::string(element_id) + " on page " + e->page_id +
                            " is unreachable from the start page");
  }
  return it->second;
}

// ---------------------------------------------------------------------------
// Channels

bool instructions_complete(const std::vector<const DisclosureStatement*>& disclosures,
                           ChannelKind kind) {
  bool named = false;
  bool detailed = false;
  for (const auto* d : disclosures) {
    named = named || d->declared_channels.count(kind) > 0;
    detailed = detailed || d->detailed_channels.count(kind) > 0;
  }
  return named && detailed;
}

ChannelInventory channel_inventory(const WorkflowTrace& trace) {
  ChannelInventory inv;
  for (const auto& c : trace.channels) {
    auto& entry = inv[c.kind];
    entry.declared_in.insert(c.declared_in.begin(), c.declared_in.end());
    entry.reachable = entry.reachable || c.reachable;
  }
  std::vector<const DisclosureStatement*> everything;
  for (const auto& p : trace.pages) {
    for (const auto& s : p.sections) {
      for (const auto& d : s.disclosures) {
        everything.push_back(&d);
        for (auto k : d.declared_channels) inv[k].declared_in.insert(d.disclosure_id);
      }
    }
  }
  for (auto& [kind, entry] : inv) {
    for (const auto& p : trace.pages) {
      std::vector<const DisclosureStatement*> on_page;
      for (const auto& s : p.sections) {
        for (const auto& d : s.disclosures) on_page.push_back(&d);
      }
      if (instructions_complete(on_page, kind)) entry.complete_on_pages.insert(p.page_id);
    }
    entry.complete_in_union = instructions_complete(everything, kind);
  }
  return inv;
}

// ---------------------------------------------------------------------------
// Heading classifier

SectionKind classify_heading(std::string_view heading, const std::set<std::string>& vague_lexicon) {
  const std::string h = text::normalize(heading);
  if (vague_lexicon.count(h)) return SectionKind::Other;
  auto has = [&](std::string_view phrase) { return text::contains_phrase(h, phrase); };
  if (has("do not sell") || has("do not share") || has("opt out") || has("your choices")) {
    return SectionKind::OptOut;
  }
  if (has("california") || has("ccpa") || has("cpra") || has("state privacy")) {
    return SectionKind::CcpaRights;
  }
  if (has("privacy rights") || has("your rights") || has("data rights") ||
      has("exercise your rights") || has("consumer rights")) {
    return SectionKind::PrivacyRights;
  }
  if (has("contact")) return SectionKind::Contact;
  if (has("marketing") || has("newsletter") || has("promotions")) return SectionKind::Marketing;
  return SectionKind::Other;
}

}  // namespace dpaudit
