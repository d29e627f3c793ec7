#include "dpaudit/serialize.hpp"

#include <algorithm>
#include <cmath>

#include "dpaudit/error.hpp"

namespace dpaudit {

namespace {

// Strict object reader: every key must be consumed exactly once.
class Reader {
 public:
  Reader(const json& doc, std::string path) : doc_(doc), path_(std::move(path)) {
    if (!doc_.is_object()) fail("expected object");
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw SchemaError(path_ + ": " + what);
  }

  const json& at(const char* key) {
    auto it = doc_.find(key);
    if (it == doc_.end()) fail(std::string("missing field '") + key + "'");
    seen_.insert(key);
    return *it;
  }
  const json* maybe(const char* key) {
    auto it = doc_.find(key);
    if (it == doc_.end()) return nullptr;
    seen_.insert(key);
    return it->is_null() ? nullptr : &*it;
  }
  std::string child(const char* key) const { return path_ + "." + key; }

  std::string str(const char* key) {
    const auto& v = at(key);
    if (!v.is_string()) fail(std::string("'") + key + "' must be a string");
    return v.get<std::string>();
  }
  std::optional<std::string> opt_str(const char* key) {
    const auto* v = maybe(key);
    if (v == nullptr) return std::nullopt;
    if (!v->is_string()) fail(std::string("'") + key + "' must be a string");
    return v->get<std::string>();
  }
  bool flag(const char* key) {
    const auto& v = at(key);
    if (!v.is_boolean()) fail(std::string("'") + key + "' must be a boolean");
    return v.get<bool>();
  }
  std::int64_t integer(const char* key) {
    const auto& v = at(key);
    if (!v.is_number_integer()) fail(std::string("'") + key + "' must be an integer");
    return v.get<std::int64_t>();
  }
  std::optional<std::int64_t> opt_integer(const char* key) {
    const auto* v = maybe(key);
    if (v == nullptr) return std::nullopt;
    if (!v->is_number_integer()) fail(std::string("'") + key + "' must be an integer");
    return v->get<std::int64_t>();
  }
  double number(const char* key) {
    const auto& v = at(key);
    if (!v.is_number()) fail(std::string("'") + key + "' must be a number");
    return v.get<double>();
  }
  const json& array(const char* key) {
    const auto& v = at(key);
    if (!v.is_array()) fail(std::string("'") + key + "' must be an array");
    return v;
  }
  template <class E>
  E enumeration(const char* key) {
    auto s = str(key);
    auto v = try_parse<E>(s);
    if (!v) fail(std::string("'") + key + "': unknown value '" + s + "'");
    return *v;
  }
  template <class E>
  std::set<E> enum_set(const char* key) {
    std::set<E> out;
    for (const auto& item : array(key)) {
      if (!item.is_string()) fail(std::string("'") + key + "' entries must be strings");
      auto v = try_parse<E>(item.get<std::string>());
      if (!v) fail(std::string("'") + key + "': unknown value '" + item.get<std::string>() + "'");
      out.insert(*v);
    }
    return out;
  }
  std::set<std::string> string_set(const char* key) {
    std::set<std::string> out;
    for (const auto& item : array(key)) {
      if (!item.is_string()) fail(std::string("'") + key + "' entries must be strings");
      out.insert(item.get<std::string>());
    }
    return out;
  }
  std::vector<std::string> string_list(const char* key) {
    std::vector<std::string> out;
    for (const auto& item : array(key)) {
      if (!item.is_string()) fail(std::string("'") + key + "' entries must be strings");
      out.push_back(item.get<std::string>());
    }
    return out;
  }

  void finish() const {
    for (auto it = doc_.begin(); it != doc_.end(); ++it) {
      if (!seen_.count(it.key())) fail("unknown field '" + it.key() + "'");
    }
  }

 private:
  const json& doc_;
  std::string path_;
  std::set<std::string> seen_;
};

template <class E>
json enum_array(const std::set<E>& values) {
  json out = json::array();
  for (auto v : values) out.push_back(std::string(to_string(v)));
  return out;
}

json string_array(const std::set<std::string>& values) {
  json out = json::array();
  for (const auto& v : values) out.push_back(v);
  return out;
}

void check_version(Reader& r) {
  if (r.integer("schema_version") != kSchemaVersion) r.fail("unsupported schema_version");
}

template <class T>
void put_opt(json& j, const char* key, const std::optional<T>& v) {
  if (v) j[key] = *v;
}

template <class T, class Fn>
std::vector<T> read_list(Reader& r, const char* key, Fn&& fn) {
  std::vector<T> out;
  const auto& arr = r.array(key);
  for (std::size_t i = 0; i < arr.size(); ++i) {
    Reader child(arr[i], r.child(key) + "[" + std::to_string(i) + "]");
    out.push_back(fn(child));
    child.finish();
  }
  return out;
}

// -- trace ------------------------------------------------------------------

json disclosure_json(const DisclosureStatement& d) {
  json j{{"disclosure_id", d.disclosure_id},
         {"text", d.text},
         {"declared_channels", enum_array(d.declared_channels)},
         {"detailed_channels", enum_array(d.detailed_channels)},
         {"declared_exclusive", d.declared_exclusive},
         {"declared_rights", enum_array(d.declared_rights)},
         {"is_hyperlinked", d.is_hyperlinked},
         {"referenced_channel_actionable", d.referenced_channel_actionable}};
  put_opt(j, "referenced_section_label", d.referenced_section_label);
  put_opt(j, "pathway_element", d.pathway_element);
  put_opt(j, "gated_behind", d.gated_behind);
  return j;
}

DisclosureStatement read_disclosure(Reader& r) {
  DisclosureStatement d;
  d.disclosure_id = r.str("disclosure_id");
  d.text = r.str("text");
  d.declared_channels = r.enum_set<ChannelKind>("declared_channels");
  d.detailed_channels = r.enum_set<ChannelKind>("detailed_channels");
  d.declared_exclusive = r.flag("declared_exclusive");
  d.declared_rights = r.enum_set<RightKind>("declared_rights");
  d.referenced_section_label = r.opt_str("referenced_section_label");
  d.is_hyperlinked = r.flag("is_hyperlinked");
  d.referenced_channel_actionable = r.flag("referenced_channel_actionable");
  d.pathway_element = r.opt_str("pathway_element");
  d.gated_behind = r.opt_str("gated_behind");
  return d;
}

json element_json(const InterfaceElement& e) {
  json j{{"element_id", e.element_id},
         {"page_id", e.page_id},
         {"kind", to_string(e.kind)},
         {"label_text", e.label_text},
         {"link_affordance", e.link_affordance},
         {"prominence", e.prominence},
         {"persistent_overlay", e.persistent_overlay},
         {"overlaps_rights_pathway", e.overlaps_rights_pathway},
         {"advertised_rights", enum_array(e.advertised_rights)},
         {"actual_rights", enum_array(e.actual_rights)},
         {"restriction_disclosed_at_entry", e.restriction_disclosed_at_entry}};
  put_opt(j, "gated_behind", e.gated_behind);
  put_opt(j, "target_page", e.target_page);
  put_opt(j, "scope_restriction", e.scope_restriction);
  return j;
}

InterfaceElement read_element(Reader& r) {
  InterfaceElement e;
  e.element_id = r.str("element_id");
  e.page_id = r.str("page_id");
  e.kind = r.enumeration<ElementKind>("kind");
  e.label_text = r.str("label_text");
  e.link_affordance = r.flag("link_affordance");
  e.prominence = static_cast<int>(r.integer("prominence"));
  e.persistent_overlay = r.flag("persistent_overlay");
  e.overlaps_rights_pathway = r.flag("overlaps_rights_pathway");
  e.gated_behind = r.opt_str("gated_behind");
  e.target_page = r.opt_str("target_page");
  e.advertised_rights = r.enum_set<RightKind>("advertised_rights");
  e.actual_rights = r.enum_set<RightKind>("actual_rights");
  e.scope_restriction = r.opt_str("scope_restriction");
  e.restriction_disclosed_at_entry = r.flag("restriction_disclosed_at_entry");
  return e;
}

json form_json(const FormSpec& f) {
  json options = json::array();
  for (const auto& o : f.request_type_options) {
    options.push_back({{"label", o.label}, {"right", to_string(o.right)}});
  }
  json fields = json::array();
  for (const auto& ff : f.fields) {
    fields.push_back({{"field_id", ff.field_id},
                      {"name", ff.name},
                      {"required", ff.required},
                      {"sensitivity", to_string(ff.sensitivity)},
                      {"relevance", to_string(ff.relevance)},
                      {"stage", ff.stage}});
  }
  json j{{"form_id", f.form_id},
         {"page_id", f.page_id},
         {"label_text", f.label_text},
         {"framing", to_string(f.framing)},
         {"multi_page", f.multi_page},
         {"identifier_kinds_supported", enum_array(f.identifier_kinds_supported)},
         {"identifiers_per_submission", f.identifiers_per_submission},
         {"request_type_options", options},
         {"multi_select_allowed", f.multi_select_allowed},
         {"fields", fields},
         {"coupled_actions", enum_array(f.coupled_actions)},
         {"coupled_actions_disclosed", f.coupled_actions_disclosed},
         {"supported_rights", enum_array(f.supported_rights)}};
  if (f.role_options) {
    j["role_options"] = {{"options", f.role_options->options},
                         {"has_other_option", f.role_options->has_other_option}};
  }
  return j;
}

FormSpec read_form(Reader& r) {
  FormSpec f;
  f.form_id = r.str("form_id");
  f.page_id = r.str("page_id");
  f.label_text = r.str("label_text");
  f.framing = r.enumeration<FormFraming>("framing");
  f.multi_page = r.flag("multi_page");
  f.identifier_kinds_supported = r.enum_set<IdentifierKind>("identifier_kinds_supported");
  f.identifiers_per_submission = static_cast<int>(r.integer("identifiers_per_submission"));
  f.request_type_options = read_list<RequestOption>(r, "request_type_options", [](Reader& o) {
    return RequestOption{o.str("label"), o.enumeration<RightKind>("right")};
  });
  f.multi_select_allowed = r.flag("multi_select_allowed");
  if (const auto* ro = r.maybe("role_options")) {
    Reader o(*ro, r.child("role_options"));
    f.role_options = RoleOptions{o.string_list("options"), o.flag("has_other_option")};
    o.finish();
  }
  f.fields = read_list<FormField>(r, "fields", [](Reader& o) {
    FormField ff;
    ff.field_id = o.str("field_id");
    ff.name = o.str("name");
    ff.required = o.flag("required");
    ff.sensitivity = o.enumeration<Sensitivity>("sensitivity");
    ff.relevance = o.enumeration<Relevance>("relevance");
    ff.stage = static_cast<int>(o.integer("stage"));
    return ff;
  });
  f.coupled_actions = r.enum_set<RightKind>("coupled_actions");
  f.coupled_actions_disclosed = r.flag("coupled_actions_disclosed");
  f.supported_rights = r.enum_set<RightKind>("supported_rights");
  return f;
}

template <class T, class Key>
void sort_by(std::vector<T>& v, Key key) {
  std::stable_sort(v.begin(), v.end(), [&](const T& a, const T& b) { return key(a) < key(b); });
}

}  // namespace

WorkflowTrace canonicalize(WorkflowTrace trace) {
  sort_by(trace.pages, [](const PageState& p) { return p.page_id; });
  for (auto& p : trace.pages) {
    sort_by(p.sections, [](const Section& s) { return s.section_id; });
    for (auto& s : p.sections) {
      sort_by(s.disclosures, [](const DisclosureStatement& d) { return d.disclosure_id; });
    }
    sort_by(p.elements, [](const InterfaceElement& e) { return e.element_id; });
    sort_by(p.forms, [](const FormSpec& f) { return f.form_id; });
    for (auto& f : p.forms) {
      sort_by(f.fields, [](const FormField& ff) { return ff.field_id; });
    }
  }
  sort_by(trace.channels, [](const SubmissionChannel& c) { return c.channel_id; });
  sort_by(trace.steps, [](const NavigationStep& s) { return s.index; });
  return trace;
}

json metadata_to_json(const RunMetadata& m) {
  json j{{"duration_ms", m.duration_ms},
         {"step_count", m.step_count},
         {"internal_success", m.internal_success}};
  put_opt(j, "token_usage", m.token_usage);
  return j;
}

namespace {
RunMetadata read_metadata(Reader& r) {
  RunMetadata m;
  m.duration_ms = r.integer("duration_ms");
  m.step_count = r.integer("step_count");
  m.token_usage = r.opt_integer("token_usage");
  m.internal_success = r.flag("internal_success");
  return m;
}
}  // namespace

RunMetadata metadata_from_json(const json& doc) {
  Reader r(doc, "metadata");
  auto m = read_metadata(r);
  r.finish();
  return m;
}

json trace_to_json(const WorkflowTrace& input) {
  const auto trace = canonicalize(input);
  json pages = json::array();
  for (const auto& p : trace.pages) {
    json sections = json::array();
    for (const auto& s : p.sections) {
      json disclosures = json::array();
      for (const auto& d : s.disclosures) disclosures.push_back(disclosure_json(d));
      sections.push_back({{"section_id", s.section_id},
                          {"label", s.label},
                          {"kind", to_string(s.kind)},
                          {"claims_completeness", s.claims_completeness},
                          {"disclosures", disclosures}});
    }
    json elements = json::array();
    for (const auto& e : p.elements) elements.push_back(element_json(e));
    json forms = json::array();
    for (const auto& f : p.forms) forms.push_back(form_json(f));
    pages.push_back({{"page_id", p.page_id},
                     {"url", p.url},
                     {"title", p.title},
                     {"is_start", p.is_start},
                     {"sections", sections},
                     {"elements", elements},
                     {"forms", forms}});
  }
  json channels = json::array();
  for (const auto& c : trace.channels) {
    json j{{"channel_id", c.channel_id},
           {"kind", to_string(c.kind)},
           {"declared_in", string_array(c.declared_in)},
           {"reachable", c.reachable}};
    put_opt(j, "entry_element", c.entry_element);
    channels.push_back(j);
  }
  json steps = json::array();
  for (const auto& s : trace.steps) {
    json j{{"index", s.index},
           {"source_page", s.source_page},
           {"action", to_string(s.action)},
           {"destination_page", s.destination_page}};
    put_opt(j, "element_id", s.element_id);
    steps.push_back(j);
  }
  return {{"schema_version", kSchemaVersion},
          {"broker_id", trace.broker_id},
          {"start_url", trace.start_url},
          {"pages", pages},
          {"channels", channels},
          {"steps", steps},
          {"metadata", metadata_to_json(trace.metadata)}};
}

WorkflowTrace trace_from_json(const json& doc) {
  Reader r(doc, "trace");
  check_version(r);
  WorkflowTrace t;
  t.broker_id = r.str("broker_id");
  t.start_url = r.str("start_url");
  t.pages = read_list<PageState>(r, "pages", [](Reader& pr) {
    PageState p;
    p.page_id = pr.str("page_id");
    p.url = pr.str("url");
    p.title = pr.str("title");
    p.is_start = pr.flag("is_start");
    p.sections = read_list<Section>(pr, "sections", [](Reader& sr) {
      Section s;
      s.section_id = sr.str("section_id");
      s.label = sr.str("label");
      s.kind = sr.enumeration<SectionKind>("kind");
      s.claims_completeness = sr.flag("claims_completeness");
      s.disclosures = read_list<DisclosureStatement>(sr, "disclosures", read_disclosure);
      return s;
    });
    p.elements = read_list<InterfaceElement>(pr, "elements", read_element);
    p.forms = read_list<FormSpec>(pr, "forms", read_form);
    return p;
  });
  t.channels = read_list<SubmissionChannel>(r, "channels", [](Reader& cr) {
    SubmissionChannel c;
    c.channel_id = cr.str("channel_id");
    c.kind = cr.enumeration<ChannelKind>("kind");
    c.declared_in = cr.string_set("declared_in");
    c.reachable = cr.flag("reachable");
    c.entry_element = cr.opt_str("entry_element");
    return c;
  });
  t.steps = read_list<NavigationStep>(r, "steps", [](Reader& sr) {
    NavigationStep s;
    s.index = static_cast<int>(sr.integer("index"));
    s.source_page = sr.str("source_page");
    s.action = sr.enumeration<ActionKind>("action");
    s.element_id = sr.opt_str("element_id");
    s.destination_page = sr.str("destination_page");
    return s;
  });
  {
    Reader mr(r.at("metadata"), r.child("metadata"));
    t.metadata = read_metadata(mr);
    mr.finish();
  }
  r.finish();
  return t;
}

// -- report -----------------------------------------------------------------

json evidence_to_json(const EvidenceRef& ref) {
  return {{"page_id", ref.page_id},
          {"element_or_disclosure_id", ref.entity_id},
          {"quote", ref.quote}};
}

namespace {
EvidenceRef read_evidence(Reader& r) {
  EvidenceRef e;
  e.page_id = r.str("page_id");
  e.entity_id = r.str("element_or_disclosure_id");
  e.quote = r.str("quote");
  return e;
}

json evidence_list(const std::vector<EvidenceRef>& refs) {
  json out = json::array();
  for (const auto& e : refs) out.push_back(evidence_to_json(e));
  return out;
}

FailureReport read_failure(Reader& r) {
  FailureReport f;
  f.category = r.enumeration<FailureCategory>("category");
  f.evidence = read_list<EvidenceRef>(r, "evidence", read_evidence);
  for (const auto& i : r.array("step_indices")) {
    if (!i.is_number_integer()) r.fail("'step_indices' entries must be integers");
    f.step_indices.push_back(i.get<int>());
  }
  f.narrative = r.str("narrative");
  f.needs_review = r.flag("needs_review");
  return f;
}
}  // namespace

EvidenceRef evidence_from_json(const json& doc) {
  Reader r(doc, "evidence");
  auto e = read_evidence(r);
  r.finish();
  return e;
}

json failure_to_json(const FailureReport& f) {
  return {{"category", to_string(f.category)},
          {"evidence", evidence_list(f.evidence)},
          {"step_indices", f.step_indices},
          {"narrative", f.narrative},
          {"needs_review", f.needs_review}};
}

FailureReport failure_from_json(const json& doc) {
  Reader r(doc, "failure");
  auto f = read_failure(r);
  r.finish();
  return f;
}

json report_to_json(const AuditReport& report) {
  json labels = json::object();
  for (const auto& [c, present] : report.labels) {
    labels[std::string(to_string(c))] = present ? "present" : "absent";
  }
  json findings = json::array();
  for (const auto& f : report.findings) {
    findings.push_back(
        {{"category", to_string(f.category)},
         {"subtype", subtype_info(f.subtype).slug},
         {"evidence", evidence_list(f.evidence)},
         {"assessment",
          {{"expectation_violation", f.assessment.expectation_violation},
           {"harm_mechanism", subtype_info(f.assessment.harm_mechanism).slug}}},
         {"confidence", f.confidence}});
  }
  json channels = json::array();
  for (auto c : report.detected_channels) channels.push_back(std::string(to_string(c)));
  json j{{"schema_version", kSchemaVersion},
         {"broker_id", report.broker_id},
         {"detected_channels", channels},
         {"form_fields", report.form_fields},
         {"labels", labels},
         {"findings", findings},
         {"completion",
          {{"internal_success", report.completion.internal_success},
           {"verified_success", report.completion.verified_success},
           {"reason", report.completion.reason}}},
         {"metadata", metadata_to_json(report.metadata)}};
  if (report.failure) j["failure"] = failure_to_json(*report.failure);
  return j;
}

AuditReport report_from_json(const json& doc) {
  Reader r(doc, "report");
  check_version(r);
  AuditReport rep;
  rep.broker_id = r.str("broker_id");
  for (const auto& c : r.array("detected_channels")) {
    if (!c.is_string()) r.fail("'detected_channels' entries must be strings");
    auto v = try_parse<ChannelKind>(c.get<std::string>());
    if (!v) r.fail("unknown channel kind '" + c.get<std::string>() + "'");
    rep.detected_channels.push_back(*v);
  }
  rep.form_fields = r.string_list("form_fields");
  {
    const auto& labels = r.at("labels");
    if (!labels.is_object()) r.fail("'labels' must be an object");
    if (labels.size() != kCategoryCount) {
      r.fail("'labels' must cover all " + std::to_string(kCategoryCount) + " categories, got " +
             std::to_string(labels.size()));
    }
    for (auto it = labels.begin(); it != labels.end(); ++it) {
      auto c = try_parse<Category>(it.key());
      if (!c) r.fail("unknown category '" + it.key() + "'");
      if (!it->is_string() || (*it != "present" && *it != "absent")) {
        r.fail("label for " + it.key() + " must be \"present\" or \"absent\"");
      }
      rep.labels[*c] = *it == "present";
    }
  }
  rep.findings = read_list<Finding>(r, "findings", [](Reader& fr) {
    Finding f;
    f.category = fr.enumeration<Category>("category");
    auto slug = fr.str("subtype");
    auto st = subtype_from_slug(slug);
    if (!st) fr.fail("unknown subtype '" + slug + "'");
    f.subtype = *st;
    f.evidence = read_list<EvidenceRef>(fr, "evidence", read_evidence);
    {
      Reader ar(fr.at("assessment"), fr.child("assessment"));
      f.assessment.expectation_violation = ar.str("expectation_violation");
      auto harm = ar.str("harm_mechanism");
      auto hs = subtype_from_slug(harm);
      if (!hs) ar.fail("unknown harm mechanism '" + harm + "'");
      f.assessment.harm_mechanism = *hs;
      ar.finish();
    }
    f.confidence = fr.number("confidence");
    if (!std::isfinite(f.confidence)) fr.fail("confidence must be finite");
    return f;
  });
  {
    Reader cr(r.at("completion"), r.child("completion"));
    rep.completion.internal_success = cr.flag("internal_success");
    rep.completion.verified_success = cr.flag("verified_success");
    rep.completion.reason = cr.str("reason");
    cr.finish();
  }
  if (const auto* f = r.maybe("failure")) {
    Reader fr(*f, r.child("failure"));
    rep.failure = read_failure(fr);
    fr.finish();
  }
  {
    Reader mr(r.at("metadata"), r.child("metadata"));
    rep.metadata = read_metadata(mr);
    mr.finish();
  }
  r.finish();
  return rep;
}

// -- truth ------------------------------------------------------------------

json truth_to_json(const TruthLabels& truth) {
  json brokers = json::object();
  for (const auto& [id, entry] : truth) {
    json labels = json::object();
    for (const auto& [c, present] : entry.labels) labels[std::string(to_string(c))] = present;
    json subtypes = json::array();
    for (auto s : entry.subtypes) subtypes.push_back(std::string(subtype_info(s).slug));
    brokers[id] = {{"labels", labels}, {"subtypes", subtypes}};
  }
  return {{"schema_version", kSchemaVersion}, {"brokers", brokers}};
}

TruthLabels truth_from_json(const json& doc) {
  Reader r(doc, "truth");
  check_version(r);
  const auto& brokers = r.at("brokers");
  if (!brokers.is_object()) r.fail("'brokers' must be an object");
  TruthLabels out;
  for (auto it = brokers.begin(); it != brokers.end(); ++it) {
    Reader br(*it, "truth.brokers." + it.key());
    TruthEntry entry;
    const auto& labels = br.at("labels");
    if (!labels.is_object() || labels.size() != kCategoryCount) {
      br.fail("'labels' must map all " + std::to_string(kCategoryCount) + " categories");
    }
    for (auto lt = labels.begin(); lt != labels.end(); ++lt) {
      auto c = try_parse<Category>(lt.key());
      if (!c || !lt->is_boolean()) br.fail("bad label '" + lt.key() + "'");
      entry.labels[*c] = lt->get<bool>();
    }
    for (const auto& s : br.string_list("subtypes")) {
      auto st = subtype_from_slug(s);
      if (!st) br.fail("unknown subtype '" + s + "'");
      if (!entry.labels.at(subtype_info(*st).category)) {
        br.fail("subtype '" + s + "' listed for a category labeled absent");
      }
      entry.subtypes.insert(*st);
    }
    br.finish();
    out.emplace(it.key(), std::move(entry));
  }
  r.finish();
  return out;
}

std::string canonical_dump(const json& doc) { return doc.dump(2) + "\n"; }

json parse_document(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("malformed document: ") + e.what());
  }
}

}  // namespace dpaudit
