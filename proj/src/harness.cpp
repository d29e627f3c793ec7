#include "dpaudit/harness.hpp"

#include <algorithm>
#include <functional>

#include <fmt/format.h>

#include "dpaudit/error.hpp"
#include "dpaudit/text.hpp"

namespace dpaudit {

namespace {

std::atomic<std::int64_t> g_submits{0};

constexpr std::int64_t kSimulatedMsPerStep = 250;

bool is_rights_kind(SectionKind k) {
  return k == SectionKind::PrivacyRights || k == SectionKind::CcpaRights;
}

// Page carrying the rights guidance: the first page with a rights section,
// else the first page with a disclosure about access.
std::string rights_page(const WorkflowTrace& trace) {
  for (const auto& p : trace.pages) {
    for (const auto& s : p.sections) {
      if (is_rights_kind(s.kind)) return p.page_id;
    }
  }
  for (const auto& p : trace.pages) {
    for (const auto& s : p.sections) {
      for (const auto& d : s.disclosures) {
        if (d.declared_rights.count(RightKind::Access)) return p.page_id;
      }
    }
  }
  return {};
}

std::set<std::string> webform_pages(const WorkflowTrace& trace, const TraceIndex& index) {
  std::set<std::string> out;
  for (const auto& c : trace.channels) {
    if (c.kind != ChannelKind::Webform || !c.entry_element) continue;
    if (const auto* e = index.element(*c.entry_element)) out.insert(e->page_id);
  }
  return out;
}

}  // namespace

std::string_view to_string(RawIssue issue) {
  switch (issue) {
    case RawIssue::Crash: return "crash";
    case RawIssue::Timeout: return "timeout";
    case RawIssue::BudgetExhausted: return "budget_exhausted";
    case RawIssue::MalformedInternalState: return "malformed_internal_state";
    case RawIssue::Captcha: return "captcha";
    case RawIssue::PdfOnly: return "pdf_only";
    case RawIssue::BrokenPolicyLink: return "broken_policy_link";
    case RawIssue::NothingDiscoverable: return "nothing_discoverable";
    case RawIssue::UnexposedFormPage: return "unexposed_form_page";
    case RawIssue::Unknown: return "unknown";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------

PortalSession::PortalSession(const PortalBlueprint& blueprint)
    : blueprint_(&blueprint), index_(blueprint.trace) {
  const auto* start = index_.start_page();
  if (start == nullptr) throw PreconditionError("blueprint has no start page");
  cursor_ = start->page_id;
  arrive(cursor_);
}

const PageState& PortalSession::cursor() const { return *index_.page(cursor_); }

std::int64_t PortalSession::global_submit_count() { return g_submits.load(); }

void PortalSession::raise(RawIssue issue) {
  if (fault_) return;
  fault_ = issue;
  fault_step_ = steps_.empty() ? -1 : static_cast<int>(steps_.size()) - 1;
}

void PortalSession::log(ActionKind action, std::optional<std::string> element,
                        const std::string& dest) {
  steps_.push_back({static_cast<int>(steps_.size()), cursor_, action, std::move(element), dest});
}

bool PortalSession::before_step() {
  if (halted()) return false;
  const auto& f = blueprint_->fault;
  if (f && (f->kind == FaultKind::CrashAtStep || f->kind == FaultKind::TimeoutAtStep) &&
      static_cast<int>(steps_.size()) == f->step) {
    fault_ = f->kind == FaultKind::CrashAtStep ? RawIssue::Crash : RawIssue::Timeout;
    fault_step_ = f->step;
    return false;
  }
  return true;
}

bool PortalSession::arrive(const std::string& page_id) {
  cursor_ = page_id;
  visited_.insert(page_id);
  const auto& page = *index_.page(page_id);
  for (const auto& e : page.elements) {
    if (!e.gated_behind) exposed_.insert(e.element_id);
  }
  for (const auto& s : page.sections) {
    exposed_.insert(s.section_id);
    for (const auto& d : s.disclosures) {
      if (!d.gated_behind) exposed_.insert(d.disclosure_id);
    }
  }
  for (const auto& f : page.forms) exposed_.insert(f.form_id);

  const auto& f = blueprint_->fault;
  if (!f) return true;
  if (f->kind == FaultKind::CaptchaPage &&
      webform_pages(blueprint_->trace, index_).count(page_id)) {
    raise(RawIssue::Captcha);
    return false;
  }
  if (f->kind == FaultKind::PdfOnlyInstructions && page_id == rights_page(blueprint_->trace)) {
    raise(RawIssue::PdfOnly);
    return false;
  }
  return true;
}

bool PortalSession::click(const InterfaceElement& element) {
  if (!before_step()) return false;
  const auto& f = blueprint_->fault;
  const bool broken = f && f->kind == FaultKind::BrokenPolicyLink && element.target_page &&
                      *element.target_page == rights_page(blueprint_->trace);
  if (!element.target_page || broken) {
    log(ActionKind::Click, element.element_id, cursor_);
    return true;
  }
  log(ActionKind::Click, element.element_id, *element.target_page);
  return arrive(*element.target_page);
}

bool PortalSession::expand(const InterfaceElement& element) {
  if (!before_step()) return false;
  log(ActionKind::Expand, element.element_id, cursor_);
  const auto& page = cursor();
  for (const auto& e : page.elements) {
    if (e.gated_behind == element.element_id) exposed_.insert(e.element_id);
  }
  for (const auto& s : page.sections) {
    for (const auto& d : s.disclosures) {
      if (d.gated_behind == element.element_id) exposed_.insert(d.disclosure_id);
    }
  }
  exposed_.insert(element.element_id + "#open");
  return true;
}

bool PortalSession::fill(const FormSpec& form) {
  if (!before_step()) return false;
  log(ActionKind::Fill, form.form_id, cursor_);
  for (const auto& ff : form.fields) {
    if (ff.stage == 0) exposed_.insert(ff.field_id);
  }
  stages_[form.form_id] = 0;
  return true;
}

bool PortalSession::next_page(const FormSpec& form, int stage) {
  if (!before_step()) return false;
  log(ActionKind::NextPage, form.form_id, cursor_);
  const auto& f = blueprint_->fault;
  if (f && f->kind == FaultKind::UnexposedFormPage) return true;  // control does not respond
  for (const auto& ff : form.fields) {
    if (ff.stage == stage) exposed_.insert(ff.field_id);
  }
  stages_[form.form_id] = stage;
  return true;
}

bool PortalSession::open_url(const std::string& page_id) {
  if (!before_step()) return false;
  if (index_.page(page_id) == nullptr) throw UnknownEntity(page_id);
  log(ActionKind::OpenUrl, std::nullopt, page_id);
  return arrive(page_id);
}

void PortalSession::submit(const FormSpec&) {
  ++submits_;
  ++g_submits;
}

int PortalSession::stage_reached(const std::string& form_id) const {
  auto it = stages_.find(form_id);
  return it == stages_.end() ? -1 : it->second;
}

// ---------------------------------------------------------------------------

ProtocolRun run_protocol(const PortalBlueprint& blueprint, const HarnessPolicy& policy,
                         int budget) {
  if (budget < 1) throw PreconditionError("budget must be >= 1");
  ProtocolRun run{PortalSession(blueprint), {}};
  auto& s = run.session;
  const TraceIndex index(blueprint.trace);

  std::vector<std::string> lexicon;
  for (const auto& phrase : policy.priority_lexicon) lexicon.push_back(text::normalize(phrase));
  auto priority = [&](const InterfaceElement& e) {
    const auto label = text::normalize(e.label_text);
    for (std::size_t i = 0; i < lexicon.size(); ++i) {
      if (text::contains_phrase(label, lexicon[i])) return i;
    }
    return lexicon.size();
  };
  auto budget_left = [&] {
    if (static_cast<int>(s.step_log().size()) < budget) return true;
    s.raise(RawIssue::BudgetExhausted);
    return false;
  };
  bool hit_broken_link = false;

  std::function<void(const std::string&)> explore = [&](const std::string& page_id) {
    const auto& page = *index.page(page_id);
    // Open every disclosure toggle, then expose every form stage.
    for (const auto& e : page.elements) {
      if (s.halted()) return;
      if (e.kind != ElementKind::Expandable || !s.exposed().count(e.element_id)) continue;
      if (s.exposed().count(e.element_id + "#open")) continue;
      if (!budget_left() || !s.expand(e)) return;
    }
    for (const auto& f : page.forms) {
      if (s.halted()) return;
      if (s.stage_reached(f.form_id) >= 0) continue;
      if (!budget_left() || !s.fill(f)) return;
      for (int st = 1; st < f.stage_count(); ++st) {
        if (!budget_left() || !s.next_page(f, st)) return;
      }
    }
    std::vector<const InterfaceElement*> edges;
    for (const auto& e : page.elements) {
      if ((e.kind == ElementKind::Link || e.kind == ElementKind::Button) && e.target_page &&
          s.exposed().count(e.element_id)) {
        edges.push_back(&e);
      }
    }
    std::stable_sort(edges.begin(), edges.end(), [&](const auto* a, const auto* b) {
      return std::pair(priority(*a), a->element_id) < std::pair(priority(*b), b->element_id);
    });
    for (const auto* e : edges) {
      if (s.halted()) return;
      if (s.visited_pages().count(*e->target_page)) continue;
      if (s.cursor().page_id != page_id) {
        if (!budget_left() || !s.open_url(page_id)) return;
      }
      if (!budget_left() || !s.click(*e)) return;
      if (s.cursor().page_id == *e->target_page) {
        explore(*e->target_page);
      } else {
        hit_broken_link = true;
      }
    }
  };
  if (!s.halted()) explore(s.cursor().page_id);

  auto& out = run.outcome;
  if (!s.halted()) {
    bool discovered = false;
    for (const auto& id : s.visited_pages()) {
      const auto& page = *index.page(id);
      discovered = discovered || !page.forms.empty();
      for (const auto& sec : page.sections) {
        for (const auto& d : sec.disclosures) {
          discovered = discovered || (s.exposed().count(d.disclosure_id) && !d.declared_channels.empty());
        }
      }
    }
    if (!discovered) {
      s.raise(hit_broken_link ? RawIssue::BrokenPolicyLink : RawIssue::NothingDiscoverable);
    } else if (blueprint.fault && blueprint.fault->kind == FaultKind::MalformedInternalState) {
      s.raise(RawIssue::MalformedInternalState);
    }
  }

  out.internal_success = !s.halted();
  if (s.fault_state()) out.failure = classify_failure(s, *s.fault_state());
  out.observed = blueprint.trace;
  out.observed.steps = s.step_log();
  out.observed.metadata.step_count = static_cast<std::int64_t>(s.step_log().size());
  out.observed.metadata.duration_ms = kSimulatedMsPerStep * out.observed.metadata.step_count;
  out.observed.metadata.internal_success = out.internal_success;
  for (const auto& p : blueprint.trace.pages) {
    for (const auto& f : p.forms) {
      for (const auto& ff : f.fields) {
        if (s.exposed().count(ff.field_id)) out.form_fields.push_back(ff.name);
      }
    }
  }
  return run;
}

CompletionStatus verify_completion(const PortalSession& session, const AuditOutcome& outcome) {
  CompletionStatus st;
  st.internal_success = outcome.internal_success;
  if (outcome.failure) {
    st.reason = fmt::format("failure report: {}", to_string(outcome.failure->category));
    return st;
  }
  if (!outcome.internal_success) {
    st.reason = "agent reported no success";
    return st;
  }
  const TraceIndex index(session.blueprint().trace);
  for (const auto& id : session.visited_pages()) {
    for (const auto& f : index.page(id)->forms) {
      const int reached = session.stage_reached(f.form_id);
      if (reached < f.stage_count() - 1) {
        st.reason = fmt::format("{}: form {} exposed {} of {} stages",
                                to_string(FailureCategory::InteractionFailure), f.form_id,
                                reached + 1, f.stage_count());
        return st;
      }
    }
  }
  st.verified_success = true;
  st.reason = "all submission fields exposed";
  return st;
}

FailureReport classify_failure(const PortalSession& session, RawIssue issue) {
  FailureReport r;
  switch (issue) {
    case RawIssue::Crash:
    case RawIssue::Timeout:
    case RawIssue::BudgetExhausted:
      r.category = FailureCategory::AutomationInstability;
      break;
    case RawIssue::MalformedInternalState:
      r.category = FailureCategory::AgentInstability;
      break;
    case RawIssue::Captcha:
      r.category = FailureCategory::SecurityBarrier;
      break;
    case RawIssue::PdfOnly:
      r.category = FailureCategory::ContentFormatLimitation;
      break;
    case RawIssue::BrokenPolicyLink:
    case RawIssue::NothingDiscoverable:
      r.category = FailureCategory::NavigationFailure;
      break;
    case RawIssue::UnexposedFormPage:
      r.category = FailureCategory::InteractionFailure;
      break;
    case RawIssue::Unknown:
      r.category = FailureCategory::AgentInstability;
      r.needs_review = true;
      break;
  }
  const int step = session.fault_state() == issue ? session.fault_step()
                                                  : static_cast<int>(session.step_log().size()) - 1;
  if (step >= 0) r.step_indices.push_back(step);
  const auto& page = session.cursor();
  if (!page.sections.empty() && !page.sections.front().label.empty()) {
    const auto& sec = page.sections.front();
    r.evidence.push_back({page.page_id, sec.section_id, sec.label});
  }
  r.narrative = fmt::format("{} observed on page {} after {} steps", to_string(issue),
                            page.page_id, session.step_log().size());
  return r;
}

RunResult run_and_verify(const PortalBlueprint& blueprint, const HarnessPolicy& policy,
                         int budget) {
  auto run = run_protocol(blueprint, policy, budget);
  RunResult out;
  out.completion = verify_completion(run.session, run.outcome);
  if (!out.completion.verified_success && !run.outcome.failure) {
    run.outcome.failure = classify_failure(run.session, RawIssue::UnexposedFormPage);
  }
  out.outcome = std::move(run.outcome);
  out.steps = run.session.step_log();
  out.submit_count = run.session.submit_count();
  return out;
}

std::map<FailureCategory, double> failure_rates(std::span<const FailureCategory> failures) {
  if (failures.empty()) throw PreconditionError("no failed runs");
  std::map<FailureCategory, double> out;
  for (auto c : kAllFailureCategories) out[c] = 0.0;
  for (auto c : failures) out[c] += 1.0;
  for (auto& [c, v] : out) v /= static_cast<double>(failures.size());
  return out;
}

std::map<FailureCategory, double> failure_rates(std::span<const RunResult> runs) {
  std::vector<FailureCategory> failures;
  for (const auto& r : runs) {
    if (r.outcome.failure) failures.push_back(r.outcome.failure->category);
  }
  return failure_rates(std::span<const FailureCategory>(failures));
}

json session_log_to_json(const std::string& broker_id, const RunResult& run) {
  json steps = json::array();
  for (const auto& s : run.steps) {
    json j{{"index", s.index},
           {"source_page", s.source_page},
           {"action", to_string(s.action)},
           {"destination_page", s.destination_page}};
    if (s.element_id) j["element_id"] = *s.element_id;
    steps.push_back(j);
  }
  json j{{"schema_version", kSchemaVersion},
         {"broker_id", broker_id},
         {"steps", steps},
         {"form_fields", run.outcome.form_fields},
         {"completion",
          {{"internal_success", run.completion.internal_success},
           {"verified_success", run.completion.verified_success},
           {"reason", run.completion.reason}}},
         {"metadata", metadata_to_json(run.outcome.observed.metadata)},
         {"submit_count", run.submit_count}};
  if (run.outcome.failure) j["failure"] = failure_to_json(*run.outcome.failure);
  return j;
}

}  // namespace dpaudit
