#pragma once

#include <map>
#include <set>
#include <string>
#include <string_view>

#include "json.hpp"

#include "dpaudit/taxonomy.hpp"
#include "dpaudit/trace.hpp"

namespace dpaudit {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

// Interchange documents. Writers emit canonical form (entity lists sorted by
// id, object keys sorted); readers are strict and throw SchemaError on any
// missing, mistyped or unknown field.

json trace_to_json(const WorkflowTrace& trace);
WorkflowTrace trace_from_json(const json& doc);

json report_to_json(const AuditReport& report);
AuditReport report_from_json(const json& doc);

json evidence_to_json(const EvidenceRef& ref);
EvidenceRef evidence_from_json(const json& doc);

json metadata_to_json(const RunMetadata& m);
RunMetadata metadata_from_json(const json& doc);

json failure_to_json(const FailureReport& f);
FailureReport failure_from_json(const json& doc);

struct TruthEntry {
  std::map<Category, bool> labels;
  std::set<SubtypeId> subtypes;

  friend bool operator==(const TruthEntry&, const TruthEntry&) = default;
};
using TruthLabels = std::map<std::string, TruthEntry>;

json truth_to_json(const TruthLabels& truth);
TruthLabels truth_from_json(const json& doc);

// Canonical text: two-space indent, trailing newline.
std::string canonical_dump(const json& doc);
// Parses text; malformed JSON becomes SchemaError.
json parse_document(std::string_view text);

// Sorts every entity list by id. Idempotent.
WorkflowTrace canonicalize(WorkflowTrace trace);

}  // namespace dpaudit
