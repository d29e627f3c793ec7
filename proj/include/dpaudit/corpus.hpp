#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "dpaudit/error.hpp"
#include "dpaudit/serialize.hpp"
#include "dpaudit/taxonomy.hpp"
#include "dpaudit/trace.hpp"

namespace dpaudit {

namespace fs = std::filesystem;

// Layout: <dir>/<broker_id>.trace, <dir>/truth.labels, <preds>/<broker_id>.report.
inline constexpr std::string_view kTraceExt = ".trace";
inline constexpr std::string_view kReportExt = ".report";
inline constexpr std::string_view kTruthFile = "truth.labels";

// Writes `doc` canonically; returns the written path.
fs::path write_document(const fs::path& path, const json& doc);
json read_document(const fs::path& path);

std::vector<fs::path> write_traces(const fs::path& dir, const std::vector<WorkflowTrace>& traces);
std::map<std::string, WorkflowTrace> read_traces(const fs::path& dir);

fs::path write_truth(const fs::path& dir, const TruthLabels& truth);
TruthLabels read_truth(const fs::path& path);

std::vector<fs::path> write_reports(const fs::path& dir, const std::vector<AuditReport>& reports);
// Reports ordered by broker id.
std::vector<AuditReport> read_reports(const fs::path& dir);

// ---------------------------------------------------------------------------
// Registry

enum class ProbeResult { Reachable, Unreachable, Pending };
std::string_view to_string(ProbeResult r);

struct RegistryEntry {
  std::string broker_name;
  std::string url;
  ProbeResult probe_result = ProbeResult::Pending;
};

bool valid_url(std::string_view url);

// CSV with header `broker_name,url` (an optional third `probe_result` column
// is read back). Throws SchemaError on a bad header, row or URL.
std::vector<RegistryEntry> parse_registry(std::string_view csv);
std::vector<RegistryEntry> read_registry(const fs::path& path);
std::string registry_to_csv(const std::vector<RegistryEntry>& entries);

// ---------------------------------------------------------------------------
// Run manifests

struct RunManifest {
  std::string run_id;
  std::string command;
  std::vector<std::string> argv;
  json config;
  std::map<std::string, std::string> input_digests;   // path -> sha256
  std::map<std::string, std::string> output_digests;  // path -> sha256
  std::string started_at;
  std::string finished_at;
};

// Digest of every regular file under each path (or of the path itself);
// manifest files inside directories are skipped.
std::map<std::string, std::string> digest_paths(const std::vector<fs::path>& paths);

// Deterministic id over argv and input digests.
std::string derive_run_id(const std::vector<std::string>& argv,
                          const std::map<std::string, std::string>& input_digests);

std::string utc_now();

json manifest_to_json(const RunManifest& m);
RunManifest manifest_from_json(const json& doc);
void write_manifest(const fs::path& path, const RunManifest& m);

class TamperError : public Error {
 public:
  using Error::Error;
};

// With `verify`, recomputes every recorded digest and throws TamperError on
// a mismatch or a missing file.
RunManifest read_manifest(const fs::path& path, bool verify = true);

}  // namespace dpaudit
