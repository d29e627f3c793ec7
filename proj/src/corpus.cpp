#include "dpaudit/corpus.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <regex>
#include <sstream>

#include <fmt/format.h>

#include "dpaudit/digest.hpp"
#include "dpaudit/error.hpp"

namespace dpaudit {

fs::path write_document(const fs::path& path, const json& doc) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << canonical_dump(doc);
  if (!out) throw Error("write failed for " + path.string());
  return path;
}

json read_document(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_document(ss.str());
  } catch (const SchemaError& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

namespace {

std::vector<fs::path> files_with_ext(const fs::path& dir, std::string_view ext) {
  if (!fs::is_directory(dir)) throw Error("not a directory: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ext) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

template <class T, class F>
T with_path(const fs::path& p, F&& f) {
  try {
    return f();
  } catch (const SchemaError& e) {
    throw SchemaError(p.string() + ": " + e.what());
  }
}

}  // namespace

std::vector<fs::path> write_traces(const fs::path& dir, const std::vector<WorkflowTrace>& traces) {
  std::vector<fs::path> out;
  for (const auto& t : traces) {
    out.push_back(write_document(dir / (t.broker_id + std::string(kTraceExt)), trace_to_json(t)));
  }
  return out;
}

std::map<std::string, WorkflowTrace> read_traces(const fs::path& dir) {
  std::map<std::string, WorkflowTrace> out;
  for (const auto& p : files_with_ext(dir, kTraceExt)) {
    auto doc = read_document(p);
    auto t = with_path<WorkflowTrace>(p, [&] { return trace_from_json(doc); });
    if (t.broker_id != p.stem().string()) {
      throw SchemaError(p.string() + ": broker_id '" + t.broker_id + "' does not match file name");
    }
    auto id = t.broker_id;
    out.emplace(std::move(id), std::move(t));
  }
  return out;
}

fs::path write_truth(const fs::path& dir, const TruthLabels& truth) {
  return write_document(dir / std::string(kTruthFile), truth_to_json(truth));
}

TruthLabels read_truth(const fs::path& path) {
  auto doc = read_document(path);
  return with_path<TruthLabels>(path, [&] { return truth_from_json(doc); });
}

std::vector<fs::path> write_reports(const fs::path& dir, const std::vector<AuditReport>& reports) {
  std::vector<fs::path> out;
  for (const auto& r : reports) {
    out.push_back(write_document(dir / (r.broker_id + std::string(kReportExt)), report_to_json(r)));
  }
  return out;
}

std::vector<AuditReport> read_reports(const fs::path& dir) {
  std::vector<AuditReport> out;
  for (const auto& p : files_with_ext(dir, kReportExt)) {
    auto doc = read_document(p);
    out.push_back(with_path<AuditReport>(p, [&] { return report_from_json(doc); }));
  }
  return out;
}

// ---------------------------------------------------------------------------

std::string_view to_string(ProbeResult r) {
  switch (r) {
    case ProbeResult::Reachable: return "reachable";
    case ProbeResult::Unreachable: return "unreachable";
    case ProbeResult::Pending: return "pending";
  }
  return "pending";
}

bool valid_url(std::string_view url) {
  static const std::regex kUrl(R"(^https?://[A-Za-z0-9.-]+(:[0-9]{1,5})?(/[^\s]*)?$)",
                               std::regex::icase);
  return std::regex_match(url.begin(), url.end(), kUrl);
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

std::string csv_cell(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

}  // namespace

std::vector<RegistryEntry> parse_registry(std::string_view csv) {
  std::istringstream in{std::string(csv)};
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("registry: empty file");
  const auto header = split_csv_line(line);
  const bool with_result = header.size() == 3 && header[2] == "probe_result";
  if (header.size() < 2 || header[0] != "broker_name" || header[1] != "url" ||
      (header.size() == 3 && !with_result) || header.size() > 3) {
    throw SchemaError("registry: header must be broker_name,url");
  }
  std::vector<RegistryEntry> out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw SchemaError(fmt::format("registry line {}: expected {} columns", lineno, header.size()));
    }
    RegistryEntry e{cells[0], cells[1], ProbeResult::Pending};
    if (!valid_url(e.url)) throw SchemaError(fmt::format("registry line {}: invalid url '{}'", lineno, e.url));
    if (with_result) {
      if (cells[2] == "reachable") e.probe_result = ProbeResult::Reachable;
      else if (cells[2] == "unreachable") e.probe_result = ProbeResult::Unreachable;
      else if (cells[2] == "pending") e.probe_result = ProbeResult::Pending;
      else throw SchemaError(fmt::format("registry line {}: bad probe_result", lineno));
    }
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<RegistryEntry> read_registry(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_registry(ss.str());
}

std::string registry_to_csv(const std::vector<RegistryEntry>& entries) {
  std::string out = "broker_name,url,probe_result\n";
  for (const auto& e : entries) {
    out += fmt::format("{},{},{}\n", csv_cell(e.broker_name), csv_cell(e.url),
                       to_string(e.probe_result));
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

bool is_manifest(const fs::path& p) {
  const auto name = p.filename().string();
  return name.size() >= 13 && name.compare(name.size() - 13, 13, "manifest.json") == 0;
}

}  // namespace

std::map<std::string, std::string> digest_paths(const std::vector<fs::path>& paths) {
  std::map<std::string, std::string> out;
  for (const auto& p : paths) {
    if (fs::is_directory(p)) {
      for (const auto& e : fs::recursive_directory_iterator(p)) {
        if (e.is_regular_file() && !is_manifest(e.path())) {
          out[e.path().generic_string()] = sha256_file(e.path());
        }
      }
    } else if (fs::is_regular_file(p)) {
      out[p.generic_string()] = sha256_file(p);
    } else {
      throw Error("cannot digest missing path " + p.string());
    }
  }
  return out;
}

std::string derive_run_id(const std::vector<std::string>& argv,
                          const std::map<std::string, std::string>& input_digests) {
  std::string buf;
  for (const auto& a : argv) buf += a + '\0';
  buf += '\1';
  for (const auto& [p, d] : input_digests) buf += p + '\0' + d + '\0';
  return sha256_hex(buf).substr(0, 16);
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json manifest_to_json(const RunManifest& m) {
  return {{"schema_version", kSchemaVersion},
          {"run_id", m.run_id},
          {"command", m.command},
          {"argv", m.argv},
          {"config", m.config},
          {"input_digests", m.input_digests},
          {"output_digests", m.output_digests},
          {"started_at", m.started_at},
          {"finished_at", m.finished_at}};
}

RunManifest manifest_from_json(const json& doc) {
  try {
    if (doc.at("schema_version").get<int>() != kSchemaVersion) {
      throw SchemaError("manifest: unsupported schema_version");
    }
    RunManifest m;
    m.run_id = doc.at("run_id").get<std::string>();
    m.command = doc.at("command").get<std::string>();
    m.argv = doc.at("argv").get<std::vector<std::string>>();
    m.config = doc.at("config");
    m.input_digests = doc.at("input_digests").get<std::map<std::string, std::string>>();
    m.output_digests = doc.at("output_digests").get<std::map<std::string, std::string>>();
    m.started_at = doc.at("started_at").get<std::string>();
    m.finished_at = doc.at("finished_at").get<std::string>();
    return m;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("manifest: ") + e.what());
  }
}

void write_manifest(const fs::path& path, const RunManifest& m) {
  write_document(path, manifest_to_json(m));
}

RunManifest read_manifest(const fs::path& path, bool verify) {
  auto m = manifest_from_json(read_document(path));
  if (!verify) return m;
  for (const auto* digests : {&m.input_digests, &m.output_digests}) {
    for (const auto& [p, d] : *digests) {
      if (!fs::is_regular_file(p)) throw TamperError("manifest " + path.string() + ": missing " + p);
      if (sha256_file(p) != d) throw TamperError("manifest " + path.string() + ": digest mismatch for " + p);
    }
  }
  return m;
}

}  // namespace dpaudit
