#include "dpaudit/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "dpaudit/error.hpp"
#include "dpaudit/text.hpp"

namespace dpaudit {

namespace {

struct Value {
  std::string raw;
  int line = 0;
};

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

// Strips a trailing comment that is not inside a string.
std::string strip_comment(const std::string& line) {
  bool in_str = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '\\' && in_str) {
      ++i;
      continue;
    }
    if (line[i] == '"') in_str = !in_str;
    if (line[i] == '#' && !in_str) return line.substr(0, i);
  }
  return line;
}

[[noreturn]] void bad(const Value& v, const std::string& key, const std::string& what) {
  throw SchemaError(fmt::format("config line {}: {} {}", v.line, key, what));
}

// Strings and arrays share JSON's literal syntax closely enough to reuse it.
json literal(const Value& v, const std::string& key) {
  try {
    return json::parse(v.raw);
  } catch (const json::exception&) {
    bad(v, key, "has a malformed value");
  }
}

int as_int(const Value& v, const std::string& key) {
  auto j = literal(v, key);
  if (!j.is_number_integer()) bad(v, key, "must be an integer");
  return j.get<int>();
}

double as_double(const Value& v, const std::string& key) {
  auto j = literal(v, key);
  if (!j.is_number()) bad(v, key, "must be a number");
  return j.get<double>();
}

std::string as_string(const Value& v, const std::string& key) {
  auto j = literal(v, key);
  if (!j.is_string()) bad(v, key, "must be a quoted string");
  return j.get<std::string>();
}

std::vector<std::string> as_strings(const Value& v, const std::string& key) {
  auto j = literal(v, key);
  if (!j.is_array()) bad(v, key, "must be an array of strings");
  std::vector<std::string> out;
  for (const auto& e : j) {
    if (!e.is_string()) bad(v, key, "must be an array of strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

}  // namespace

Config parse_config(std::string_view text) {
  Config cfg;
  std::istringstream in{std::string(text)};
  std::string line, table;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto body = trim(strip_comment(line));
    if (body.empty()) continue;
    if (body.front() == '[') {
      if (body.back() != ']') throw SchemaError(fmt::format("config line {}: bad table header", lineno));
      table = trim(std::string_view(body).substr(1, body.size() - 2));
      if (table != "detector" && table != "llm" && table != "probe") {
        throw SchemaError(fmt::format("config line {}: unknown table [{}]", lineno, table));
      }
      continue;
    }
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw SchemaError(fmt::format("config line {}: expected key = value", lineno));
    const auto name = trim(std::string_view(body).substr(0, eq));
    const Value v{trim(std::string_view(body).substr(eq + 1)), lineno};
    const auto key = table.empty() ? name : table + "." + name;

    auto& d = cfg.detector;
    if (key == "detector.maze_depth_threshold") d.maze_depth_threshold = as_int(v, key);
    else if (key == "detector.prominence_gap_threshold") d.prominence_gap_threshold = as_int(v, key);
    else if (key == "detector.min_required_channels") d.min_required_channels = as_int(v, key);
    else if (key == "detector.ambiguous_label_lexicon") {
      auto xs = as_strings(v, key);
      d.ambiguous_label_lexicon = {xs.begin(), xs.end()};
    } else if (key == "detector.vague_section_lexicon") {
      auto xs = as_strings(v, key);
      d.vague_section_lexicon = {xs.begin(), xs.end()};
    } else if (key == "detector.excessive_sensitivities") {
      d.excessive_sensitivities.clear();
      for (const auto& s : as_strings(v, key)) {
        auto parsed = try_parse<Sensitivity>(s);
        if (!parsed) bad(v, key, "names unknown sensitivity '" + s + "'");
        d.excessive_sensitivities.insert(*parsed);
      }
    } else if (key == "llm.endpoint") cfg.llm.endpoint = as_string(v, key);
    else if (key == "llm.api_key") cfg.llm.api_key = as_string(v, key);
    else if (key == "llm.model") cfg.llm.model = as_string(v, key);
    else if (key == "llm.temperature") cfg.llm.temperature = as_double(v, key);
    else if (key == "llm.max_in_flight") cfg.llm.max_in_flight = as_int(v, key);
    else if (key == "llm.min_interval_ms") cfg.llm.min_interval_ms = as_int(v, key);
    else if (key == "llm.timeout_s") cfg.llm.timeout_s = as_int(v, key);
    else if (key == "llm.max_attempts") cfg.max_attempts = as_int(v, key);
    else if (key == "llm.log_path") cfg.llm.log_path = as_string(v, key);
    else if (key == "probe.timeout_ms") cfg.probe.timeout_ms = as_int(v, key);
    else if (key == "probe.concurrency") cfg.probe.concurrency = as_int(v, key);
    else if (key == "probe.retries") cfg.probe.retries = as_int(v, key);
    else throw SchemaError(fmt::format("config line {}: unknown key '{}'", lineno, key));
  }
  cfg.detector.normalize();
  if (cfg.max_attempts < 1) throw SchemaError("config: llm.max_attempts must be >= 1");
  if (cfg.llm.max_in_flight < 1) throw SchemaError("config: llm.max_in_flight must be >= 1");
  if (cfg.probe.concurrency < 1) throw SchemaError("config: probe.concurrency must be >= 1");
  if (cfg.probe.retries < 0) throw SchemaError("config: probe.retries must be >= 0");
  if (cfg.probe.timeout_ms < 1) throw SchemaError("config: probe.timeout_ms must be >= 1");
  return cfg;
}

Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void apply_environment(Config& config) {
  if (const char* key = std::getenv("DPAUDIT_API_KEY"); key && *key) config.llm.api_key = key;
}

json config_to_json(const Config& c) {
  json sens = json::array();
  for (auto s : c.detector.excessive_sensitivities) sens.push_back(std::string(to_string(s)));
  return {
      {"detector",
       {{"maze_depth_threshold", c.detector.maze_depth_threshold},
        {"prominence_gap_threshold", c.detector.prominence_gap_threshold},
        {"min_required_channels", c.detector.min_required_channels},
        {"ambiguous_label_lexicon", c.detector.ambiguous_label_lexicon},
        {"vague_section_lexicon", c.detector.vague_section_lexicon},
        {"excessive_sensitivities", sens}}},
      {"llm",
       {{"endpoint", c.llm.endpoint},
        {"api_key", c.llm.api_key.empty() ? "" : "<redacted>"},
        {"model", c.llm.model},
        {"temperature", c.llm.temperature},
        {"max_in_flight", c.llm.max_in_flight},
        {"min_interval_ms", c.llm.min_interval_ms},
        {"timeout_s", c.llm.timeout_s},
        {"max_attempts", c.max_attempts},
        {"log_path", c.llm.log_path.string()}}},
      {"probe",
       {{"timeout_ms", c.probe.timeout_ms},
        {"concurrency", c.probe.concurrency},
        {"retries", c.probe.retries}}},
  };
}

std::string config_to_text(const Config& c) {
  const auto doc = config_to_json(c);
  std::string out;
  for (const char* table : {"detector", "llm", "probe"}) {
    if (!out.empty()) out += '\n';
    out += fmt::format("[{}]\n", table);
    for (auto it = doc[table].begin(); it != doc[table].end(); ++it) {
      out += fmt::format("{} = {}\n", it.key(), it->dump());
    }
  }
  return out;
}

}  // namespace dpaudit
