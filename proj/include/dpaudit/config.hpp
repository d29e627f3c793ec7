#pragma once

#include <filesystem>
#include <string>

#include "dpaudit/detector.hpp"
#include "dpaudit/promptkit.hpp"
#include "dpaudit/serialize.hpp"

namespace dpaudit {

struct ProbeSettings {
  int timeout_ms = 10000;
  int concurrency = 8;
  int retries = 0;
};

struct Config {
  DetectorConfig detector;
  HttpTransportConfig llm;
  int max_attempts = 3;
  ProbeSettings probe;
};

// Key/value file with [detector], [llm] and [probe] tables. Values are
// integers, floats, booleans, "strings" or ["string", ...] arrays; `#` starts
// a comment. Unknown keys and malformed lines raise SchemaError.
Config parse_config(std::string_view text);
Config load_config(const std::filesystem::path& path);

// DPAUDIT_API_KEY replaces llm.api_key. No other setting reads the environment.
void apply_environment(Config& config);

// Effective settings with the API key redacted.
json config_to_json(const Config& config);
std::string config_to_text(const Config& config);

}  // namespace dpaudit
