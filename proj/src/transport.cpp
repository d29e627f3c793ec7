#include <fstream>
#include <regex>
#include <thread>

#include <fmt/format.h>

#include "httplib.h"

#include "dpaudit/promptkit.hpp"

namespace dpaudit {

ReplayTransport::ReplayTransport(std::map<std::string, std::string> recording, MissMode mode,
                                 std::string fallback)
    : recording_(std::move(recording)), mode_(mode), fallback_(std::move(fallback)) {}

std::map<std::string, std::string> recording_from_json(const json& doc) {
  if (!doc.is_object() || doc.value("schema_version", 0) != kSchemaVersion ||
      !doc.contains("responses") || !doc["responses"].is_object()) {
    throw SchemaError("recording: expected {schema_version: 1, responses: {digest: body}}");
  }
  std::map<std::string, std::string> rec;
  for (auto it = doc["responses"].begin(); it != doc["responses"].end(); ++it) {
    if (!it->is_string()) throw SchemaError("recording: response bodies must be strings");
    rec.emplace(it.key(), it->get<std::string>());
  }
  return rec;
}

ReplayTransport ReplayTransport::from_json(const json& doc, MissMode mode, std::string fallback) {
  return ReplayTransport(recording_from_json(doc), mode, std::move(fallback));
}

json recording_to_json(const std::map<std::string, std::string>& recording) {
  json responses = json::object();
  for (const auto& [k, v] : recording) responses[k] = v;
  return {{"schema_version", kSchemaVersion}, {"responses", responses}};
}

TransportResponse ReplayTransport::send(const TransportRequest& request) {
  {
    std::lock_guard lock(mu_);
    ++calls_;
  }
  const auto digest = request.digest();
  auto it = recording_.find(digest);
  if (it != recording_.end()) return {it->second};
  if (mode_ == MissMode::Fallback) return {fallback_};
  throw Error("replay: no recorded response for digest " + digest);
}

std::size_t ReplayTransport::calls() const {
  std::lock_guard lock(mu_);
  return calls_;
}

// ---------------------------------------------------------------------------

HttpTransport::HttpTransport(HttpTransportConfig config)
    : config_(std::move(config)), in_flight_(std::clamp(config_.max_in_flight, 1, 64)) {
  if (config_.endpoint.empty()) throw PreconditionError("http transport: endpoint not configured");
  if (config_.model.empty()) throw PreconditionError("http transport: model not configured");
}

void HttpTransport::pace() {
  std::chrono::steady_clock::time_point slot;
  {
    std::lock_guard lock(pace_mu_);
    const auto now = std::chrono::steady_clock::now();
    slot = std::max(now, next_slot_);
    next_slot_ = slot + std::chrono::milliseconds(config_.min_interval_ms);
  }
  std::this_thread::sleep_until(slot);
}

void HttpTransport::log_exchange(const std::string& request, int status,
                                 const std::string& response) {
  if (config_.log_path.empty()) return;
  std::lock_guard lock(log_mu_);
  std::ofstream out(config_.log_path, std::ios::app | std::ios::binary);
  json entry{{"request", request}, {"status", status}, {"response", response}};
  out << entry.dump() << "\n";
}

TransportResponse HttpTransport::send(const TransportRequest& request) {
  static const std::regex kUrl(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(config_.endpoint, m, kUrl)) {
    throw PreconditionError("http transport: malformed endpoint " + config_.endpoint);
  }
  const std::string origin = m[1];
  const std::string path = m[2].matched ? std::string(m[2]) : "/";

  json body{{"model", config_.model},
            {"temperature", config_.temperature},
            {"response_format", {{"type", "json_object"}}},
            {"messages",
             json::array({{{"role", "system"}, {"content", request.prompt}},
                          {{"role", "user"},
                           {"content", "Output schema:\n" + request.output_schema +
                                           "\n\nWorkflow trace:\n" + request.trace_document}}})}};
  const std::string payload = body.dump();

  in_flight_.acquire();
  struct Release {
    std::counting_semaphore<64>& s;
    ~Release() { s.release(); }
  } release{in_flight_};
  pace();

  httplib::Client client(origin);
  client.set_connection_timeout(config_.timeout_s, 0);
  client.set_read_timeout(config_.timeout_s, 0);
  client.set_write_timeout(config_.timeout_s, 0);
  httplib::Headers headers;
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);
  auto res = client.Post(path, headers, payload, "application/json");
  if (!res) {
    log_exchange(payload, 0, httplib::to_string(res.error()));
    throw TransportError("http transport: " + httplib::to_string(res.error()));
  }
  log_exchange(payload, res->status, res->body);
  if (res->status < 200 || res->status >= 300) {
    throw TransportError(fmt::format("http transport: status {}", res->status));
  }
  try {
    auto doc = json::parse(res->body);
    return {doc.at("choices").at(0).at("message").at("content").get<std::string>()};
  } catch (const json::exception&) {
    // Not chat-shaped; hand the raw body to the schema gate.
    return {res->body};
  }
}

}  // namespace dpaudit
