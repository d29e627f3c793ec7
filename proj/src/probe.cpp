#include "dpaudit/probe.hpp"

#include <algorithm>
#include <atomic>
#include <regex>
#include <thread>

#include "httplib.h"

#include "dpaudit/error.hpp"

namespace dpaudit {

namespace {

struct UrlParts {
  std::string origin;
  std::string path;
};

std::optional<UrlParts> split_url(const std::string& url) {
  static const std::regex kUrl(R"(^(https?://[^/?#]+)([^#]*))", std::regex::icase);
  std::smatch m;
  if (!std::regex_search(url, m, kUrl)) return std::nullopt;
  std::string path = m[2];
  if (path.empty() || path.front() != '/') path = "/" + path;
  return UrlParts{m[1], path};
}

std::string resolve_location(const UrlParts& base, const std::string& location) {
  if (location.rfind("http://", 0) == 0 || location.rfind("https://", 0) == 0) return location;
  if (!location.empty() && location.front() == '/') return base.origin + location;
  auto dir = base.path.substr(0, base.path.rfind('/') + 1);
  return base.origin + dir + location;
}

ProbeResult probe_one(const std::string& start, const ProbeOptions& opt, std::atomic<int>& requests) {
  std::string url = start;
  for (int hop = 0;; ++hop) {
    auto parts = split_url(url);
    if (!parts) return ProbeResult::Unreachable;
    httplib::Client client(parts->origin);
    const auto sec = opt.timeout_ms / 1000;
    const auto usec = (opt.timeout_ms % 1000) * 1000;
    client.set_connection_timeout(sec, usec);
    client.set_read_timeout(sec, usec);
    client.set_write_timeout(sec, usec);
    client.set_follow_location(false);

    httplib::Result res{nullptr, httplib::Error::Unknown};
    for (int attempt = 0; attempt <= opt.retries; ++attempt) {
      ++requests;
      res = client.Get(parts->path);
      if (res) break;
    }
    if (!res) return ProbeResult::Unreachable;
    const int status = res->status;
    if (status >= 200 && status < 300) return ProbeResult::Reachable;
    if (status >= 300 && status < 400) {
      const auto location = res->get_header_value("Location");
      if (location.empty() || hop >= kMaxRedirects) return ProbeResult::Reachable;
      url = resolve_location(*parts, location);
      continue;
    }
    return ProbeResult::Unreachable;
  }
}

}  // namespace

std::vector<RegistryEntry> probe(std::vector<RegistryEntry> entries, const ProbeOptions& options,
                                 ProbeStats* stats) {
  if (entries.empty()) throw PreconditionError("probe: no registry entries");
  if (options.concurrency < 1 || options.timeout_ms < 1 || options.retries < 0) {
    throw PreconditionError("probe: concurrency and timeout must be positive, retries >= 0");
  }
  std::atomic<std::size_t> next{0};
  std::atomic<int> requests{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < entries.size(); i = next++) {
      entries[i].probe_result = valid_url(entries[i].url)
                                    ? probe_one(entries[i].url, options, requests)
                                    : ProbeResult::Unreachable;
    }
  };
  const auto n = std::min<std::size_t>(static_cast<std::size_t>(options.concurrency), entries.size());
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < n; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (stats) stats->requests = requests.load();
  return entries;
}

}  // namespace dpaudit
