#pragma once

#include <vector>

#include "dpaudit/config.hpp"
#include "dpaudit/corpus.hpp"

namespace dpaudit {

inline constexpr int kMaxRedirects = 5;

struct ProbeOptions {
  int timeout_ms = 10000;
  int concurrency = 8;
  // Extra attempts after a network error; HTTP statuses are never retried.
  int retries = 0;

  static ProbeOptions from(const ProbeSettings& s) { return {s.timeout_ms, s.concurrency, s.retries}; }
};

struct ProbeStats {
  int requests = 0;  // HTTP requests issued, redirects included
};

// GETs each URL, following at most kMaxRedirects redirects. A final 2xx or
// 3xx is reachable; network errors, timeouts, 4xx and 5xx are unreachable.
// Throws PreconditionError when `entries` is empty. Output keeps input order.
std::vector<RegistryEntry> probe(std::vector<RegistryEntry> entries, const ProbeOptions& options,
                                 ProbeStats* stats = nullptr);

}  // namespace dpaudit
