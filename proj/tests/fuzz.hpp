#pragma once

#include <random>
#include <string>
#include <vector>

#include "dpaudit/serialize.hpp"

namespace fuzz {

using dpaudit::json;

enum class Mutation { DeleteField, LabelCount, EvidenceQuote };

inline std::size_t pick(std::mt19937_64& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

// Every object member path below `doc`.
inline void object_paths(const json& doc, const json::json_pointer& at,
                         std::vector<json::json_pointer>& out) {
  if (doc.is_object()) {
    for (const auto& [k, v] : doc.items()) {
      out.push_back(at / k);
      object_paths(v, at / k, out);
    }
  } else if (doc.is_array()) {
    for (std::size_t i = 0; i < doc.size(); ++i) object_paths(doc[i], at / i, out);
  }
}

// Damages a valid report document so that it must be rejected.
inline json mutate(json doc, Mutation kind, std::mt19937_64& rng) {
  switch (kind) {
    case Mutation::DeleteField: {
      std::vector<json::json_pointer> paths;
      object_paths(doc, json::json_pointer(), paths);
      const auto p = paths[pick(rng, paths.size())];
      doc[p.parent_pointer()].erase(p.back());
      break;
    }
    case Mutation::LabelCount: {
      auto& labels = doc["labels"];
      if (pick(rng, 2) == 0) {
        const auto drop = 1 + pick(rng, 3);
        for (std::size_t i = 0; i < drop && !labels.empty(); ++i) {
          auto it = labels.begin();
          std::advance(it, static_cast<long>(pick(rng, labels.size())));
          labels.erase(it.key());
        }
      } else {
        labels["Category" + std::to_string(pick(rng, 1000))] = pick(rng, 2) == 1;
      }
      break;
    }
    case Mutation::EvidenceQuote: {
      auto& findings = doc["findings"];
      auto& f = findings[pick(rng, findings.size())];
      auto& ev = f["evidence"][pick(rng, f["evidence"].size())];
      std::string q = ev["quote"].get<std::string>();
      if (q.empty() || pick(rng, 3) == 0) {
        q += "~" + std::to_string(rng() % 100000);
      } else {
        q[pick(rng, q.size())] ^= 0x20;
        q += "\x01";
      }
      ev["quote"] = q;
      break;
    }
  }
  return doc;
}

}  // namespace fuzz
