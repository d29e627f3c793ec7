#include "dpaudit/text.hpp"

#include <cctype>

namespace dpaudit::text {

std::string normalize(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (unsigned char c : s) {
    if (std::isalnum(c)) {
      if (pending_space && !out.empty()) out.push_back(' ');
      pending_space = false;
      out.push_back(static_cast<char>(std::tolower(c)));
    } else {
      pending_space = true;
    }
  }
  return out;
}

bool in_lexicon(std::string_view label, const std::set<std::string>& lexicon) {
  return lexicon.count(normalize(label)) > 0;
}

bool contains_phrase(std::string_view haystack, std::string_view phrase) {
  const std::string h = " " + normalize(haystack) + " ";
  const std::string p = normalize(phrase);
  if (p.empty()) return false;
  return h.find(" " + p + " ") != std::string::npos;
}

}  // namespace dpaudit::text
