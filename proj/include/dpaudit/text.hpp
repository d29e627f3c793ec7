#pragma once

#include <set>
#include <string>
#include <string_view>

namespace dpaudit::text {

// Lowercases, replaces every non-alphanumeric byte with a space and collapses
// runs of whitespace. "Info-Request!" -> "info request".
std::string normalize(std::string_view s);

// Exact-phrase lexicon match on normalized text.
bool in_lexicon(std::string_view label, const std::set<std::string>& lexicon);

// True when the normalized `haystack` contains the normalized `phrase` on
// word boundaries.
bool contains_phrase(std::string_view haystack, std::string_view phrase);

}  // namespace dpaudit::text
