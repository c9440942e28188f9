#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "coachai/dialogue/script.hpp"

namespace coachai::dialogue {

/// Lowercase, split on whitespace, strip ASCII punctuation. Numeric tokens
/// keep their sign and decimal point ("-5", "22.5"); a Unicode minus sign
/// is folded to '-'. No stemming.
std::vector<std::string> tokenize(std::string_view text);

/// Applies the token normalization to a single word; may return "".
std::string normalize_word(std::string_view word);

bool is_number(std::string_view token);

struct MatchResult {
    bool matched = false;
    std::map<std::string, std::string> captures;
};

/// Ordered patterns float over the input: elements must match consecutive
/// tokens except where a wildcard spans zero or more tokens; start positions
/// and wildcard spans are tried leftmost and shortest first. Unordered
/// patterns need every element to match a distinct token anywhere.
MatchResult match(const Pattern& pattern, std::span<const std::string> tokens, const DialogueScript& script);
MatchResult match(const Pattern& pattern, std::string_view input, const DialogueScript& script);

}  // namespace coachai::dialogue
