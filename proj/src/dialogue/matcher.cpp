#include "coachai/dialogue/matcher.hpp"

#include <cctype>
#include <functional>

namespace coachai::dialogue {

namespace {

bool is_digit(char c) { return c >= '0' && c <= '9'; }

/// Folds U+2212 MINUS SIGN to '-'.
std::string fold_minus(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (i + 2 < text.size() && static_cast<unsigned char>(text[i]) == 0xE2 &&
            static_cast<unsigned char>(text[i + 1]) == 0x88 && static_cast<unsigned char>(text[i + 2]) == 0x92) {
            out += '-';
            i += 2;
        } else {
            out += text[i];
        }
    }
    return out;
}

}  // namespace

bool is_number(std::string_view token) {
    std::size_t i = 0;
    if (i < token.size() && (token[i] == '-' || token[i] == '+')) ++i;
    std::size_t digits = 0;
    while (i < token.size() && is_digit(token[i])) ++i, ++digits;
    if (i < token.size() && token[i] == '.') {
        ++i;
        std::size_t frac = 0;
        while (i < token.size() && is_digit(token[i])) ++i, ++frac;
        if (frac == 0) return false;
        digits += frac;
    }
    return digits > 0 && i == token.size();
}

std::string normalize_word(std::string_view raw) {
    auto word = fold_minus(raw);
    // Trailing sentence punctuation never belongs to a number ("8." or "7,").
    auto stripped = word;
    while (!stripped.empty() && std::ispunct(static_cast<unsigned char>(stripped.back()))) stripped.pop_back();
    if (is_number(stripped)) return stripped;

    std::string out;
    for (char c : word) {
        const auto uc = static_cast<unsigned char>(c);
        if (uc < 0x80 && std::ispunct(uc)) continue;
        out += static_cast<char>(uc < 0x80 ? std::tolower(uc) : uc);
    }
    return out;
}

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        const auto begin = i;
        while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        if (i == begin) break;
        auto token = normalize_word(text.substr(begin, i - begin));
        if (!token.empty()) tokens.push_back(std::move(token));
    }
    return tokens;
}

namespace {

bool element_matches(const PatternElement& e, const std::string& token, const DialogueScript& script) {
    switch (e.kind) {
        case ElementKind::word:
        case ElementKind::capture_word:
            return token == e.text;
        case ElementKind::concept_ref:
        case ElementKind::capture_concept:
            return script.concept_contains(e.text, token);
        case ElementKind::wildcard:
            return true;
    }
    return false;
}

bool is_capture(const PatternElement& e) {
    return e.kind == ElementKind::capture_word || e.kind == ElementKind::capture_concept;
}

class OrderedMatcher {
public:
    OrderedMatcher(const Pattern& p, std::span<const std::string> tokens, const DialogueScript& s)
        : pattern_(p), tokens_(tokens), script_(s) {}

    MatchResult run() {
        for (std::size_t start = 0; start <= tokens_.size(); ++start) {
            captures_.clear();
            if (step(0, start)) return {true, captures_};
        }
        return {};
    }

private:
    bool step(std::size_t elem, std::size_t tok) {
        if (elem == pattern_.elements.size()) return true;
        const auto& e = pattern_.elements[elem];
        if (e.kind == ElementKind::wildcard) {
            for (std::size_t span = 0; tok + span <= tokens_.size(); ++span) {
                if (step(elem + 1, tok + span)) return true;
            }
            return false;
        }
        if (tok >= tokens_.size() || !element_matches(e, tokens_[tok], script_)) return false;
        const bool binds = is_capture(e) && !captures_.count(e.text);
        if (binds) captures_[e.text] = tokens_[tok];
        if (step(elem + 1, tok + 1)) return true;
        if (binds) captures_.erase(e.text);
        return false;
    }

    const Pattern& pattern_;
    std::span<const std::string> tokens_;
    const DialogueScript& script_;
    std::map<std::string, std::string> captures_;
};

class UnorderedMatcher {
public:
    UnorderedMatcher(const Pattern& p, std::span<const std::string> tokens, const DialogueScript& s)
        : pattern_(p), tokens_(tokens), script_(s), used_(tokens.size(), false) {}

    MatchResult run() {
        if (step(0)) return {true, captures_};
        return {};
    }

private:
    bool step(std::size_t elem) {
        if (elem == pattern_.elements.size()) return true;
        const auto& e = pattern_.elements[elem];
        for (std::size_t t = 0; t < tokens_.size(); ++t) {
            if (used_[t] || !element_matches(e, tokens_[t], script_)) continue;
            used_[t] = true;
            const bool binds = is_capture(e) && !captures_.count(e.text);
            if (binds) captures_[e.text] = tokens_[t];
            if (step(elem + 1)) return true;
            if (binds) captures_.erase(e.text);
            used_[t] = false;
        }
        return false;
    }

    const Pattern& pattern_;
    std::span<const std::string> tokens_;
    const DialogueScript& script_;
    std::vector<bool> used_;
    std::map<std::string, std::string> captures_;
};

}  // namespace

MatchResult match(const Pattern& pattern, std::span<const std::string> tokens, const DialogueScript& script) {
    if (pattern.unordered) return UnorderedMatcher(pattern, tokens, script).run();
    return OrderedMatcher(pattern, tokens, script).run();
}

MatchResult match(const Pattern& pattern, std::string_view input, const DialogueScript& script) {
    const auto tokens = tokenize(input);
    return match(pattern, tokens, script);
}

}  // namespace coachai::dialogue
