#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "coachai/error.hpp"

namespace coachai::dialogue {

enum class ElementKind {
    word,             // literal, lowercase
    concept_ref,      // ~name
    wildcard,         // *
    capture_word,     // _word
    capture_concept,  // _~name
};

struct PatternElement {
    ElementKind kind = ElementKind::word;
    std::string text;  // the word, or the concept name without '~'

    bool operator==(const PatternElement&) const = default;
};

struct Pattern {
    std::vector<PatternElement> elements;
    bool unordered = false;  // written as ( << ... >> )

    bool operator==(const Pattern&) const = default;
};

enum class RuleKind { gambit, question, statement };

struct Rejoinder {
    Pattern pattern;
    std::string output;

    bool operator==(const Rejoinder&) const = default;
};

struct Rule {
    RuleKind kind = RuleKind::gambit;
    std::string label;
    std::optional<Pattern> pattern;
    std::string output;
    std::vector<Rejoinder> rejoinders;

    bool is_responder() const { return kind != RuleKind::gambit; }
    bool operator==(const Rule&) const = default;
};

struct TopicKeyword {
    bool is_concept = false;
    std::string text;

    bool operator==(const TopicKeyword&) const = default;
};

struct Topic {
    std::string name;
    std::vector<TopicKeyword> keywords;
    std::vector<Rule> rules;

    bool operator==(const Topic&) const = default;
};

/// Members are lowercase words or "~name" references to other concepts.
struct Concept {
    std::string name;
    std::vector<std::string> members;
    // Created from a topic keyword list that names an undefined concept;
    // its members are that topic's plain keywords. Never printed.
    bool implied = false;

    bool operator==(const Concept&) const = default;
};

/// Concepts supplied from outside a script (a shared vocabulary file).
using ConceptLibrary = std::map<std::string, Concept, std::less<>>;

/// Matches any numeric token. Always defined.
inline constexpr std::string_view kNumberConcept = "number";

struct DialogueScript {
    std::vector<Concept> concepts;  // defined by (or implied in) this script
    std::vector<Topic> topics;
    ConceptLibrary library;

    const Concept* find_concept(std::string_view name) const;
    const Topic* find_topic(std::string_view name) const;
    std::optional<std::size_t> topic_index(std::string_view name) const;

    /// True when `token` is a member of ~name, following nested references.
    bool concept_contains(std::string_view name, std::string_view token) const;

    bool operator==(const DialogueScript& other) const {
        return concepts == other.concepts && topics == other.topics;
    }
};

class ParseError : public Error {
public:
    ParseError(std::size_t line, std::size_t column, const std::string& message)
        : Error(ErrorKind::parse, "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " +
                                      message),
          line_(line),
          column_(column) {}

    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

/// Parses a dialogue script. Lines starting with "||" or "#" are comments;
/// a line that does not start with a directive continues the previous one.
/// References to concepts that neither the script nor `library` defines are
/// errors.
DialogueScript parse_script(std::string_view source, const ConceptLibrary& library = {});

/// A file holding only `concept:` lines.
ConceptLibrary parse_concept_library(std::string_view source);

/// Canonical text form; parse_script(print_script(s)) == s.
std::string print_script(const DialogueScript& script);
std::string print_pattern(const Pattern& pattern);

}  // namespace coachai::dialogue
