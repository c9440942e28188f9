#include <algorithm>
#include <cctype>
#include <set>

#include "coachai/dialogue/matcher.hpp"
#include "coachai/dialogue/script.hpp"
#include "../text_util.hpp"

namespace coachai::dialogue {

namespace {

struct Segment {
    std::size_t offset;
    std::size_t line;
    std::size_t column;
};

enum class Directive { none, concept_def, topic, gambit, question, statement, rejoinder };

/// One directive line together with its continuation lines.
struct Statement {
    Directive directive = Directive::none;
    std::size_t body_offset = 0;  // first character after the directive keyword
    std::string text;
    std::vector<Segment> segments;

    std::pair<std::size_t, std::size_t> position(std::size_t offset) const {
        const Segment* seg = &segments.front();
        for (const auto& s : segments) {
            if (s.offset <= offset) seg = &s;
        }
        return {seg->line, seg->column + (offset - seg->offset)};
    }
};

bool starts_with_ci(std::string_view s, std::string_view prefix) {
    if (s.size() < prefix.size()) return false;
    for (std::size_t i = 0; i < prefix.size(); ++i) {
        if (std::tolower(static_cast<unsigned char>(s[i])) != prefix[i]) return false;
    }
    return true;
}

std::pair<Directive, std::size_t> directive_of(std::string_view line) {
    if (starts_with_ci(line, "concept:")) return {Directive::concept_def, 8};
    if (starts_with_ci(line, "topic:")) return {Directive::topic, 6};
    if (starts_with_ci(line, "t:")) return {Directive::gambit, 2};
    if (starts_with_ci(line, "?:")) return {Directive::question, 2};
    if (starts_with_ci(line, "s:")) return {Directive::statement, 2};
    if (starts_with_ci(line, "a:")) return {Directive::rejoinder, 2};
    return {Directive::none, 0};
}

std::vector<Statement> split_statements(std::string_view source) {
    std::vector<Statement> out;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start < source.size()) {
        auto end = source.find('\n', start);
        if (end == std::string_view::npos) end = source.size();
        std::string_view line = source.substr(start, end - start);
        start = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

        std::size_t indent = 0;
        while (indent < line.size() && std::isspace(static_cast<unsigned char>(line[indent]))) ++indent;
        const std::string_view body = detail::trim(line);
        if (body.empty() || body.starts_with("||") || body.starts_with("#")) continue;

        const auto [directive, keyword_len] = directive_of(body);
        if (directive != Directive::none) {
            Statement st;
            st.directive = directive;
            st.body_offset = keyword_len;
            st.text = std::string(body);
            st.segments.push_back({0, line_no, indent + 1});
            out.push_back(std::move(st));
            continue;
        }
        if (out.empty())
            throw ParseError(line_no, indent + 1, "expected a directive (concept:, Topic:, t:, ?:, s:, a:)");
        auto& st = out.back();
        st.text += ' ';
        st.segments.push_back({st.text.size(), line_no, indent + 1});
        st.text += body;
    }
    return out;
}

struct ConceptRef {
    std::string name;
    std::size_t line;
    std::size_t column;
};

class StatementParser {
public:
    StatementParser(const Statement& st, std::vector<ConceptRef>& refs)
        : st_(st), refs_(refs), pos_(st.body_offset) {}

    [[noreturn]] void fail(const std::string& message) const { fail_at(pos_, message); }

    [[noreturn]] void fail_at(std::size_t offset, const std::string& message) const {
        auto [line, col] = st_.position(std::min(offset, st_.text.size()));
        throw ParseError(line, col, message);
    }

    void skip_ws() {
        while (pos_ < st_.text.size() && std::isspace(static_cast<unsigned char>(st_.text[pos_]))) ++pos_;
    }

    bool at_end() {
        skip_ws();
        return pos_ >= st_.text.size();
    }

    char peek() const { return pos_ < st_.text.size() ? st_.text[pos_] : '\0'; }

    std::pair<std::size_t, std::size_t> where() const { return st_.position(std::min(pos_, st_.text.size())); }

    void expect(char c) {
        skip_ws();
        if (peek() != c) fail(std::string("expected '") + c + "'");
        ++pos_;
    }

    std::string name() {
        skip_ws();
        const auto begin = pos_;
        while (pos_ < st_.text.size() &&
               (std::isalnum(static_cast<unsigned char>(st_.text[pos_])) || st_.text[pos_] == '_'))
            ++pos_;
        if (pos_ == begin) fail("expected a name");
        return detail::to_lower(std::string_view(st_.text).substr(begin, pos_ - begin));
    }

    /// '~' NAME. References are recorded for resolution once the whole
    /// script has been read.
    std::string tilde_name(bool record) {
        skip_ws();
        const auto at = pos_;
        expect('~');
        auto n = name();
        if (record) {
            auto [line, col] = st_.position(at);
            refs_.push_back({n, line, col});
        }
        return n;
    }

    std::string word() {
        skip_ws();
        const auto begin = pos_;
        while (pos_ < st_.text.size()) {
            const char c = st_.text[pos_];
            if (std::isspace(static_cast<unsigned char>(c)) || c == '(' || c == ')' || c == '<' || c == '>') break;
            ++pos_;
        }
        if (pos_ == begin) fail("expected a word");
        auto w = normalize_word(std::string_view(st_.text).substr(begin, pos_ - begin));
        if (w.empty()) fail_at(begin, "word has no letters or digits");
        return w;
    }

    Pattern pattern() {
        Pattern p;
        expect('(');
        skip_ws();
        if (st_.text.compare(pos_, 2, "<<") == 0) {
            p.unordered = true;
            pos_ += 2;
        }
        bool closed_unordered = false;
        while (true) {
            skip_ws();
            if (pos_ >= st_.text.size()) fail("unterminated pattern");
            const char c = peek();
            if (c == ')') break;
            if (closed_unordered) fail("expected ')' after '>>'");
            const auto at = pos_;
            if (c == '>') {
                if (!p.unordered || st_.text.compare(pos_, 2, ">>") != 0) fail("unexpected '>'");
                pos_ += 2;
                closed_unordered = true;
                continue;
            }
            if (c == '<' || c == '(') fail(std::string("unexpected '") + c + "'");
            if (c == '*') {
                ++pos_;
                if (p.unordered) fail_at(at, "wildcards are not allowed in << >> patterns");
                p.elements.push_back({ElementKind::wildcard, "*"});
            } else if (c == '~') {
                p.elements.push_back({ElementKind::concept_ref, tilde_name(true)});
            } else if (c == '_') {
                ++pos_;
                skip_ws();
                if (peek() == '~') p.elements.push_back({ElementKind::capture_concept, tilde_name(true)});
                else p.elements.push_back({ElementKind::capture_word, word()});
            } else {
                p.elements.push_back({ElementKind::word, word()});
            }
        }
        if (p.unordered && !closed_unordered) fail("'<<' without matching '>>'");
        ++pos_;  // ')'
        if (p.elements.empty()) fail("empty pattern");
        return p;
    }

    /// An all-caps identifier of two or more characters, followed by more
    /// text on the same rule.
    std::string optional_label() {
        skip_ws();
        std::size_t end = pos_;
        bool has_letter = false;
        while (end < st_.text.size()) {
            const auto c = static_cast<unsigned char>(st_.text[end]);
            if (std::isupper(c)) has_letter = true;
            else if (!(std::isdigit(c) || c == '_')) break;
            ++end;
        }
        if (end - pos_ < 2 || !has_letter || end >= st_.text.size()) return {};
        const char next = st_.text[end];
        if (!(std::isspace(static_cast<unsigned char>(next)) || next == '(')) return {};
        auto label = st_.text.substr(pos_, end - pos_);
        pos_ = end;
        return label;
    }

    std::string rest() {
        auto text = std::string(detail::trim(std::string_view(st_.text).substr(std::min(pos_, st_.text.size()))));
        pos_ = st_.text.size();
        return text;
    }

private:
    const Statement& st_;
    std::vector<ConceptRef>& refs_;
    std::size_t pos_;
};

Concept parse_concept(StatementParser& p) {
    Concept c;
    c.name = p.tilde_name(false);
    p.expect('(');
    while (true) {
        p.skip_ws();
        if (p.peek() == ')') break;
        if (p.peek() == '\0') p.fail("unterminated concept member list");
        if (p.peek() == '~') c.members.push_back("~" + p.tilde_name(true));
        else c.members.push_back(p.word());
    }
    p.expect(')');
    if (c.members.empty()) p.fail("concept ~" + c.name + " has no members");
    if (!p.at_end()) p.fail("unexpected text after concept definition");
    return c;
}

Topic parse_topic_header(StatementParser& p, std::vector<ConceptRef>& keyword_refs) {
    Topic t;
    t.name = p.tilde_name(false);
    p.expect('(');
    while (true) {
        p.skip_ws();
        if (p.peek() == ')') break;
        if (p.peek() == '\0') p.fail("unterminated topic keyword list");
        if (p.peek() == '~') {
            const auto [line, col] = p.where();
            auto name = p.tilde_name(false);
            t.keywords.push_back({true, name});
            keyword_refs.push_back({name, line, col});
        } else {
            t.keywords.push_back({false, p.word()});
        }
    }
    p.expect(')');
    if (!p.at_end()) p.fail("unexpected text after topic header");
    return t;
}

Rule parse_rule(StatementParser& p, Directive d) {
    Rule r;
    r.kind = d == Directive::gambit ? RuleKind::gambit
             : d == Directive::question ? RuleKind::question
                                        : RuleKind::statement;
    r.label = p.optional_label();
    p.skip_ws();
    if (p.peek() == '(') r.pattern = p.pattern();
    r.output = p.rest();
    if (r.is_responder() && !r.pattern) p.fail_at(0, "responders need a pattern");
    if (r.kind == RuleKind::gambit && r.output.empty()) p.fail_at(0, "gambit has no text");
    return r;
}

bool is_builtin(std::string_view name) { return name == kNumberConcept; }

struct ParseOutput {
    DialogueScript script;
    std::vector<ConceptRef> refs;
    std::vector<std::pair<std::size_t, ConceptRef>> keyword_refs;  // (topic index, ref)
};

ParseOutput parse_statements(std::string_view source, const ConceptLibrary& library, bool concepts_only) {
    ParseOutput out;
    auto& script = out.script;
    script.library = library;
    std::set<std::string, std::less<>> concept_names;
    Topic* topic = nullptr;
    Rule* rule = nullptr;
    std::pair<std::size_t, std::size_t> topic_at{1, 1};

    for (const auto& st : split_statements(source)) {
        StatementParser p(st, out.refs);
        if (concepts_only && st.directive != Directive::concept_def)
            p.fail_at(0, "only concept definitions are allowed in a concept library");
        switch (st.directive) {
            case Directive::concept_def: {
                auto c = parse_concept(p);
                if (is_builtin(c.name) || !concept_names.insert(c.name).second)
                    p.fail_at(0, "duplicate concept ~" + c.name);
                script.concepts.push_back(std::move(c));
                break;
            }
            case Directive::topic: {
                std::vector<ConceptRef> kw;
                auto t = parse_topic_header(p, kw);
                if (script.find_topic(t.name)) p.fail_at(0, "duplicate topic ~" + t.name);
                if (topic && topic->rules.empty())
                    throw ParseError(topic_at.first, topic_at.second, "topic ~" + topic->name + " has no rules");
                topic_at = st.position(0);
                for (auto& r : kw) out.keyword_refs.emplace_back(script.topics.size(), std::move(r));
                script.topics.push_back(std::move(t));
                topic = &script.topics.back();
                rule = nullptr;
                break;
            }
            case Directive::gambit:
            case Directive::question:
            case Directive::statement: {
                if (!topic) p.fail_at(0, "rule outside of a topic");
                topic->rules.push_back(parse_rule(p, st.directive));
                rule = &topic->rules.back();
                break;
            }
            case Directive::rejoinder: {
                if (!rule) p.fail_at(0, "rejoinder without a preceding rule");
                Rejoinder rj;
                p.skip_ws();
                if (p.peek() != '(') p.fail("rejoinders need a pattern");
                rj.pattern = p.pattern();
                rj.output = p.rest();
                rule->rejoinders.push_back(std::move(rj));
                break;
            }
            case Directive::none:
                break;
        }
    }
    if (topic && topic->rules.empty()) {
        throw ParseError(topic_at.first, topic_at.second, "topic ~" + topic->name + " has no rules");
    }
    return out;
}

bool defined(const DialogueScript& script, std::string_view name) {
    return is_builtin(name) || script.find_concept(name) != nullptr;
}

}  // namespace

// ---------------------------------------------------------------------------

const Concept* DialogueScript::find_concept(std::string_view name) const {
    for (const auto& c : concepts) {
        if (c.name == name) return &c;
    }
    if (auto it = library.find(name); it != library.end()) return &it->second;
    return nullptr;
}

const Topic* DialogueScript::find_topic(std::string_view name) const {
    auto idx = topic_index(name);
    return idx ? &topics[*idx] : nullptr;
}

std::optional<std::size_t> DialogueScript::topic_index(std::string_view name) const {
    if (name.starts_with("~")) name.remove_prefix(1);
    for (std::size_t i = 0; i < topics.size(); ++i) {
        if (topics[i].name == name) return i;
    }
    return std::nullopt;
}

namespace {

bool contains_impl(const DialogueScript& s, std::string_view name, std::string_view token,
                   std::set<std::string, std::less<>>& visiting) {
    if (name == kNumberConcept) return is_number(token);
    const auto* c = s.find_concept(name);
    if (!c || !visiting.emplace(name).second) return false;
    for (const auto& m : c->members) {
        if (m.starts_with("~")) {
            if (contains_impl(s, std::string_view(m).substr(1), token, visiting)) return true;
        } else if (m == token) {
            return true;
        }
    }
    return false;
}

}  // namespace

bool DialogueScript::concept_contains(std::string_view name, std::string_view token) const {
    std::set<std::string, std::less<>> visiting;
    return contains_impl(*this, name, token, visiting);
}

DialogueScript parse_script(std::string_view source, const ConceptLibrary& library) {
    if (detail::trim(source).empty()) throw ParseError(1, 1, "empty script");
    auto out = parse_statements(source, library, false);
    auto& script = out.script;
    if (script.topics.empty()) throw ParseError(1, 1, "script defines no topics");

    // A topic keyword naming an undefined concept implies that concept,
    // populated with the topic's plain keywords.
    for (const auto& [topic_idx, ref] : out.keyword_refs) {
        if (defined(script, ref.name)) continue;
        Concept implied{ref.name, {}, true};
        for (const auto& kw : script.topics[topic_idx].keywords) {
            if (!kw.is_concept) implied.members.push_back(kw.text);
        }
        if (implied.members.empty())
            throw ParseError(ref.line, ref.column, "undefined concept ~" + ref.name);
        script.concepts.push_back(std::move(implied));
    }
    for (const auto& ref : out.refs) {
        if (!defined(script, ref.name)) throw ParseError(ref.line, ref.column, "undefined concept ~" + ref.name);
    }
    return script;
}

ConceptLibrary parse_concept_library(std::string_view source) {
    auto out = parse_statements(source, {}, true);
    for (const auto& ref : out.refs) {
        if (!defined(out.script, ref.name)) throw ParseError(ref.line, ref.column, "undefined concept ~" + ref.name);
    }
    ConceptLibrary lib;
    for (auto& c : out.script.concepts) {
        auto name = c.name;
        lib.emplace(std::move(name), std::move(c));
    }
    return lib;
}

// ---------------------------------------------------------------------------
// Printing

std::string print_pattern(const Pattern& pattern) {
    std::string out = "(";
    if (pattern.unordered) out += "<< ";
    for (std::size_t i = 0; i < pattern.elements.size(); ++i) {
        if (i) out += ' ';
        const auto& e = pattern.elements[i];
        switch (e.kind) {
            case ElementKind::word: out += e.text; break;
            case ElementKind::concept_ref: out += "~" + e.text; break;
            case ElementKind::wildcard: out += "*"; break;
            case ElementKind::capture_word: out += "_" + e.text; break;
            case ElementKind::capture_concept: out += "_~" + e.text; break;
        }
    }
    if (pattern.unordered) out += " >>";
    out += ")";
    return out;
}

std::string print_script(const DialogueScript& script) {
    std::string out;
    for (const auto& c : script.concepts) {
        if (c.implied) continue;
        out += "concept: ~" + c.name + " (";
        for (std::size_t i = 0; i < c.members.size(); ++i) {
            if (i) out += ' ';
            out += c.members[i];
        }
        out += ")\n";
    }
    for (const auto& t : script.topics) {
        if (!out.empty()) out += '\n';
        out += "Topic: ~" + t.name + " (";
        for (std::size_t i = 0; i < t.keywords.size(); ++i) {
            if (i) out += ' ';
            out += (t.keywords[i].is_concept ? "~" : "") + t.keywords[i].text;
        }
        out += ")\n";
        for (const auto& r : t.rules) {
            out += r.kind == RuleKind::gambit ? "t:" : r.kind == RuleKind::question ? "?:" : "s:";
            if (!r.label.empty()) out += " " + r.label;
            if (r.pattern) out += " " + print_pattern(*r.pattern);
            if (!r.output.empty()) out += " " + r.output;
            out += '\n';
            for (const auto& rj : r.rejoinders) {
                out += "    a: " + print_pattern(rj.pattern);
                if (!rj.output.empty()) out += " " + rj.output;
                out += '\n';
            }
        }
    }
    return out;
}

}  // namespace coachai::dialogue
