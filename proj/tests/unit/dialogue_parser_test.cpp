#include <gtest/gtest.h>

#include <tuple>

#include "coachai/dialogue/script.hpp"
#include "support/test_support.hpp"

using namespace coachai::dialogue;
using coachai::testing::data_path;
using coachai::testing::fixture_path;
using coachai::testing::read_file;

namespace {

PatternElement w(const char* t) { return {ElementKind::word, t}; }
PatternElement cref(const char* t) { return {ElementKind::concept_ref, t}; }
PatternElement star() { return {ElementKind::wildcard, "*"}; }
PatternElement cap(const char* t) { return {ElementKind::capture_word, t}; }
PatternElement capc(const char* t) { return {ElementKind::capture_concept, t}; }

DialogueScript food() {
    auto lib = parse_concept_library(read_file(data_path("paper_concepts.lib")));
    return parse_script(read_file(data_path("paper_food.script")), lib);
}

}  // namespace

TEST(Parser, FoodTopicStructure) {
    auto s = food();
    ASSERT_EQ(s.topics.size(), 1u);
    const auto& t = s.topics[0];
    EXPECT_EQ(t.name, "food");
    ASSERT_EQ(t.keywords.size(), 4u);
    EXPECT_EQ(t.keywords[0], (TopicKeyword{true, "fruit"}));
    EXPECT_EQ(t.keywords[1], (TopicKeyword{false, "fruit"}));
    ASSERT_EQ(t.rules.size(), 3u);

    EXPECT_EQ(t.rules[0].kind, RuleKind::gambit);
    EXPECT_EQ(t.rules[0].output, "What is your favorite food?");
    ASSERT_EQ(t.rules[0].rejoinders.size(), 2u);
    // "~ fruit" with a space still names the concept.
    EXPECT_EQ(t.rules[0].rejoinders[0].pattern.elements, std::vector{cref("fruit")});
    // Continuation line joins the output.
    EXPECT_EQ(t.rules[0].rejoinders[1].output, "I prefer listening to heavy metal music rather than eating it.");

    EXPECT_EQ(t.rules[1].kind, RuleKind::question);
    EXPECT_EQ(t.rules[1].label, "WHATMUSIC");
    EXPECT_TRUE(t.rules[1].pattern->unordered);
    EXPECT_EQ(t.rules[1].pattern->elements, (std::vector{w("what"), w("music"), w("you"), cref("like")}));

    EXPECT_EQ(t.rules[2].kind, RuleKind::statement);
    EXPECT_EQ(t.rules[2].pattern->elements,
              (std::vector{w("i"), star(), cref("like"), star(), capc("music_types")}));
    EXPECT_EQ(t.rules[2].output, "");
}

TEST(Parser, UndefinedTopicKeywordConceptIsImplied) {
    auto s = food();
    const auto* fruit = s.find_concept("fruit");
    ASSERT_NE(fruit, nullptr);
    EXPECT_TRUE(fruit->implied);
    EXPECT_EQ(fruit->members, (std::vector<std::string>{"fruit", "food", "eat"}));
    EXPECT_TRUE(s.concept_contains("fruit", "eat"));
}

TEST(Parser, ConceptsNestAndNumberIsBuiltin) {
    auto s = parse_script(read_file(fixture_path("five_topics.script")));
    EXPECT_TRUE(s.concept_contains("pets", "canary"));
    EXPECT_FALSE(s.concept_contains("birds", "dog"));
    EXPECT_TRUE(s.concept_contains("number", "-2.5"));
    EXPECT_FALSE(s.concept_contains("number", "two"));
    EXPECT_EQ(s.find_concept("days")->members.size(), 7u);
}

TEST(Parser, FiveTopicFixtureShape) {
    auto s = parse_script(read_file(fixture_path("five_topics.script")));
    ASSERT_EQ(s.topics.size(), 5u);
    EXPECT_EQ(s.topics[0].rules[0].label, "PETQ");
    EXPECT_EQ(s.topics[0].rules[0].rejoinders[0].pattern.elements, std::vector{capc("pets")});
    EXPECT_EQ(s.topics[3].rules[2].pattern->elements, std::vector{cap("word")});
    EXPECT_EQ(s.topics[2].rules[1].pattern->elements, (std::vector{capc("number"), w("plus"), capc("number")}));
    EXPECT_TRUE(s.find_concept("farewell")->implied);
}

TEST(Printer, RoundTripFiveTopics) {
    auto s = parse_script(read_file(fixture_path("five_topics.script")));
    const auto text = print_script(s);
    auto again = parse_script(text);
    EXPECT_EQ(again, s);
    EXPECT_EQ(print_script(again), text);
}

TEST(Printer, RoundTripWithLibrary) {
    auto lib = parse_concept_library(read_file(data_path("paper_concepts.lib")));
    auto s = food();
    EXPECT_EQ(parse_script(print_script(s), lib), s);
    auto coach = parse_script(read_file(data_path("coach.script")), lib);
    EXPECT_EQ(parse_script(print_script(coach), lib), coach);
}

TEST(Printer, Pattern) {
    Pattern p{{w("what"), cref("like")}, true};
    EXPECT_EQ(print_pattern(p), "(<< what ~like >>)");
    Pattern q{{w("i"), star(), capc("x"), cap("y")}, false};
    EXPECT_EQ(print_pattern(q), "(i * _~x _y)");
}

TEST(ConceptLibrary, Parses) {
    auto lib = parse_concept_library(read_file(data_path("paper_concepts.lib")));
    ASSERT_EQ(lib.size(), 3u);
    EXPECT_EQ(lib.at("metal").members, (std::vector<std::string>{"metal", "heavy"}));
    EXPECT_THROW(parse_concept_library("concept: ~a (x)\nTopic: ~t (a)\nt: hi\n"), ParseError);
}

TEST(Parser, CommentsAndBlankLinesAreSkipped) {
    auto s = parse_script("|| head\n\n# hash\nTopic: ~t (x)\n   || indented comment\nt: Hi.\n");
    ASSERT_EQ(s.topics.size(), 1u);
    EXPECT_EQ(s.topics[0].rules.size(), 1u);
}

struct BadCase {
    const char* source;
    std::size_t line;
    std::size_t column;
    const char* message_part;
};

class ParserErrors : public ::testing::TestWithParam<BadCase> {};

TEST_P(ParserErrors, ReportLineAndColumn) {
    const auto& c = GetParam();
    try {
        parse_script(c.source);
        FAIL() << "parsed: " << c.source;
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), c.line) << e.what();
        EXPECT_EQ(e.column(), c.column) << e.what();
        EXPECT_NE(std::string(e.what()).find(c.message_part), std::string::npos) << e.what();
        EXPECT_EQ(e.kind(), coachai::ErrorKind::parse);
    }
}

INSTANTIATE_TEST_SUITE_P(
    Seeded, ParserErrors,
    ::testing::Values(BadCase{"", 1, 1, "empty script"},
                      BadCase{"hello there\nTopic: ~t (x)\nt: hi\n", 1, 1, "expected a directive"},
                      BadCase{"concept: ~a (x)\n", 1, 1, "no topics"},
                      BadCase{"Topic: ~t (x)\nt: hi\n?: (what ~nope) eh\n", 3, 10, "undefined concept ~nope"},
                      BadCase{"Topic: ~t (x)\nt: hi\n  a: (yes unclosed\n", 3, 19, "unterminated pattern"},
                      BadCase{"Topic: ~t (x)\nt: hi\n?: (<< a b ) no\n", 3, 12, "'<<' without matching '>>'"},
                      BadCase{"Topic: ~t (x)\nt: hi\ns: () hm\n", 3, 6, "empty pattern"},
                      BadCase{"Topic: ~t (x)\n?: no pattern here\n", 2, 1, "responders need a pattern"},
                      BadCase{"Topic: ~t (x)\nTopic: ~u (y)\nt: hi\n", 1, 1, "topic ~t has no rules"},
                      BadCase{"Topic: ~t (x)\nt: hi\nTopic: ~t (y)\nt: yo\n", 3, 1, "duplicate topic ~t"},
                      BadCase{"concept: ~a (x)\nconcept: ~a (y)\nTopic: ~t (a)\nt: hi\n", 2, 1, "duplicate concept ~a"},
                      BadCase{"a: (x) hi\nTopic: ~t (x)\nt: hi\n", 1, 1, "rejoinder without a preceding rule"},
                      BadCase{"t: hi\nTopic: ~t (x)\nt: hi\n", 1, 1, "rule outside of a topic"},
                      BadCase{"concept: ~a ()\nTopic: ~t (a)\nt: hi\n", 1, 15, "has no members"},
                      BadCase{"Topic: ~t (x)\nt: hi\n  a: yes\n", 3, 6, "rejoinders need a pattern"},
                      BadCase{"Topic: ~t (x)\nt: hi\ns: (a\n  b > c) x\n", 4, 5, "unexpected '>'"}));
