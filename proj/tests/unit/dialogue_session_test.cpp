#include <gtest/gtest.h>

#include <random>

#include "coachai/dialogue/session.hpp"
#include "support/test_support.hpp"

using namespace coachai::dialogue;
using coachai::testing::data_path;
using coachai::testing::fixture_path;
using coachai::testing::read_file;

namespace {

const ConceptLibrary& lib() {
    static const auto l = parse_concept_library(read_file(data_path("paper_concepts.lib")));
    return l;
}

const DialogueScript& food() {
    static const auto s = parse_script(read_file(data_path("paper_food.script")), lib());
    return s;
}

const DialogueScript& coach() {
    static const auto s = parse_script(read_file(data_path("coach.script")), lib());
    return s;
}

const DialogueScript& five() {
    static const auto s = parse_script(read_file(fixture_path("five_topics.script")));
    return s;
}

Session food_session() {
    Session s;
    s.patient_id = "p";
    return begin_topic(s, food(), "food", Phase::idle, 0).session;
}

}  // namespace

TEST(Session, FoodGambitOpens) {
    Session s;
    auto t = begin_topic(s, food(), "~food", Phase::idle, 5);
    EXPECT_EQ(t.response, "What is your favorite food?");
    ASSERT_EQ(t.session.transcript.size(), 1u);
    EXPECT_EQ(t.session.transcript[0].speaker, Speaker::bot);
    EXPECT_EQ(t.session.transcript[0].at, 5);
    EXPECT_EQ(t.session.pending, (RuleRef{"food", 0}));
}

TEST(Session, FruitRejoinder) {
    auto t = advance(food_session(), "i love fruit", food(), 1);
    EXPECT_EQ(t.response, "I like fruit also.");
    EXPECT_FALSE(t.session.pending);
}

TEST(Session, MetalRejoinder) {
    auto t = advance(food_session(), "Heavy metal, obviously!", food(), 1);
    EXPECT_EQ(t.response, "I prefer listening to heavy metal music rather than eating it.");
}

TEST(Session, MusicQuestion) {
    auto t = advance(food_session(), "what music do you like", food(), 1);
    EXPECT_EQ(t.response, "I prefer rock music.");
}

TEST(Session, SilentResponderCapturesThenFallsBack) {
    auto s = advance(food_session(), "i love fruit", food(), 1).session;
    auto t = advance(s, "I always enjoy some good jazz", food(), 2);
    EXPECT_EQ(t.session.captures.at("music_types"), "jazz");
    EXPECT_EQ(t.response, DialogueOptions{}.fallback_line);
}

TEST(Session, UnmatchedInputGetsFallback) {
    auto t = advance(food_session(), "zebra", food(), 1);
    EXPECT_EQ(t.response, DialogueOptions{}.fallback_line);
    EXPECT_EQ(t.session.transcript.size(), 3u);
}

TEST(Session, RejoinderBeforeResponders) {
    Session s;
    s = begin_topic(s, five(), "animals", Phase::idle, 0).session;
    auto t = advance(s, "a canary", five(), 1);
    EXPECT_EQ(t.response, "Lovely, a _pets.");
    EXPECT_EQ(t.session.captures.at("pets"), "canary");
}

TEST(Session, OtherTopicResponderSwitchesTopic) {
    Session s;
    s = begin_topic(s, five(), "animals", Phase::idle, 0).session;
    auto t = advance(s, "is it raining today", five(), 1);
    EXPECT_EQ(t.response, "Hopefully not.");
    EXPECT_EQ(t.session.current_topic, "smalltalk");
}

TEST(Session, NextGambitWhenNothingMatches) {
    Session s;
    s = begin_topic(s, five(), "schedule", Phase::idle, 0).session;
    s = advance(s, "never", five(), 1).session;
    EXPECT_EQ(s.transcript.back().text, "And what time of day?");
}

TEST(Session, StructuredPhaseChainsAndStaysHome) {
    Session s;
    s = begin_topic(s, coach(), "intake", Phase::intake, 0).session;
    auto t = advance(s, "I'm 41", coach(), 1);
    EXPECT_EQ(t.response, "Thanks. What is your BMI? Just the number is fine.");
    EXPECT_EQ(t.session.intake_answers.at("age"), "41");
    // A side question answered by another topic, then back to the intake.
    t = advance(t.session, "who are you", coach(), 2);
    EXPECT_EQ(t.session.home_topic, "intake");
    EXPECT_EQ(t.response.rfind("I am your virtual coach.", 0), 0u);
    EXPECT_NE(t.response.find("How would you describe your diet"), std::string::npos);
}

TEST(Session, FullIntakeExhaustsTopic) {
    Session s;
    s = begin_topic(s, coach(), "intake", Phase::intake, 0).session;
    for (const char* reply : {"41", "24.5", "balanced", "7", "moderate", "teacher"}) {
        EXPECT_FALSE(topic_exhausted(s, coach()));
        s = advance(s, reply, coach(), 1).session;
    }
    EXPECT_TRUE(topic_exhausted(s, coach()));
    EXPECT_EQ(s.intake_answers.size(), 6u);
    EXPECT_EQ(s.intake_answers.at("profession"), "teacher");
}

TEST(Session, SkipLabelsStartFired) {
    Session s;
    auto t = begin_topic(s, coach(), "intake", Phase::intake, 0, {}, {"AGE", "BMI"});
    EXPECT_NE(t.response.find("diet"), std::string::npos);
}

TEST(Session, RequeueAsksAgain) {
    Session s;
    s = begin_topic(s, coach(), "intake", Phase::intake, 0).session;
    s = advance(s, "41", coach(), 1).session;
    ASSERT_TRUE(requeue_gambit(s, coach(), "AGE"));
    EXPECT_FALSE(requeue_gambit(s, coach(), "NOPE"));
    // Answer BMI; the next gambit is AGE again, since it is first.
    auto t = advance(s, "24", coach(), 2);
    EXPECT_NE(t.response.find("How old are you?"), std::string::npos);
}

TEST(Session, Transitions) {
    Session s;
    s.phase = Phase::intake;
    EXPECT_THROW(transition(s, Phase::feedback), coachai::Error);
    transition(s, Phase::idle);
    transition(s, Phase::feedback);
    EXPECT_THROW(transition(s, Phase::intake), coachai::Error);
    transition(s, Phase::idle);
    EXPECT_THROW(transition(s, Phase::idle), coachai::Error);
}

TEST(Session, BeginUnknownTopicIsNotFound) {
    try {
        begin_topic(Session{}, food(), "nope", Phase::idle, 0);
        FAIL();
    } catch (const coachai::Error& e) {
        EXPECT_EQ(e.kind(), coachai::ErrorKind::not_found);
    }
}

// Any sequence of inputs leaves a session that survives JSON and whose
// transcript grows by two per turn.
TEST(Session, RandomConversationsRoundTripJson) {
    std::mt19937_64 rng(3);
    const std::vector<std::string> inputs = {"yes", "no", "42", "hello", "who are you", "healthy diet",
                                             "i love fruit", "", "3", "teacher", "what music do you like"};
    for (int t = 0; t < 40; ++t) {
        Session s;
        s.patient_id = "p" + std::to_string(t);
        s = begin_topic(s, coach(), rng() % 2 ? "intake" : "feedback", rng() % 2 ? Phase::intake : Phase::feedback, 0)
                .session;
        for (int i = 0; i < 15; ++i) {
            const auto before = s.transcript.size();
            s = advance(s, inputs[rng() % inputs.size()], coach(), i + 1).session;
            ASSERT_EQ(s.transcript.size(), before + 2);
            nlohmann::json j = s;
            ASSERT_EQ(j.get<Session>(), s);
        }
    }
}
