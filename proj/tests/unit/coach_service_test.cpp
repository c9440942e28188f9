#include <gtest/gtest.h>

#include <thread>

#include "coachai/error.hpp"
#include "coachai/service/coach_service.hpp"
#include "support/test_support.hpp"

using namespace coachai;
using namespace coachai::service;
using coachai::testing::data_path;
using coachai::testing::make_profile;
using coachai::testing::record;
using coachai::testing::TempDir;

namespace {

ServiceConfig base_config() {
    auto cfg = ServiceConfig::load(data_path("config.json"));
    cfg.data_dir.clear();
    cfg.fsync = false;
    return cfg;
}

ErrorKind kind_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "no error thrown";
    return ErrorKind::io;
}

struct Fixture : ::testing::Test {
    std::shared_ptr<LoopbackSink> sink = std::make_shared<LoopbackSink>();
    std::unique_ptr<CoachService> svc;

    void SetUp() override { svc = make(Store{}); }

    std::unique_ptr<CoachService> make(Store store) {
        auto cfg = base_config();
        return std::make_unique<CoachService>(cfg, Resources::load(cfg), std::move(store),
                                              logical_clock(1'700'000'000'000, 1000), sink);
    }

    // Three HIGH walkers, three LOW swimmers, three MEDIUM yogis.
    void seed_population(CoachService& s) {
        const char* acts[] = {"brisk_walk", "lap_swim", "hatha_yoga"};
        const int done[] = {10, 1, 5};
        for (int band = 0; band < 3; ++band) {
            for (int i = 0; i < 3; ++i) {
                auto p = make_profile("x", 22 + band * 4 + i, 0.3 * band, 7, 0.5, "teacher", 30 + 10 * band + i);
                p.external_ref = "seed-" + std::to_string(band) + "-" + std::to_string(i);
                for (int k = 0; k < 10; ++k) p.adherence_history.push_back(record(acts[band], k, k < done[band]));
                s.import_patient(p);
            }
        }
    }

    std::string register_and_intake(CoachService& s, const std::string& ref) {
        Registration r;
        r.external_ref = ref;
        r.name = "Sam";
        auto res = s.register_patient(r);
        for (const char* reply : {"44", "27", "mixed", "6.5", "light", "clerk"})
            s.chat_webhook({res.session_key, reply, 0});
        return res.patient_id;
    }
};

}  // namespace

TEST_F(Fixture, RegistrationStartsIntake) {
    Registration r;
    r.external_ref = "ext-1";
    r.name = "Ana";
    auto res = svc->register_patient(r);
    EXPECT_EQ(res.patient_id, "p-000001");
    EXPECT_EQ(res.session_key, "chat-p-000001");
    EXPECT_NE(res.first_message.text.find("How old are you?"), std::string::npos);
    EXPECT_EQ(svc->get_session(res.patient_id).phase, dialogue::Phase::intake);
    EXPECT_EQ(kind_of([&] { svc->register_patient(r); }), ErrorKind::conflict);
    r.external_ref = "";
    EXPECT_EQ(kind_of([&] { svc->register_patient(r); }), ErrorKind::validation);
}

TEST_F(Fixture, ProvidedFieldsSkipTheirQuestions) {
    Registration r;
    r.external_ref = "ext-2";
    r.name = "Bo";
    r.age = 50;
    r.bmi = 23;
    auto res = svc->register_patient(r);
    EXPECT_NE(res.first_message.text.find("diet"), std::string::npos);
}

TEST_F(Fixture, FullyProvidedRegistrationIsIdleAtOnce) {
    Registration r;
    r.external_ref = "ext-3";
    r.name = "Cy";
    r.age = 50;
    r.bmi = 23;
    r.diet_score = 0.5;
    r.sleep_hours = 7;
    r.activity_level = 0.5;
    r.profession = "nurse";
    auto res = svc->register_patient(r);
    EXPECT_TRUE(svc->get_patient(res.patient_id).complete());
    // Only the closing line is left, so intake finishes on the first reply.
    svc->chat_webhook({res.session_key, "ok", 0});
    EXPECT_EQ(svc->get_session(res.patient_id).phase, dialogue::Phase::idle);
}

TEST_F(Fixture, IntakeConversationCompletesProfile) {
    const auto id = register_and_intake(*svc, "ext-4");
    const auto p = svc->get_patient(id);
    EXPECT_TRUE(p.complete());
    EXPECT_EQ(p.age, 44.0);
    EXPECT_EQ(p.diet_score, 0.5);
    EXPECT_EQ(p.profession, "clerk");
    EXPECT_EQ(svc->get_session(id).phase, dialogue::Phase::idle);
    ASSERT_EQ(svc->notifications().size(), 1u);
    EXPECT_EQ(svc->notifications()[0].kind, "intake_complete");
}

TEST_F(Fixture, BadAnswerIsAskedAgain) {
    Registration r;
    r.external_ref = "ext-5";
    r.name = "Di";
    auto res = svc->register_patient(r);
    // The rejected answer's question comes back once the next one is answered.
    auto out = svc->chat_webhook({res.session_key, "forty", 0});
    EXPECT_NE(out.text.find("BMI"), std::string::npos) << out.text;
    out = svc->chat_webhook({res.session_key, "25", 0});
    EXPECT_NE(out.text.find("How old are you?"), std::string::npos) << out.text;
    out = svc->chat_webhook({res.session_key, "400", 0});
    EXPECT_FALSE(svc->get_patient(res.patient_id).age);
    out = svc->chat_webhook({res.session_key, "healthy", 0});
    EXPECT_NE(out.text.find("How old are you?"), std::string::npos) << out.text;
    svc->chat_webhook({res.session_key, "40", 0});
    EXPECT_EQ(svc->get_patient(res.patient_id).age, 40.0);
}

TEST_F(Fixture, ChatErrors) {
    EXPECT_EQ(kind_of([&] { svc->chat_webhook({"chat-nobody", "hi", 0}); }), ErrorKind::not_found);
    Registration r;
    r.external_ref = "ext-6";
    r.name = "Ed";
    auto res = svc->register_patient(r);
    EXPECT_EQ(kind_of([&] { svc->chat_webhook({res.session_key, "", 0}); }), ErrorKind::validation);
}

TEST_F(Fixture, RecommendationNeedsCompleteProfile) {
    seed_population(*svc);
    Registration r;
    r.external_ref = "ext-7";
    r.name = "Fa";
    auto res = svc->register_patient(r);
    EXPECT_EQ(kind_of([&] { svc->get_recommendations(res.patient_id); }), ErrorKind::validation);
    EXPECT_EQ(kind_of([&] { svc->get_recommendations("p-999999"); }), ErrorKind::not_found);
}

TEST_F(Fixture, FullLoopAcceptThenFeedback) {
    seed_population(*svc);
    const auto id = register_and_intake(*svc, "ext-8");
    auto rc = svc->get_recommendations(id);
    EXPECT_EQ(rc.status, CaseStatus::pending);
    ASSERT_FALSE(rc.candidates.empty());
    auto walk = std::find_if(rc.candidates.begin(), rc.candidates.end(),
                             [](const Candidate& c) { return c.activity_id == "brisk_walk"; });
    ASSERT_NE(walk, rc.candidates.end());
    EXPECT_EQ(walk->provenance, Provenance::high_adherence);
    for (std::size_t i = 1; i < rc.candidates.size(); ++i)
        EXPECT_GE(rc.candidates[i - 1].support_count, rc.candidates[i].support_count);
    // Asking again returns the same open case.
    EXPECT_EQ(svc->get_recommendations(id).id, rc.id);

    EXPECT_EQ(kind_of([&] { svc->decide(rc.id, Decision::accept, std::nullopt, std::nullopt); }),
              ErrorKind::validation);
    EXPECT_EQ(kind_of([&] { svc->decide(rc.id, Decision::accept, "free_weights", std::nullopt); }),
              ErrorKind::validation);
    sink->drain();
    auto decided = svc->decide(rc.id, Decision::accept, "brisk_walk", "Start gently.");
    EXPECT_EQ(decided.status, CaseStatus::accepted);
    EXPECT_EQ(kind_of([&] { svc->decide(rc.id, Decision::reject, std::nullopt, std::nullopt); }),
              ErrorKind::conflict);
    auto sent = sink->drain();
    ASSERT_EQ(sent.size(), 1u);
    EXPECT_NE(sent[0].text.find("Brisk"), std::string::npos) << sent[0].text;
    EXPECT_NE(sent[0].text.find("Start gently."), std::string::npos);

    auto p = svc->get_patient(id);
    ASSERT_EQ(p.adherence_history.size(), 1u);
    EXPECT_TRUE(p.adherence_history[0].pending);
    ASSERT_EQ(svc->decision_log().size(), 1u);
    EXPECT_EQ(svc->decision_log()[0].seq, 1u);

    auto q = svc->request_feedback(id);
    EXPECT_NE(q.text.find("complete"), std::string::npos);
    EXPECT_EQ(kind_of([&] { svc->request_feedback(id); }), ErrorKind::conflict);
    const auto key = CoachService::session_key_for(id);
    svc->chat_webhook({key, "yes", 0});
    svc->chat_webhook({key, "5", 0});
    svc->chat_webhook({key, "felt great", 0});
    p = svc->get_patient(id);
    EXPECT_FALSE(p.adherence_history[0].pending);
    EXPECT_TRUE(p.adherence_history[0].completed);
    EXPECT_EQ(p.adherence_history[0].motivation_rating, 5);
    EXPECT_EQ(p.adherence_history[0].feedback_text, "felt great");
    EXPECT_EQ(svc->get_session(id).phase, dialogue::Phase::idle);
    EXPECT_EQ(svc->notifications().back().kind, "feedback");
    EXPECT_NO_THROW(svc->check_integrity());
}

TEST_F(Fixture, RejectClosesTheCase) {
    seed_population(*svc);
    const auto id = register_and_intake(*svc, "ext-9");
    auto rc = svc->get_recommendations(id);
    auto d = svc->decide(rc.id, Decision::reject, std::nullopt, "not now");
    EXPECT_EQ(d.status, CaseStatus::rejected);
    EXPECT_TRUE(svc->get_patient(id).adherence_history.empty());
    EXPECT_EQ(kind_of([&] { svc->request_feedback(id); }), ErrorKind::conflict);
    EXPECT_NE(svc->get_recommendations(id).id, rc.id);
    EXPECT_EQ(svc->list_cases(CaseStatus::rejected).size(), 1u);
    EXPECT_EQ(kind_of([&] { svc->decide("case-nope", Decision::reject, std::nullopt, std::nullopt); }),
              ErrorKind::not_found);
}

TEST_F(Fixture, OpenAssignmentBlocksSecondAccept) {
    seed_population(*svc);
    const auto id = register_and_intake(*svc, "ext-10");
    auto rc = svc->get_recommendations(id);
    svc->decide(rc.id, Decision::accept, rc.candidates[0].activity_id, std::nullopt);
    auto rc2 = svc->get_recommendations(id);
    EXPECT_EQ(kind_of([&] { svc->decide(rc2.id, Decision::accept, rc2.candidates[0].activity_id, std::nullopt); }),
              ErrorKind::conflict);
}

TEST_F(Fixture, ColdStartCaseNeedsManualAssignment) {
    auto p = make_profile("x", 25, 0.5, 7, 0.5, "teacher", 40);
    p.external_ref = "lonely";
    svc->import_patient(p);
    const auto id = register_and_intake(*svc, "ext-11");
    auto rc = svc->get_recommendations(id);
    EXPECT_TRUE(rc.candidates.empty());
    EXPECT_NE(std::find(rc.flags.begin(), rc.flags.end(), "cold_start"), rc.flags.end());
}

TEST_F(Fixture, SnapshotRefreshesOnlyWhenStale) {
    seed_population(*svc);
    EXPECT_EQ(kind_of([&] {
                  auto empty = make(Store{});
                  empty->refresh_models();
              }),
              ErrorKind::invalid_argument);
    const auto a = register_and_intake(*svc, "ext-12");
    const auto b = register_and_intake(*svc, "ext-13");
    auto ca = svc->get_recommendations(a);
    auto cb = svc->get_recommendations(b);
    EXPECT_EQ(ca.snapshot_id, cb.snapshot_id);
    // Accepting adds a pending record only; still fresh.
    svc->decide(ca.id, Decision::accept, ca.candidates[0].activity_id, std::nullopt);
    svc->decide(cb.id, Decision::reject, std::nullopt, std::nullopt);
    EXPECT_EQ(svc->get_recommendations(b).snapshot_id, ca.snapshot_id);
    svc->request_feedback(a);
    for (const char* reply : {"no", "2", "rain"}) svc->chat_webhook({CoachService::session_key_for(a), reply, 0});
    const auto latest = svc->latest_snapshot();
    ASSERT_TRUE(latest);
    EXPECT_EQ(latest->id, ca.snapshot_id);
    auto again = svc->get_recommendations(a);
    EXPECT_NE(again.snapshot_id, ca.snapshot_id);
    EXPECT_EQ(svc->latest_snapshot()->record_counts.at(a), 1u);
}

TEST_F(Fixture, ImportValidatesActivities) {
    auto p = make_profile("x", 25, 0.5, 7, 0.5, "teacher", 40);
    p.adherence_history.push_back(record("skydiving", 0, true));
    EXPECT_EQ(kind_of([&] { svc->import_patient(p); }), ErrorKind::validation);
}

TEST_F(Fixture, PersistentServiceReopensToSameState) {
    TempDir d;
    auto cfg = base_config();
    cfg.data_dir = d.path();
    nlohmann::json before;
    {
        auto s = CoachService::open(cfg, logical_clock(0, 1000));
        seed_population(*s);
        const auto id = register_and_intake(*s, "ext-14");
        auto rc = s->get_recommendations(id);
        s->decide(rc.id, Decision::accept, rc.candidates[0].activity_id, std::nullopt);
        before = s->dump_state();
    }
    auto s = CoachService::open(cfg, logical_clock(0, 1000));
    EXPECT_EQ(s->dump_state(), before);
    EXPECT_NO_THROW(s->check_integrity());
    s->compact();
    EXPECT_EQ(s->dump_state(), before);
}

TEST_F(Fixture, ConcurrentChatsKeepIntegrity) {
    seed_population(*svc);
    std::vector<std::string> keys;
    for (int i = 0; i < 8; ++i) {
        Registration r;
        r.external_ref = "conc-" + std::to_string(i);
        r.name = "N";
        keys.push_back(svc->register_patient(r).session_key);
    }
    std::vector<std::thread> threads;
    for (const auto& key : keys) {
        threads.emplace_back([&, key] {
            for (const char* reply : {"30", "22", "healthy", "8", "active", "nurse"}) svc->chat_webhook({key, reply, 0});
            svc->get_recommendations(key.substr(5));
        });
    }
    for (auto& t : threads) t.join();
    EXPECT_NO_THROW(svc->check_integrity());
    EXPECT_EQ(svc->list_cases(CaseStatus::pending).size(), 8u);
}

TEST(ServiceJson, DecisionAndSnapshotRoundTrip) {
    DecisionLogEntry e{3, "case-1", "p-1", Decision::reject, std::nullopt, "meh", 99};
    nlohmann::json j = e;
    EXPECT_EQ(j["decision"], "REJECT");
    auto back = j.get<DecisionLogEntry>();
    EXPECT_EQ(back.seq, 3u);
    EXPECT_EQ(back.note, "meh");
    EXPECT_FALSE(back.activity_id);
    EXPECT_THROW(decision_from_string("MAYBE"), Error);
    auto reg = nlohmann::json{{"external_ref", "a"}, {"name", "b"}, {"age", "old"}};
    EXPECT_THROW(reg.get<Registration>(), Error);
}
