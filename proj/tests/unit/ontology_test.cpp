#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "coachai/error.hpp"
#include "coachai/ontology.hpp"
#include "coachai/sim/oracles.hpp"
#include "support/test_support.hpp"

using namespace coachai;

namespace {

const ActivityOntology& starter() {
    static const auto o = load_ontology_file(coachai::testing::data_path("starter_ontology.json"));
    return o;
}

std::vector<std::string> all_ids(const ActivityOntology& o) {
    std::vector<std::string> ids;
    for (const auto& a : o.activities()) ids.push_back(a.id);
    return ids;
}

// Pairwise recomputation of the greedy contract: each kept item is far from
// every earlier kept item, each dropped item is close to one of them.
void check_greedy(const std::vector<std::string>& input, const std::vector<std::string>& kept, double threshold,
                  const ActivityOntology& o) {
    std::vector<std::string> expect;
    for (const auto& id : input) {
        bool close = false;
        for (const auto& k : expect) {
            const double d = sim::oracle::activity_distance(id, k, o);
            close = close || d < threshold || d == 0.0;
        }
        if (!close) expect.push_back(id);
    }
    EXPECT_EQ(kept, expect);
}

}  // namespace

TEST(LoadOntology, MinimalDocument) {
    auto o = load_ontology(R"({"categories":{"name":"root","children":[{"name":"cardio"}]},
        "activities":[{"id":"walk","name":"Walk","category_path":["root","cardio"],"met":3.5,
        "typical_duration_min":30,"indoor":false}]})");
    EXPECT_EQ(o.size(), 1u);
    EXPECT_EQ(o.height(), 1u);
    EXPECT_EQ(o.weights(), DistanceWeights{});
}

TEST(LoadOntology, DuplicateIdIsRejected) {
    try {
        load_ontology(R"({"categories":{"name":"root"},"activities":[
            {"id":"walk","category_path":["root"],"met":3,"typical_duration_min":30},
            {"id":"walk","category_path":["root"],"met":4,"typical_duration_min":20}]})");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::validation);
        EXPECT_NE(std::string(e.what()).find("walk"), std::string::npos);
    }
}

TEST(LoadOntology, StarterFixtureCounts) {
    const auto& o = starter();
    EXPECT_EQ(o.size(), 12u);
    EXPECT_EQ(o.height(), 3u);
    std::set<std::string> top;
    for (const auto& c : o.tree().children) top.insert(c.name);
    EXPECT_EQ(top, (std::set<std::string>{"cardio", "strength", "flexibility"}));
}

TEST(LoadOntology, ValidationErrors) {
    const std::string cats = R"("categories":{"name":"root","children":[{"name":"cardio"}]})";
    auto bad = [&](const std::string& activities, const std::string& extra = "") {
        return "{" + cats + ",\"activities\":[" + activities + "]" + extra + "}";
    };
    EXPECT_THROW(load_ontology(bad(R"({"id":"a","category_path":["root","nope"],"met":3,"typical_duration_min":5})")),
                 Error);
    EXPECT_THROW(load_ontology(bad(R"({"id":"a","category_path":["root"],"met":0,"typical_duration_min":5})")), Error);
    EXPECT_THROW(load_ontology(bad(R"({"id":"a","category_path":["root"],"met":2,"typical_duration_min":0})")), Error);
    EXPECT_THROW(load_ontology(bad(R"({"id":"a","category_path":["root"],"met":2,"typical_duration_min":5})",
                                   R"(,"weights":{"tree":0.5,"met":0.5,"duration":0.5})")),
                 Error);
    EXPECT_THROW(load_ontology(R"({"categories":{"name":"root","children":[{"name":"x"},{"name":"x"}]},
        "activities":[]})"),
                 Error);
}

TEST(LoadOntology, StringCategoryPath) {
    auto o = load_ontology(R"({"categories":{"name":"root","children":[{"name":"cardio"}]},
        "activities":[{"id":"walk","category_path":"root/cardio","met":3.5,"typical_duration_min":30}]})");
    EXPECT_EQ(o.at("walk").category_path, (std::vector<std::string>{"root", "cardio"}));
}

TEST(LoadOntology, ParseErrorReportsPosition) {
    try {
        load_ontology("{\n  \"categories\": {\n    \"name\": \"root\",,\n  }\n}");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::parse);
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
    }
}

TEST(LoadOntology, SerializeReloadIsIdentity) {
    const auto& o = starter();
    auto again = ActivityOntology::from_document(o.to_document());
    EXPECT_EQ(again, o);
    EXPECT_EQ(load_ontology(o.to_document().dump()), o);
}

TEST(ActivityDistance, Identity) {
    for (const auto& a : starter().activities()) EXPECT_EQ(activity_distance(a, a, starter()), 0.0);
}

TEST(ActivityDistance, MetExtremesWithMetOnlyWeights) {
    auto o = load_ontology(R"({"categories":{"name":"root"},"weights":{"tree":0,"met":1,"duration":0},
        "activities":[{"id":"easy","category_path":["root"],"met":2,"typical_duration_min":30},
                      {"id":"mid","category_path":["root"],"met":5,"typical_duration_min":30},
                      {"id":"hard","category_path":["root"],"met":8,"typical_duration_min":30}]})");
    EXPECT_DOUBLE_EQ(activity_distance("easy", "hard", o), 1.0);
    EXPECT_DOUBLE_EQ(activity_distance("easy", "mid", o), 0.5);
}

TEST(ActivityDistance, ZeroRangeTermsVanish) {
    auto o = load_ontology(R"({"categories":{"name":"root","children":[{"name":"a"},{"name":"b"}]},
        "activities":[{"id":"x","category_path":["root","a"],"met":3,"typical_duration_min":30},
                      {"id":"y","category_path":["root","b"],"met":3,"typical_duration_min":30}]})");
    // two hops over a height-1 tree, tree weight 0.5
    EXPECT_DOUBLE_EQ(activity_distance("x", "y", o), 0.5);
}

TEST(ActivityDistance, UnknownActivityIsAnError) {
    EXPECT_THROW(activity_distance("brisk_walk", "skydiving", starter()), Error);
}

// Independent recomputation from the raw document fields.
TEST(ActivityDistance, MatchesNaiveRecomputation) {
    const auto ids = all_ids(starter());
    std::mt19937_64 rng(23);
    for (int t = 0; t < 200; ++t) {
        const auto& a = ids[rng() % ids.size()];
        const auto& b = ids[rng() % ids.size()];
        EXPECT_NEAR(activity_distance(a, b, starter()), sim::oracle::activity_distance(a, b, starter()), 1e-12);
    }
}

TEST(ActivityDistance, SymmetricAndBounded) {
    const auto& o = starter();
    for (const auto& a : o.activities())
        for (const auto& b : o.activities()) {
            const double d = activity_distance(a, b, o);
            EXPECT_EQ(d, activity_distance(b, a, o));
            EXPECT_GE(d, 0.0);
            EXPECT_LE(d, 1.0);
        }
}

TEST(EliminateSimilar, ZeroThresholdDropsOnlyExactDuplicates) {
    std::vector<std::string> in = {"jog", "brisk_walk", "jog", "tai_chi", "brisk_walk"};
    EXPECT_EQ(eliminate_similar(in, 0.0, starter()), (std::vector<std::string>{"jog", "brisk_walk", "tai_chi"}));
}

TEST(EliminateSimilar, TwoCopiesKeepOne) {
    std::vector<std::string> in = {"lap_swim", "lap_swim"};
    EXPECT_EQ(eliminate_similar(in, 0.15, starter()), std::vector<std::string>{"lap_swim"});
}

TEST(EliminateSimilar, SixCandidatesAgainstPairwiseCheck) {
    std::vector<std::string> in = {"brisk_walk", "nordic_walk", "jog", "interval_run", "hatha_yoga", "tai_chi"};
    const auto kept = eliminate_similar(in, 0.2, starter());
    check_greedy(in, kept, 0.2, starter());
    for (const auto& id : in) {
        if (std::find(kept.begin(), kept.end(), id) != kept.end()) continue;
        bool within = false;
        for (const auto& k : kept) within = within || activity_distance(id, k, starter()) < 0.2;
        EXPECT_TRUE(within) << id;
    }
}

TEST(EliminateSimilar, ThresholdOutOfRangeIsAnError) {
    std::vector<std::string> in = {"jog"};
    EXPECT_THROW(eliminate_similar(in, -0.1, starter()), Error);
    EXPECT_THROW(eliminate_similar(in, 1.5, starter()), Error);
}

TEST(EliminateSimilar, RandomInputsKeepASpreadSubsequence) {
    const auto ids = all_ids(starter());
    std::mt19937_64 rng(29);
    std::uniform_real_distribution<double> u(0.0, 0.6);
    for (int t = 0; t < 300; ++t) {
        std::vector<std::string> in;
        const int len = static_cast<int>(rng() % 9);
        for (int i = 0; i < len; ++i) in.push_back(ids[rng() % ids.size()]);
        const double th = u(rng);
        const auto kept = eliminate_similar(in, th, starter());
        check_greedy(in, kept, th, starter());
        // subsequence of the input
        std::size_t pos = 0;
        for (const auto& k : kept) {
            while (pos < in.size() && in[pos] != k) ++pos;
            ASSERT_LT(pos, in.size());
            ++pos;
        }
        for (std::size_t i = 0; i < kept.size(); ++i)
            for (std::size_t j = i + 1; j < kept.size(); ++j)
                EXPECT_GE(activity_distance(kept[i], kept[j], starter()), th);
    }
}
