#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "coachai/clustering.hpp"
#include "coachai/error.hpp"
#include "coachai/sim/oracles.hpp"

using namespace coachai;
namespace oracle = coachai::sim::oracle;

namespace {

std::vector<FeatureVector> random_points(std::mt19937_64& rng, std::size_t n, std::size_t d) {
    std::normal_distribution<double> g;
    std::vector<FeatureVector> pts(n, FeatureVector(d));
    for (auto& p : pts)
        for (auto& v : p) v = g(rng);
    return pts;
}

std::vector<Band> random_bands(std::mt19937_64& rng, std::size_t n) {
    std::vector<Band> b;
    for (std::size_t i = 0; i < n; ++i) b.push_back(kBands[rng() % 3]);
    return b;
}

double naive_distance(const FeatureVector& a, const FeatureVector& b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

std::set<std::set<std::size_t>> as_partition(const std::vector<std::size_t>& labels,
                                            const std::vector<std::size_t>& ids) {
    std::map<std::size_t, std::set<std::size_t>> groups;
    for (std::size_t i = 0; i < labels.size(); ++i) groups[labels[i]].insert(ids[i]);
    std::set<std::set<std::size_t>> out;
    for (auto& [l, g] : groups) out.insert(g);
    return out;
}

void expect_fixed_point(const std::vector<FeatureVector>& pts, const ClusterModel& m) {
    EXPECT_EQ(oracle::nearest(pts, m.centroids), m.labels);
    const auto means = oracle::member_means(pts, m.labels, m.k());
    for (std::size_t c = 0; c < m.k(); ++c) {
        ASSERT_FALSE(means[c].empty()) << "cluster " << c << " is empty";
        for (std::size_t j = 0; j < means[c].size(); ++j) EXPECT_NEAR(m.centroids[c][j], means[c][j], 1e-9);
    }
}

}  // namespace

TEST(Distance, Identity) {
    FeatureVector x = {1.5, -2, 3};
    EXPECT_EQ(euclidean_distance(x, x), 0.0);
}

TEST(Distance, ThreeFourFive) { EXPECT_DOUBLE_EQ(euclidean_distance(FeatureVector{0, 0}, FeatureVector{3, 4}), 5.0); }

TEST(Distance, MatchesNaiveLoop) {
    std::mt19937_64 rng(1);
    for (int i = 0; i < 100; ++i) {
        auto p = random_points(rng, 2, 6);
        EXPECT_NEAR(euclidean_distance(p[0], p[1]), naive_distance(p[0], p[1]), 1e-12);
        EXPECT_EQ(euclidean_distance(p[0], p[1]), euclidean_distance(p[1], p[0]));
    }
}

TEST(Distance, DimensionMismatchThrows) {
    EXPECT_THROW(euclidean_distance(FeatureVector{1, 2}, FeatureVector{1}), Error);
}

TEST(Seeding, SingleBandOneCentroidIsPopulationMean) {
    std::vector<FeatureVector> pts = {{0, 0}, {2, 4}, {4, 2}};
    std::vector<Band> bands(3, Band::high);
    auto c = seed_centroids(pts, bands, {1, 100, SeedMode::adherence_bands});
    ASSERT_EQ(c.size(), 1u);
    EXPECT_DOUBLE_EQ(c[0][0], 2.0);
    EXPECT_DOUBLE_EQ(c[0][1], 2.0);
}

TEST(Seeding, SingletonBandsGiveTheirPatients) {
    std::vector<FeatureVector> pts = {{1, 1}, {7, -3}};
    std::vector<Band> bands = {Band::high, Band::low};
    auto c = seed_centroids(pts, bands, {2, 100, SeedMode::adherence_bands});
    EXPECT_EQ(c, (std::vector<FeatureVector>{{1, 1}, {7, -3}}));
}

// Per-band means recomputed independently.
TEST(Seeding, ThreeBandsGiveBandMeans) {
    std::mt19937_64 rng(3);
    auto pts = random_points(rng, 10, 6);
    std::vector<Band> bands = {Band::high, Band::low, Band::medium, Band::high, Band::medium,
                               Band::low,  Band::low, Band::high,   Band::medium, Band::high};
    auto c = seed_centroids(pts, bands, {3, 100, SeedMode::adherence_bands});
    ASSERT_EQ(c.size(), 3u);
    for (std::size_t b = 0; b < 3; ++b) {
        FeatureVector mean(6, 0.0);
        int n = 0;
        for (std::size_t i = 0; i < 10; ++i) {
            if (bands[i] != kBands[b]) continue;
            ++n;
            for (int j = 0; j < 6; ++j) mean[j] += pts[i][j];
        }
        for (int j = 0; j < 6; ++j) EXPECT_NEAR(c[b][j], mean[j] / n, 1e-12);
    }
}

TEST(Seeding, FarthestFirstStartsNearTheMean) {
    std::vector<FeatureVector> pts = {{0}, {1}, {2}, {10}};
    auto c = seed_centroids(pts, {}, {2, 100, SeedMode::farthest_first});
    // mean 3.25: nearest is 2; farthest from 2 is 10.
    EXPECT_EQ(c, (std::vector<FeatureVector>{{2}, {10}}));
}

TEST(Seeding, MoreClustersThanBandsUsesFarthestFirst) {
    std::vector<FeatureVector> pts = {{0}, {1}, {2}, {10}, {20}};
    std::vector<Band> bands(5, Band::medium);
    auto c = seed_centroids(pts, bands, {4, 100, SeedMode::adherence_bands});
    EXPECT_EQ(c.size(), 4u);
    std::set<double> distinct;
    for (auto& v : c) distinct.insert(v[0]);
    EXPECT_EQ(distinct.size(), 4u);
}

TEST(Seeding, KLargerThanPopulationIsAnError) {
    std::vector<FeatureVector> pts = {{0}, {1}};
    EXPECT_THROW(seed_centroids(pts, {}, {3, 100, SeedMode::adherence_bands}), Error);
}

TEST(Cluster, EveryPointItsOwnCluster) {
    std::vector<FeatureVector> pts = {{0, 0}, {5, 1}, {-3, 8}};
    std::vector<Band> bands = {Band::high, Band::medium, Band::low};
    auto m = cluster(pts, bands, {3, 100, SeedMode::adherence_bands});
    EXPECT_EQ(m.wcss, 0.0);
    EXPECT_TRUE(m.converged);
    EXPECT_LE(m.iterations_run, 2u);
    EXPECT_EQ(std::set<std::size_t>(m.labels.begin(), m.labels.end()).size(), 3u);
}

TEST(Cluster, EveryPointItsOwnClusterFarthestFirst) {
    std::vector<FeatureVector> pts = {{0, 0}, {5, 1}, {-3, 8}, {2, 2}};
    auto m = cluster(pts, {}, {4, 100, SeedMode::farthest_first});
    EXPECT_EQ(m.wcss, 0.0);
    EXPECT_TRUE(m.converged);
    EXPECT_LE(m.iterations_run, 2u);
}

TEST(Cluster, SinglePatient) {
    std::vector<FeatureVector> pts = {{1, 2, 3}};
    auto m = cluster(pts, std::vector<Band>{Band::low}, {1, 100, SeedMode::adherence_bands});
    EXPECT_EQ(m.centroids[0], pts[0]);
    EXPECT_EQ(m.labels, std::vector<std::size_t>{0});
}

// Exhaustive minimum-WCSS split as the reference.
TEST(Cluster, SeparatedBlobsMatchExhaustiveOptimum) {
    std::vector<FeatureVector> pts = {{0, 0}, {0.5, 0.2}, {0.1, 0.6}, {20, 20}, {20.4, 19.8}, {19.7, 20.5}};
    std::vector<Band> bands = {Band::low, Band::high, Band::medium, Band::high, Band::low, Band::medium};
    auto m = cluster(pts, bands, {2, 100, SeedMode::adherence_bands});
    auto best = oracle::min_wcss_two_partition(pts);
    EXPECT_EQ(oracle::canonical_labels(m.labels), best.labels);
    EXPECT_EQ(oracle::canonical_labels(m.labels), (std::vector<std::size_t>{0, 0, 0, 1, 1, 1}));
}

TEST(Cluster, EmptyClusterIsRepaired) {
    // HIGH and MEDIUM means coincide at 5, so MEDIUM's centroid loses every
    // point to the lower index on the first assignment.
    std::vector<FeatureVector> pts = {{0}, {10}, {4}, {6}, {100}};
    std::vector<Band> bands = {Band::high, Band::high, Band::medium, Band::medium, Band::low};
    auto m = cluster(pts, bands, {3, 100, SeedMode::adherence_bands});
    for (auto s : m.cluster_sizes()) EXPECT_GT(s, 0u);
    expect_fixed_point(pts, m);
}

TEST(Cluster, RespectsMaxIters) {
    std::mt19937_64 rng(5);
    for (int t = 0; t < 50; ++t) {
        auto pts = random_points(rng, 40, 6);
        auto m = cluster(pts, random_bands(rng, 40), {3, 1, SeedMode::adherence_bands});
        EXPECT_LE(m.iterations_run, 1u);
    }
}

TEST(Cluster, PreconditionErrors) {
    std::vector<FeatureVector> pts = {{0}, {1}};
    EXPECT_THROW(cluster({}, {}, {1, 100, SeedMode::adherence_bands}), Error);
    EXPECT_THROW(cluster(pts, {}, {0, 100, SeedMode::adherence_bands}), Error);
    EXPECT_THROW(cluster(pts, {}, {1, 0, SeedMode::adherence_bands}), Error);
    EXPECT_THROW(cluster(pts, {}, {3, 100, SeedMode::adherence_bands}), Error);
    EXPECT_THROW(cluster(pts, std::vector<Band>{Band::high}, {1, 100, SeedMode::adherence_bands}), Error);
    std::vector<FeatureVector> ragged = {{0, 1}, {1}};
    EXPECT_THROW(cluster(ragged, {}, {1, 100, SeedMode::adherence_bands}), Error);
    std::vector<FeatureVector> nan = {{0}, {std::nan("")}};
    EXPECT_THROW(cluster(nan, {}, {1, 100, SeedMode::adherence_bands}), Error);
}

class ClusterProperties : public ::testing::TestWithParam<SeedMode> {};

TEST_P(ClusterProperties, InvariantsOnRandomInstances) {
    std::mt19937_64 rng(11);
    for (int t = 0; t < 100; ++t) {
        const std::size_t n = 3 + rng() % 48;
        auto pts = random_points(rng, n, 6);
        auto m = cluster(pts, random_bands(rng, n), {3, 100, GetParam()});
        ASSERT_EQ(m.labels.size(), n);
        for (auto l : m.labels) EXPECT_LT(l, 3u);
        EXPECT_LE(m.iterations_run, 100u);
        expect_fixed_point(pts, m);
        for (std::size_t i = 1; i < m.wcss_history.size(); ++i)
            EXPECT_LE(m.wcss_history[i], m.wcss_history[i - 1] + 1e-9 * (1 + m.wcss_history[i - 1]));
        EXPECT_NEAR(m.wcss, oracle::wcss(pts, m.labels, m.centroids), 1e-9 * (1 + m.wcss));
    }
}

TEST_P(ClusterProperties, PermutingPatientsKeepsThePartition) {
    std::mt19937_64 rng(13);
    for (int t = 0; t < 50; ++t) {
        const std::size_t n = 6 + rng() % 30;
        auto pts = random_points(rng, n, 6);
        auto bands = random_bands(rng, n);
        std::vector<std::size_t> ids(n), perm(n);
        std::iota(ids.begin(), ids.end(), 0);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        std::vector<FeatureVector> p2;
        std::vector<Band> b2;
        for (auto i : perm) {
            p2.push_back(pts[i]);
            b2.push_back(bands[i]);
        }
        auto a = cluster(pts, bands, {3, 100, GetParam()});
        auto b = cluster(p2, b2, {3, 100, GetParam()});
        EXPECT_EQ(as_partition(a.labels, ids), as_partition(b.labels, perm));
    }
}

// n <= 8, d <= 3, k = 2: a Lloyd fixed point whose means match a
// brute-force recomputation, and re-running a round changes nothing.
TEST_P(ClusterProperties, SmallInstanceSelfConsistency) {
    std::mt19937_64 rng(17);
    for (int t = 0; t < 200; ++t) {
        const std::size_t n = 2 + rng() % 7;
        const std::size_t d = 1 + rng() % 3;
        auto pts = random_points(rng, n, d);
        auto m = cluster(pts, random_bands(rng, n), {2, 100, GetParam()});
        expect_fixed_point(pts, m);
        const auto relabel = oracle::nearest(pts, m.centroids);
        const auto remeans = oracle::member_means(pts, relabel, 2);
        EXPECT_LE(m.wcss, oracle::wcss(pts, relabel, remeans) + 1e-12);
    }
}

INSTANTIATE_TEST_SUITE_P(SeedModes, ClusterProperties,
                         ::testing::Values(SeedMode::adherence_bands, SeedMode::farthest_first));

TEST(ClusterJson, RoundTrips) {
    std::mt19937_64 rng(19);
    auto pts = random_points(rng, 12, 6);
    auto m = cluster(pts, random_bands(rng, 12), {3, 50, SeedMode::farthest_first});
    nlohmann::json j = m;
    EXPECT_EQ(j["version"], 1);
    EXPECT_EQ(j.get<ClusterModel>(), m);
}

TEST(SeedModeNames, RoundTrip) {
    EXPECT_EQ(seed_mode_from_string("FARTHEST_FIRST"), SeedMode::farthest_first);
    EXPECT_EQ(to_string(SeedMode::adherence_bands), "ADHERENCE_BANDS");
    EXPECT_THROW(seed_mode_from_string("RANDOM"), Error);
}
