#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "coachai/patient.hpp"

namespace coachai {

/// Throws Error(invalid_argument) on a dimension mismatch.
double euclidean_distance(std::span<const double> a, std::span<const double> b);
double squared_distance(std::span<const double> a, std::span<const double> b);

enum class SeedMode { adherence_bands, farthest_first };

std::string_view to_string(SeedMode mode);
SeedMode seed_mode_from_string(std::string_view text);

struct ClusteringConfig {
    std::size_t k = 3;
    std::size_t max_iters = 100;
    SeedMode seed_mode = SeedMode::adherence_bands;

    bool operator==(const ClusteringConfig&) const = default;
};

struct ClusterModel {
    std::vector<FeatureVector> centroids;
    std::vector<std::size_t> labels;
    std::size_t iterations_run = 0;
    bool converged = false;
    double wcss = 0.0;
    // WCSS after the initial assignment and after every later update and
    // assignment step, in execution order.
    std::vector<double> wcss_history;
    ClusteringConfig config;

    std::size_t k() const { return centroids.size(); }
    std::vector<std::size_t> cluster_sizes() const;

    bool operator==(const ClusterModel&) const = default;
};

/// Index of the nearest centroid; ties go to the lowest index.
std::size_t nearest_centroid(std::span<const double> point, std::span<const FeatureVector> centroids);

double within_cluster_ss(std::span<const FeatureVector> points, std::span<const FeatureVector> centroids,
                         std::span<const std::size_t> labels);

/// Initial centroids. With adherence seeding, centroid i is the mean of band
/// i in HIGH, MEDIUM, LOW order; an empty band (and any k > 3) falls back to
/// farthest-first selection over the patients.
std::vector<FeatureVector> seed_centroids(std::span<const FeatureVector> points,
                                          std::span<const Band> bands, const ClusteringConfig& cfg);

/// Adherence-seeded iterative refinement. Alternates nearest-centroid
/// assignment and member-mean updates until no label changes or max_iters
/// update rounds have run.
ClusterModel cluster(std::span<const FeatureVector> points, std::span<const Band> bands,
                     const ClusteringConfig& cfg);

void to_json(nlohmann::json& j, const ClusteringConfig& c);
void from_json(const nlohmann::json& j, ClusteringConfig& c);
/// Versioned document: {"version":1, "config", "centroids", "labels", ...}.
void to_json(nlohmann::json& j, const ClusterModel& m);
void from_json(const nlohmann::json& j, ClusterModel& m);

}  // namespace coachai
