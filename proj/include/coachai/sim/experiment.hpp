#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "coachai/clustering.hpp"
#include "coachai/ontology.hpp"
#include "coachai/service/coach_service.hpp"
#include "coachai/sim/cohort.hpp"

namespace coachai::sim {

struct AgreementCounter {
    std::size_t comparisons = 0;
    std::size_t agreements = 0;
    std::vector<std::string> failures;  // first few disagreements, for diagnosis

    void record(bool agreed, const std::string& what);
    bool all_agreed() const { return comparisons == agreements; }
};

void to_json(nlohmann::json& j, const AgreementCounter& c);

struct TrialReport {
    std::string name;
    AgreementCounter counter;
    double seconds = 0.0;
};

/// Random instances (n <= 50, d = 6, k = 3, random bands): the returned
/// model labels every point with its nearest centroid, every centroid is
/// its members' mean within 1e-9, and recorded WCSS never increases.
TrialReport check_clustering_fixed_points(std::size_t trials, std::uint64_t seed);

struct PartitionReport {
    AgreementCounter exact;        // equals the exhaustive min-WCSS split
    AgreementCounter fixed_point;  // Lloyd fixed point
    double seconds = 0.0;
};

/// Two well-separated blobs (gap >= 10x spread), n <= 8, d <= 3, k = 2.
PartitionReport check_small_partitions(std::size_t trials, std::uint64_t seed, SeedMode mode);

/// Random queries over n = 50 points, exact order including tie-breaks.
TrialReport check_knn(std::size_t trials, std::uint64_t seed, std::size_t n = 50);

/// Random (PA1, PA2, pa, threshold) against the union/dedup oracle.
TrialReport check_combine(std::size_t trials, std::uint64_t seed, const ActivityOntology& ontology);

struct ExperimentReport {
    nlohmann::json document;
    std::string text;

    bool all_agreed() const;
};

/// generate -> import -> refresh -> for each newcomer: register, intake
/// chat, recommend, auto-accept the top candidate, simulated feedback ->
/// final refresh. Every step is cross-checked against the oracles.
/// `generated_at` is the only wall-clock field in the report.
ExperimentReport run_experiment(const CohortSpec& spec, const service::ServiceConfig& cfg,
                                const service::Resources& resources);

/// Writes report.json and report.txt into `dir`.
void write_report(const ExperimentReport& report, const std::filesystem::path& dir);

/// Report without its wall-clock fields, for byte-level comparisons.
std::string stable_text(const ExperimentReport& report);

}  // namespace coachai::sim
