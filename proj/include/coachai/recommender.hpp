#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "coachai/clustering.hpp"
#include "coachai/ontology.hpp"
#include "coachai/patient.hpp"

namespace coachai {

enum class Provenance { high_adherence, different_adherence, knn };

std::string_view to_string(Provenance p);
Provenance provenance_from_string(std::string_view text);

struct RecommenderConfig {
    ClusteringConfig clustering;
    std::size_t knn_k = 5;
    std::size_t candidate_cap = 5;
    double dedup_threshold = 0.15;
    std::size_t adherence_window = 10;
    AdherenceThresholds thresholds;

    bool operator==(const RecommenderConfig&) const = default;
};

/// activity id -> completions by cluster (or neighbour) members.
using ActivityCounts = std::map<std::string, std::size_t, std::less<>>;

/// Ranks by descending completion count, ties by ascending id.
std::vector<std::string> rank_activities(const ActivityCounts& counts);

/// One population member as seen by the recommender at model-build time.
struct MemberSnapshot {
    std::string id;
    FeatureVector vector;
    Band band = Band::medium;
    ActivityCounts completed;

    bool operator==(const MemberSnapshot&) const = default;
};

/// Clusterings of the population's adherence groups plus the activity
/// multisets of each cluster. `high_model` covers HIGH-band members only;
/// `band_model` covers everyone, seeded HIGH / MEDIUM / LOW.
struct AdherenceGroupModel {
    Normalization normalization;
    std::vector<MemberSnapshot> members;
    std::vector<std::size_t> high_members;  // indices into members
    std::optional<ClusterModel> high_model;
    ClusterModel band_model;
    std::vector<ActivityCounts> high_cluster_activities;
    std::vector<ActivityCounts> band_cluster_activities;

    bool operator==(const AdherenceGroupModel&) const = default;
};

/// Builds the group model from the complete profiles in `population`.
/// Incomplete profiles are skipped; throws if none remain or a history
/// references an activity missing from the ontology.
AdherenceGroupModel build_group_model(std::span<const PatientProfile> population,
                                      const ProfessionMap& professions, const ActivityOntology& ontology,
                                      const RecommenderConfig& cfg);

struct SourceList {
    std::vector<std::string> activities;
    std::optional<std::size_t> cluster;  // the cluster the patient was matched to
    bool empty_band = false;
};

/// Nearest HIGH-band cluster's activities. Empty with `empty_band` set when
/// no HIGH-band patients exist.
SourceList recommend_high_adherence(std::span<const double> query, const AdherenceGroupModel& groups);

/// Nearest cluster of the three-band model.
SourceList recommend_different_adherence(std::span<const double> query, const AdherenceGroupModel& groups);

struct Neighbor {
    std::size_t index = 0;
    std::string id;
    double distance = 0.0;

    bool operator==(const Neighbor&) const = default;
};

/// The min(k, n) closest points, ascending by distance, ties by ascending id.
std::vector<Neighbor> knn_neighbors(std::span<const double> query, std::span<const FeatureVector> vectors,
                                    std::span<const std::string> ids, std::size_t k);

/// KNN over the group model's members, skipping `exclude_id`.
std::vector<Neighbor> knn_neighbors(std::span<const double> query, const AdherenceGroupModel& groups,
                                    std::size_t k, std::string_view exclude_id = {});

/// Union of the activities completed by the neighbours, ranked.
std::vector<std::string> neighbor_activities(std::span<const Neighbor> neighbors,
                                             const AdherenceGroupModel& groups);

struct Candidate {
    std::string activity_id;
    Provenance provenance = Provenance::high_adherence;
    std::size_t support_count = 1;

    bool operator==(const Candidate&) const = default;
};

/// Merges the three sources (earliest provenance wins, support counts add),
/// drops ontology-similar activities, and keeps the top `cap` by support.
/// Throws Error(invalid_argument, "no candidates") when all sources are empty.
std::vector<Candidate> combine(std::span<const std::string> high, std::span<const std::string> different,
                               std::span<const std::string> neighbors, const ActivityOntology& ontology,
                               double threshold, std::size_t cap = 5);

enum class CaseStatus { pending, accepted, rejected };

std::string_view to_string(CaseStatus s);
CaseStatus case_status_from_string(std::string_view text);

struct RecommendationCase {
    std::string id;
    std::string patient_id;
    std::string snapshot_id;
    std::vector<Candidate> candidates;
    Timestamp created_at = 0;
    CaseStatus status = CaseStatus::pending;
    std::optional<std::string> accepted_activity;
    std::optional<std::string> coach_note;
    std::optional<Timestamp> decided_at;
    std::vector<std::string> flags;

    bool operator==(const RecommendationCase&) const = default;
};

/// Runs the three sources for `patient` against a built group model and
/// combines them. A cold start (no source has anything) yields a pending
/// case with no candidates and the "manual_assignment" flag.
RecommendationCase recommend(const PatientProfile& patient, const AdherenceGroupModel& groups,
                             const ProfessionMap& professions, const ActivityOntology& ontology,
                             const RecommenderConfig& cfg, Timestamp now);

/// Convenience overload that builds the group model first.
RecommendationCase recommend(const PatientProfile& patient, std::span<const PatientProfile> population,
                             const ProfessionMap& professions, const ActivityOntology& ontology,
                             const RecommenderConfig& cfg, Timestamp now);

void to_json(nlohmann::json& j, const Candidate& c);
void from_json(const nlohmann::json& j, Candidate& c);
/// Versioned document ("version": 1).
void to_json(nlohmann::json& j, const RecommendationCase& c);
void from_json(const nlohmann::json& j, RecommendationCase& c);
void to_json(nlohmann::json& j, const RecommenderConfig& c);
void from_json(const nlohmann::json& j, RecommenderConfig& c);
void to_json(nlohmann::json& j, const MemberSnapshot& m);
void from_json(const nlohmann::json& j, MemberSnapshot& m);
void to_json(nlohmann::json& j, const AdherenceGroupModel& g);
void from_json(const nlohmann::json& j, AdherenceGroupModel& g);

}  // namespace coachai
