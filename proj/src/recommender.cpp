#include "coachai/recommender.hpp"

#include <algorithm>
#include <limits>
#include <unordered_map>

#include "coachai/error.hpp"
#include "text_util.hpp"

namespace coachai {

std::string_view to_string(Provenance p) {
    switch (p) {
        case Provenance::high_adherence: return "HIGH_ADH";
        case Provenance::different_adherence: return "DIFF_ADH";
        case Provenance::knn: return "KNN";
    }
    return "KNN";
}

Provenance provenance_from_string(std::string_view text) {
    if (text == "HIGH_ADH") return Provenance::high_adherence;
    if (text == "DIFF_ADH") return Provenance::different_adherence;
    if (text == "KNN") return Provenance::knn;
    throw Error(ErrorKind::parse, "unknown provenance '" + std::string(text) + "'");
}

std::string_view to_string(CaseStatus s) {
    switch (s) {
        case CaseStatus::pending: return "PENDING";
        case CaseStatus::accepted: return "ACCEPTED";
        case CaseStatus::rejected: return "REJECTED";
    }
    return "PENDING";
}

CaseStatus case_status_from_string(std::string_view text) {
    const auto upper = detail::to_upper(text);
    if (upper == "PENDING") return CaseStatus::pending;
    if (upper == "ACCEPTED") return CaseStatus::accepted;
    if (upper == "REJECTED") return CaseStatus::rejected;
    throw Error(ErrorKind::parse, "unknown case status '" + std::string(text) + "'");
}

std::vector<std::string> rank_activities(const ActivityCounts& counts) {
    std::vector<std::pair<std::string, std::size_t>> items(counts.begin(), counts.end());
    // counts is ordered by id, so a stable sort on count keeps ids ascending.
    std::stable_sort(items.begin(), items.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    std::vector<std::string> out;
    out.reserve(items.size());
    for (auto& [id, n] : items) out.push_back(std::move(id));
    return out;
}

namespace {

std::vector<ActivityCounts> per_cluster_activities(const ClusterModel& model,
                                                   const std::vector<MemberSnapshot>& members,
                                                   std::span<const std::size_t> member_index) {
    std::vector<ActivityCounts> out(model.k());
    for (std::size_t i = 0; i < model.labels.size(); ++i) {
        auto& bucket = out[model.labels[i]];
        for (const auto& [id, n] : members[member_index[i]].completed) bucket[id] += n;
    }
    return out;
}

SourceList nearest_cluster_activities(std::span<const double> query, const ClusterModel& model,
                                      const std::vector<ActivityCounts>& activities) {
    SourceList out;
    const auto c = nearest_centroid(query, model.centroids);
    out.cluster = c;
    out.activities = rank_activities(activities[c]);
    return out;
}

}  // namespace

AdherenceGroupModel build_group_model(std::span<const PatientProfile> population,
                                      const ProfessionMap& professions, const ActivityOntology& ontology,
                                      const RecommenderConfig& cfg) {
    AdherenceGroupModel groups;
    std::vector<std::vector<double>> raw;
    for (const auto& p : population) {
        if (!p.complete()) continue;
        MemberSnapshot m;
        m.id = p.id;
        m.band = adherence_score(p.adherence_history, cfg.adherence_window, cfg.thresholds).band;
        for (const auto& r : p.adherence_history) {
            if (!ontology.contains(r.activity_id))
                throw Error(ErrorKind::validation,
                            "patient '" + p.id + "' references unknown activity '" + r.activity_id + "'");
            if (r.completed && !r.pending) ++m.completed[r.activity_id];
        }
        raw.push_back(vectorize(p, professions).to_vector());
        groups.members.push_back(std::move(m));
    }
    if (groups.members.empty())
        throw Error(ErrorKind::invalid_argument, "no patients with complete features");

    groups.normalization = Normalization::fit(raw);
    for (std::size_t i = 0; i < raw.size(); ++i) groups.members[i].vector = groups.normalization.apply(raw[i]);

    std::vector<FeatureVector> all_vectors;
    std::vector<Band> all_bands;
    std::vector<std::size_t> all_index;
    for (std::size_t i = 0; i < groups.members.size(); ++i) {
        all_vectors.push_back(groups.members[i].vector);
        all_bands.push_back(groups.members[i].band);
        all_index.push_back(i);
        if (groups.members[i].band == Band::high) groups.high_members.push_back(i);
    }

    if (!groups.high_members.empty()) {
        std::vector<FeatureVector> high_vectors;
        for (auto i : groups.high_members) high_vectors.push_back(groups.members[i].vector);
        std::vector<Band> high_bands(high_vectors.size(), Band::high);
        auto high_cfg = cfg.clustering;
        high_cfg.k = std::min(cfg.clustering.k, high_vectors.size());
        groups.high_model = cluster(high_vectors, high_bands, high_cfg);
        groups.high_cluster_activities =
            per_cluster_activities(*groups.high_model, groups.members, groups.high_members);
    }

    auto band_cfg = cfg.clustering;
    band_cfg.k = std::min(cfg.clustering.k, all_vectors.size());
    groups.band_model = cluster(all_vectors, all_bands, band_cfg);
    groups.band_cluster_activities = per_cluster_activities(groups.band_model, groups.members, all_index);
    return groups;
}

SourceList recommend_high_adherence(std::span<const double> query, const AdherenceGroupModel& groups) {
    if (!groups.high_model) {
        SourceList empty;
        empty.empty_band = true;
        return empty;
    }
    return nearest_cluster_activities(query, *groups.high_model, groups.high_cluster_activities);
}

SourceList recommend_different_adherence(std::span<const double> query, const AdherenceGroupModel& groups) {
    return nearest_cluster_activities(query, groups.band_model, groups.band_cluster_activities);
}

std::vector<Neighbor> knn_neighbors(std::span<const double> query, std::span<const FeatureVector> vectors,
                                    std::span<const std::string> ids, std::size_t k) {
    if (k == 0) throw Error(ErrorKind::invalid_argument, "k must be >= 1");
    if (vectors.empty()) throw Error(ErrorKind::invalid_argument, "empty population");
    if (ids.size() != vectors.size()) throw Error(ErrorKind::invalid_argument, "one id per vector required");

    std::vector<Neighbor> all;
    all.reserve(vectors.size());
    for (std::size_t i = 0; i < vectors.size(); ++i) all.push_back({i, ids[i], euclidean_distance(query, vectors[i])});
    const auto take = std::min(k, all.size());
    auto closer = [](const Neighbor& a, const Neighbor& b) {
        if (a.distance != b.distance) return a.distance < b.distance;
        return a.id < b.id;
    };
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(take), all.end(), closer);
    all.resize(take);
    return all;
}

std::vector<Neighbor> knn_neighbors(std::span<const double> query, const AdherenceGroupModel& groups,
                                    std::size_t k, std::string_view exclude_id) {
    std::vector<FeatureVector> vectors;
    std::vector<std::string> ids;
    std::vector<std::size_t> index;
    for (std::size_t i = 0; i < groups.members.size(); ++i) {
        if (!exclude_id.empty() && groups.members[i].id == exclude_id) continue;
        vectors.push_back(groups.members[i].vector);
        ids.push_back(groups.members[i].id);
        index.push_back(i);
    }
    if (vectors.empty()) return {};
    auto out = knn_neighbors(query, vectors, ids, k);
    for (auto& n : out) n.index = index[n.index];
    return out;
}

std::vector<std::string> neighbor_activities(std::span<const Neighbor> neighbors,
                                             const AdherenceGroupModel& groups) {
    ActivityCounts counts;
    for (const auto& n : neighbors)
        for (const auto& [id, c] : groups.members.at(n.index).completed) counts[id] += c;
    return rank_activities(counts);
}

std::vector<Candidate> combine(std::span<const std::string> high, std::span<const std::string> different,
                               std::span<const std::string> neighbors, const ActivityOntology& ontology,
                               double threshold, std::size_t cap) {
    std::vector<Candidate> merged;
    std::unordered_map<std::string, std::size_t> position;
    auto absorb = [&](std::span<const std::string> source, Provenance provenance) {
        for (const auto& id : source) {
            if (auto it = position.find(id); it != position.end()) {
                ++merged[it->second].support_count;
                continue;
            }
            position.emplace(id, merged.size());
            merged.push_back({id, provenance, 1});
        }
    };
    absorb(high, Provenance::high_adherence);
    absorb(different, Provenance::different_adherence);
    absorb(neighbors, Provenance::knn);
    if (merged.empty()) throw Error(ErrorKind::invalid_argument, "no candidates");

    std::vector<std::string> ids;
    ids.reserve(merged.size());
    for (const auto& c : merged) ids.push_back(c.activity_id);
    const auto kept = eliminate_similar(ids, threshold, ontology);

    std::vector<Candidate> out;
    out.reserve(kept.size());
    for (const auto& id : kept) out.push_back(merged[position.at(id)]);
    std::stable_sort(out.begin(), out.end(),
                     [](const Candidate& a, const Candidate& b) { return a.support_count > b.support_count; });
    if (out.size() > cap) out.resize(cap);
    return out;
}

RecommendationCase recommend(const PatientProfile& patient, const AdherenceGroupModel& groups,
                             const ProfessionMap& professions, const ActivityOntology& ontology,
                             const RecommenderConfig& cfg, Timestamp now) {
    RecommendationCase rc;
    rc.patient_id = patient.id;
    rc.created_at = now;
    rc.status = CaseStatus::pending;

    const auto raw = vectorize(patient, professions);
    if (raw.profession_defaulted) rc.flags.emplace_back("profession_defaulted");
    const auto query = groups.normalization.apply(raw.to_vector());

    const auto high = recommend_high_adherence(query, groups);
    if (high.empty_band) rc.flags.emplace_back("high_band_empty");
    const auto different = recommend_different_adherence(query, groups);
    const auto neighbors = knn_neighbors(query, groups, cfg.knn_k, patient.id);
    const auto nearby = neighbor_activities(neighbors, groups);

    if (high.activities.empty() && different.activities.empty() && nearby.empty()) {
        rc.flags.emplace_back("cold_start");
        rc.flags.emplace_back("manual_assignment");
        return rc;
    }
    rc.candidates = combine(high.activities, different.activities, nearby, ontology, cfg.dedup_threshold,
                            cfg.candidate_cap);
    return rc;
}

RecommendationCase recommend(const PatientProfile& patient, std::span<const PatientProfile> population,
                             const ProfessionMap& professions, const ActivityOntology& ontology,
                             const RecommenderConfig& cfg, Timestamp now) {
    const auto groups = build_group_model(population, professions, ontology, cfg);
    return recommend(patient, groups, professions, ontology, cfg, now);
}

// ---------------------------------------------------------------------------
// JSON

void to_json(nlohmann::json& j, const Candidate& c) {
    j = nlohmann::json{{"activity_id", c.activity_id},
                       {"provenance", to_string(c.provenance)},
                       {"support_count", c.support_count}};
}

void from_json(const nlohmann::json& j, Candidate& c) {
    c.activity_id = j.at("activity_id").get<std::string>();
    c.provenance = provenance_from_string(j.at("provenance").get<std::string>());
    c.support_count = j.at("support_count").get<std::size_t>();
}

void to_json(nlohmann::json& j, const RecommendationCase& c) {
    j = nlohmann::json{{"version", 1},
                       {"id", c.id},
                       {"patient_id", c.patient_id},
                       {"snapshot_id", c.snapshot_id},
                       {"candidates", c.candidates},
                       {"created_at", c.created_at},
                       {"status", to_string(c.status)},
                       {"flags", c.flags}};
    j["accepted_activity"] = c.accepted_activity ? nlohmann::json(*c.accepted_activity) : nlohmann::json();
    j["coach_note"] = c.coach_note ? nlohmann::json(*c.coach_note) : nlohmann::json();
    j["decided_at"] = c.decided_at ? nlohmann::json(*c.decided_at) : nlohmann::json();
}

void from_json(const nlohmann::json& j, RecommendationCase& c) {
    if (j.value("version", 0) != 1) throw Error(ErrorKind::parse, "unsupported recommendation case version");
    c.id = j.at("id").get<std::string>();
    c.patient_id = j.at("patient_id").get<std::string>();
    c.snapshot_id = j.value("snapshot_id", std::string{});
    c.candidates = j.at("candidates").get<std::vector<Candidate>>();
    c.created_at = j.at("created_at").get<Timestamp>();
    c.status = case_status_from_string(j.at("status").get<std::string>());
    c.flags = j.value("flags", std::vector<std::string>{});
    c.accepted_activity.reset();
    c.coach_note.reset();
    c.decided_at.reset();
    if (j.contains("accepted_activity") && !j["accepted_activity"].is_null())
        c.accepted_activity = j["accepted_activity"].get<std::string>();
    if (j.contains("coach_note") && !j["coach_note"].is_null()) c.coach_note = j["coach_note"].get<std::string>();
    if (j.contains("decided_at") && !j["decided_at"].is_null()) c.decided_at = j["decided_at"].get<Timestamp>();
}

void to_json(nlohmann::json& j, const RecommenderConfig& c) {
    j = nlohmann::json{{"clustering", c.clustering},
                       {"knn_k", c.knn_k},
                       {"candidate_cap", c.candidate_cap},
                       {"dedup_threshold", c.dedup_threshold},
                       {"adherence_window", c.adherence_window},
                       {"adherence_high", c.thresholds.high},
                       {"adherence_medium", c.thresholds.medium}};
}

void from_json(const nlohmann::json& j, RecommenderConfig& c) {
    RecommenderConfig d;
    c.clustering = j.contains("clustering") ? j["clustering"].get<ClusteringConfig>() : d.clustering;
    c.knn_k = j.value("knn_k", d.knn_k);
    c.candidate_cap = j.value("candidate_cap", d.candidate_cap);
    c.dedup_threshold = j.value("dedup_threshold", d.dedup_threshold);
    c.adherence_window = j.value("adherence_window", d.adherence_window);
    c.thresholds.high = j.value("adherence_high", d.thresholds.high);
    c.thresholds.medium = j.value("adherence_medium", d.thresholds.medium);
}

void to_json(nlohmann::json& j, const MemberSnapshot& m) {
    nlohmann::json completed = nlohmann::json::object();
    for (const auto& [id, n] : m.completed) completed[id] = n;
    j = nlohmann::json{{"id", m.id}, {"vector", m.vector}, {"band", to_string(m.band)}, {"completed", completed}};
}

void from_json(const nlohmann::json& j, MemberSnapshot& m) {
    m.id = j.at("id").get<std::string>();
    m.vector = j.at("vector").get<FeatureVector>();
    m.band = band_from_string(j.at("band").get<std::string>());
    m.completed.clear();
    for (const auto& [id, n] : j.at("completed").items()) m.completed[id] = n.get<std::size_t>();
}

namespace {

nlohmann::json counts_to_json(const std::vector<ActivityCounts>& all) {
    auto arr = nlohmann::json::array();
    for (const auto& counts : all) {
        nlohmann::json obj = nlohmann::json::object();
        for (const auto& [id, n] : counts) obj[id] = n;
        arr.push_back(std::move(obj));
    }
    return arr;
}

std::vector<ActivityCounts> counts_from_json(const nlohmann::json& arr) {
    std::vector<ActivityCounts> out;
    for (const auto& obj : arr) {
        ActivityCounts counts;
        for (const auto& [id, n] : obj.items()) counts[id] = n.get<std::size_t>();
        out.push_back(std::move(counts));
    }
    return out;
}

}  // namespace

void to_json(nlohmann::json& j, const AdherenceGroupModel& g) {
    j = nlohmann::json{{"normalization", g.normalization},
                       {"members", g.members},
                       {"high_members", g.high_members},
                       {"band_model", g.band_model},
                       {"high_cluster_activities", counts_to_json(g.high_cluster_activities)},
                       {"band_cluster_activities", counts_to_json(g.band_cluster_activities)}};
    j["high_model"] = g.high_model ? nlohmann::json(*g.high_model) : nlohmann::json();
}

void from_json(const nlohmann::json& j, AdherenceGroupModel& g) {
    g.normalization = j.at("normalization").get<Normalization>();
    g.members = j.at("members").get<std::vector<MemberSnapshot>>();
    g.high_members = j.at("high_members").get<std::vector<std::size_t>>();
    g.band_model = j.at("band_model").get<ClusterModel>();
    g.high_model.reset();
    if (!j.at("high_model").is_null()) g.high_model = j["high_model"].get<ClusterModel>();
    g.high_cluster_activities = counts_from_json(j.at("high_cluster_activities"));
    g.band_cluster_activities = counts_from_json(j.at("band_cluster_activities"));
}

}  // namespace coachai
