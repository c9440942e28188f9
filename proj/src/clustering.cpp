#include "coachai/clustering.hpp"

#include <cmath>
#include <limits>

#include "coachai/error.hpp"
#include "text_util.hpp"

namespace coachai {

double squared_distance(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        throw Error(ErrorKind::invalid_argument,
                    "dimension mismatch: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        sum += d * d;
    }
    return sum;
}

double euclidean_distance(std::span<const double> a, std::span<const double> b) {
    return std::sqrt(squared_distance(a, b));
}

std::string_view to_string(SeedMode mode) {
    return mode == SeedMode::adherence_bands ? "ADHERENCE_BANDS" : "FARTHEST_FIRST";
}

SeedMode seed_mode_from_string(std::string_view text) {
    const auto upper = detail::to_upper(text);
    if (upper == "ADHERENCE_BANDS") return SeedMode::adherence_bands;
    if (upper == "FARTHEST_FIRST") return SeedMode::farthest_first;
    throw Error(ErrorKind::parse, "unknown seed mode '" + std::string(text) + "'");
}

std::vector<std::size_t> ClusterModel::cluster_sizes() const {
    std::vector<std::size_t> sizes(centroids.size(), 0);
    for (auto l : labels) ++sizes[l];
    return sizes;
}

std::size_t nearest_centroid(std::span<const double> point, std::span<const FeatureVector> centroids) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centroids.size(); ++c) {
        const double d = squared_distance(point, centroids[c]);
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    return best;
}

double within_cluster_ss(std::span<const FeatureVector> points, std::span<const FeatureVector> centroids,
                         std::span<const std::size_t> labels) {
    double total = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) total += squared_distance(points[i], centroids[labels[i]]);
    return total;
}

namespace {

void check_inputs(std::span<const FeatureVector> points, std::span<const Band> bands,
                  const ClusteringConfig& cfg) {
    if (points.empty()) throw Error(ErrorKind::invalid_argument, "empty population");
    if (cfg.k == 0) throw Error(ErrorKind::invalid_argument, "k must be >= 1");
    if (cfg.max_iters == 0) throw Error(ErrorKind::invalid_argument, "max_iters must be >= 1");
    if (cfg.k > points.size())
        throw Error(ErrorKind::invalid_argument,
                    "k (" + std::to_string(cfg.k) + ") exceeds population size (" +
                        std::to_string(points.size()) + ")");
    if (!bands.empty() && bands.size() != points.size())
        throw Error(ErrorKind::invalid_argument, "one adherence band per patient required");
    const auto dim = points.front().size();
    for (const auto& p : points) {
        if (p.size() != dim) throw Error(ErrorKind::invalid_argument, "feature vectors differ in dimension");
        for (double v : p) {
            if (!std::isfinite(v)) throw Error(ErrorKind::invalid_argument, "non-finite feature value");
        }
    }
}

FeatureVector mean_of(std::span<const FeatureVector> points, const std::vector<std::size_t>& members) {
    FeatureVector m(points.front().size(), 0.0);
    for (auto i : members)
        for (std::size_t d = 0; d < m.size(); ++d) m[d] += points[i][d];
    for (auto& v : m) v /= static_cast<double>(members.size());
    return m;
}

/// Unchosen patient maximizing the distance to its nearest chosen centroid.
/// With nothing chosen yet, distance is measured from the population mean.
std::size_t farthest_unchosen(std::span<const FeatureVector> points, const std::vector<FeatureVector>& chosen,
                              const std::vector<bool>& taken, const FeatureVector& global_mean) {
    std::size_t best = points.size();
    double best_d = -1.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (taken[i]) continue;
        double d = std::numeric_limits<double>::infinity();
        if (chosen.empty()) {
            d = squared_distance(points[i], global_mean);
        } else {
            for (const auto& c : chosen) d = std::min(d, squared_distance(points[i], c));
        }
        if (d > best_d) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

/// Moves the point farthest from its own centroid into each empty cluster.
/// Donor clusters always keep at least one member.
bool repair_empty_clusters(std::span<const FeatureVector> points, std::vector<FeatureVector>& centroids,
                           std::vector<std::size_t>& labels) {
    std::vector<std::size_t> sizes(centroids.size(), 0);
    for (auto l : labels) ++sizes[l];
    bool moved = false;
    for (std::size_t c = 0; c < centroids.size(); ++c) {
        if (sizes[c] != 0) continue;
        std::size_t pick = points.size();
        double best_d = -1.0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            if (sizes[labels[i]] < 2) continue;
            const double d = squared_distance(points[i], centroids[labels[i]]);
            if (d > best_d) {
                best_d = d;
                pick = i;
            }
        }
        if (pick == points.size()) break;  // unreachable while k <= n
        --sizes[labels[pick]];
        labels[pick] = c;
        sizes[c] = 1;
        centroids[c] = points[pick];
        moved = true;
    }
    return moved;
}

std::vector<std::size_t> assign_all(std::span<const FeatureVector> points,
                                    std::span<const FeatureVector> centroids) {
    std::vector<std::size_t> labels(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) labels[i] = nearest_centroid(points[i], centroids);
    return labels;
}

}  // namespace

std::vector<FeatureVector> seed_centroids(std::span<const FeatureVector> points, std::span<const Band> bands,
                                          const ClusteringConfig& cfg) {
    check_inputs(points, bands, cfg);

    std::vector<std::size_t> everyone(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) everyone[i] = i;
    const FeatureVector global_mean = mean_of(points, everyone);

    std::vector<FeatureVector> centroids;
    std::vector<bool> taken(points.size(), false);

    const bool by_bands = cfg.seed_mode == SeedMode::adherence_bands && cfg.k <= kBands.size();
    if (by_bands) {
        for (std::size_t c = 0; c < cfg.k; ++c) {
            std::vector<std::size_t> members;
            for (std::size_t i = 0; i < points.size(); ++i) {
                const Band b = bands.empty() ? Band::medium : bands[i];
                if (b == kBands[c]) members.push_back(i);
            }
            if (!members.empty()) {
                centroids.push_back(mean_of(points, members));
                continue;
            }
            const auto pick = farthest_unchosen(points, centroids, taken, global_mean);
            taken[pick] = true;
            centroids.push_back(points[pick]);
        }
        return centroids;
    }

    // Farthest-first: start from the patient closest to the population mean.
    std::size_t first = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < points.size(); ++i) {
        const double d = squared_distance(points[i], global_mean);
        if (d < best) {
            best = d;
            first = i;
        }
    }
    taken[first] = true;
    centroids.push_back(points[first]);
    while (centroids.size() < cfg.k) {
        const auto pick = farthest_unchosen(points, centroids, taken, global_mean);
        taken[pick] = true;
        centroids.push_back(points[pick]);
    }
    return centroids;
}

ClusterModel cluster(std::span<const FeatureVector> points, std::span<const Band> bands,
                     const ClusteringConfig& cfg) {
    ClusterModel model;
    model.config = cfg;
    model.centroids = seed_centroids(points, bands, cfg);
    model.labels = assign_all(points, model.centroids);
    model.wcss_history.push_back(within_cluster_ss(points, model.centroids, model.labels));
    if (repair_empty_clusters(points, model.centroids, model.labels))
        model.wcss_history.push_back(within_cluster_ss(points, model.centroids, model.labels));

    for (std::size_t iter = 1; iter <= cfg.max_iters; ++iter) {
        std::vector<std::vector<std::size_t>> members(model.centroids.size());
        for (std::size_t i = 0; i < points.size(); ++i) members[model.labels[i]].push_back(i);
        for (std::size_t c = 0; c < members.size(); ++c) {
            if (!members[c].empty()) model.centroids[c] = mean_of(points, members[c]);
        }
        model.wcss_history.push_back(within_cluster_ss(points, model.centroids, model.labels));

        auto next = assign_all(points, model.centroids);
        model.wcss_history.push_back(within_cluster_ss(points, model.centroids, next));
        if (repair_empty_clusters(points, model.centroids, next))
            model.wcss_history.push_back(within_cluster_ss(points, model.centroids, next));

        const bool changed = next != model.labels;
        model.labels = std::move(next);
        model.iterations_run = iter;
        if (!changed) {
            model.converged = true;
            break;
        }
    }
    model.wcss = within_cluster_ss(points, model.centroids, model.labels);
    return model;
}

// ---------------------------------------------------------------------------
// JSON

void to_json(nlohmann::json& j, const ClusteringConfig& c) {
    j = nlohmann::json{{"k", c.k}, {"max_iters", c.max_iters}, {"seed_mode", to_string(c.seed_mode)}};
}

void from_json(const nlohmann::json& j, ClusteringConfig& c) {
    c.k = j.at("k").get<std::size_t>();
    c.max_iters = j.value("max_iters", std::size_t{100});
    c.seed_mode = seed_mode_from_string(j.value("seed_mode", std::string{"ADHERENCE_BANDS"}));
}

void to_json(nlohmann::json& j, const ClusterModel& m) {
    j = nlohmann::json{{"version", 1},
                       {"config", m.config},
                       {"centroids", m.centroids},
                       {"labels", m.labels},
                       {"iterations_run", m.iterations_run},
                       {"converged", m.converged},
                       {"wcss", m.wcss},
                       {"wcss_history", m.wcss_history}};
}

void from_json(const nlohmann::json& j, ClusterModel& m) {
    if (j.value("version", 0) != 1) throw Error(ErrorKind::parse, "unsupported cluster model version");
    m.config = j.at("config").get<ClusteringConfig>();
    m.centroids = j.at("centroids").get<std::vector<FeatureVector>>();
    m.labels = j.at("labels").get<std::vector<std::size_t>>();
    m.iterations_run = j.at("iterations_run").get<std::size_t>();
    m.converged = j.value("converged", false);
    m.wcss = j.at("wcss").get<double>();
    m.wcss_history = j.value("wcss_history", std::vector<double>{});
}

}  // namespace coachai
