#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "coachai/ontology.hpp"

// Brute-force reference computations. Deliberately self-contained: nothing
// here calls the clustering, recommender or ontology distance code, so an
// agreement between the two is evidence rather than a tautology.
namespace coachai::sim::oracle {

using Point = std::vector<double>;

double sq_dist(const Point& a, const Point& b);

/// Nearest centroid per point by scanning all centroids; ties to the lowest index.
std::vector<std::size_t> nearest(const std::vector<Point>& points, const std::vector<Point>& centroids);

/// Member mean per cluster (empty clusters yield an empty vector).
std::vector<Point> member_means(const std::vector<Point>& points, const std::vector<std::size_t>& labels,
                                std::size_t k);

double wcss(const std::vector<Point>& points, const std::vector<std::size_t>& labels,
            const std::vector<Point>& centroids);

/// Exhaustive minimum-WCSS split into two non-empty groups. Labels are
/// canonical: point 0 is in group 0.
struct TwoPartition {
    std::vector<std::size_t> labels;
    double wcss = 0.0;
};
TwoPartition min_wcss_two_partition(const std::vector<Point>& points);

/// Relabels so clusters are numbered by first appearance.
std::vector<std::size_t> canonical_labels(const std::vector<std::size_t>& labels);

/// Indices of the k closest points after sorting every (distance, id)
/// pair. Points whose id equals `exclude` are skipped.
std::vector<std::size_t> knn(const Point& query, const std::vector<Point>& points,
                             const std::vector<std::string>& ids, std::size_t k, const std::string& exclude = {});

/// Ontology distance recomputed from the raw document fields.
double activity_distance(const std::string& a, const std::string& b, const ActivityOntology& o);

struct Merged {
    std::string activity_id;
    std::size_t source = 0;  // index of the first list that contained it
    std::size_t support = 0;

    bool operator==(const Merged&) const = default;
};

/// Union of the lists (first source wins, each occurrence adds support),
/// greedy removal of items closer than `threshold` (or identical) to an
/// earlier survivor, then a stable sort by support and truncation to `cap`.
std::vector<Merged> union_dedup(const std::array<std::vector<std::string>, 3>& lists, const ActivityOntology& o,
                                double threshold, std::size_t cap);

}  // namespace coachai::sim::oracle
