#include "coachai/sim/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <tuple>

namespace coachai::sim::oracle {

double sq_dist(const Point& a, const Point& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return s;
}

std::vector<std::size_t> nearest(const std::vector<Point>& points, const std::vector<Point>& centroids) {
    std::vector<std::size_t> out;
    for (const auto& p : points) {
        std::vector<double> d;
        for (const auto& c : centroids) d.push_back(sq_dist(p, c));
        // first index of the minimum
        out.push_back(static_cast<std::size_t>(std::min_element(d.begin(), d.end()) - d.begin()));
    }
    return out;
}

std::vector<Point> member_means(const std::vector<Point>& points, const std::vector<std::size_t>& labels,
                                std::size_t k) {
    std::vector<Point> out(k);
    for (std::size_t c = 0; c < k; ++c) {
        std::vector<const Point*> members;
        for (std::size_t i = 0; i < points.size(); ++i)
            if (labels[i] == c) members.push_back(&points[i]);
        if (members.empty()) continue;
        Point mean(points[0].size(), 0.0);
        for (const auto* m : members)
            for (std::size_t j = 0; j < mean.size(); ++j) mean[j] += (*m)[j];
        for (auto& v : mean) v /= static_cast<double>(members.size());
        out[c] = std::move(mean);
    }
    return out;
}

double wcss(const std::vector<Point>& points, const std::vector<std::size_t>& labels,
            const std::vector<Point>& centroids) {
    double s = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) s += sq_dist(points[i], centroids[labels[i]]);
    return s;
}

std::vector<std::size_t> canonical_labels(const std::vector<std::size_t>& labels) {
    std::map<std::size_t, std::size_t> rename;
    std::vector<std::size_t> out;
    for (auto l : labels) {
        auto [it, fresh] = rename.emplace(l, rename.size());
        (void)fresh;
        out.push_back(it->second);
    }
    return out;
}

TwoPartition min_wcss_two_partition(const std::vector<Point>& points) {
    const std::size_t n = points.size();
    TwoPartition best;
    best.wcss = std::numeric_limits<double>::infinity();
    // Point 0 always in group 0; masks over the remaining n-1 points.
    const std::uint64_t total = std::uint64_t{1} << (n - 1);
    for (std::uint64_t mask = 1; mask < total; ++mask) {
        std::vector<std::size_t> labels(n, 0);
        for (std::size_t i = 1; i < n; ++i) labels[i] = (mask >> (i - 1)) & 1;
        const auto means = member_means(points, labels, 2);
        const double w = wcss(points, labels, means);
        if (w < best.wcss) best = {labels, w};
    }
    return best;
}

std::vector<std::size_t> knn(const Point& query, const std::vector<Point>& points,
                             const std::vector<std::string>& ids, std::size_t k, const std::string& exclude) {
    std::vector<std::tuple<double, std::string, std::size_t>> all;
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (!exclude.empty() && ids[i] == exclude) continue;
        all.emplace_back(std::sqrt(sq_dist(query, points[i])), ids[i], i);
    }
    std::sort(all.begin(), all.end());
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < all.size() && i < k; ++i) out.push_back(std::get<2>(all[i]));
    return out;
}

namespace {

std::size_t depth(const CategoryNode& n) {
    std::size_t d = 0;
    for (const auto& c : n.children) d = std::max(d, depth(c) + 1);
    return d;
}

}  // namespace

double activity_distance(const std::string& a, const std::string& b, const ActivityOntology& o) {
    const PhysicalActivity* pa = nullptr;
    const PhysicalActivity* pb = nullptr;
    double met_lo = std::numeric_limits<double>::infinity(), met_hi = -met_lo;
    double dur_lo = met_lo, dur_hi = -met_lo;
    for (const auto& act : o.activities()) {
        if (act.id == a) pa = &act;
        if (act.id == b) pb = &act;
        met_lo = std::min(met_lo, act.met);
        met_hi = std::max(met_hi, act.met);
        dur_lo = std::min(dur_lo, act.typical_duration_min);
        dur_hi = std::max(dur_hi, act.typical_duration_min);
    }
    // Hops between the two category nodes: walk up from both to the deepest
    // shared ancestor.
    const auto& x = pa->category_path;
    const auto& y = pb->category_path;
    std::size_t shared = 0;
    for (std::size_t i = 0; i < std::min(x.size(), y.size()); ++i) {
        if (x[i] != y[i]) break;
        shared = i + 1;
    }
    const double hops = static_cast<double>(x.size() + y.size() - 2 * shared);
    const double h = static_cast<double>(depth(o.tree()));
    const auto& w = o.weights();
    double d = 0.0;
    if (h > 0) d += w.tree * hops / (2.0 * h);
    if (met_hi > met_lo) d += w.met * std::fabs(pa->met - pb->met) / (met_hi - met_lo);
    if (dur_hi > dur_lo) d += w.duration * std::fabs(pa->typical_duration_min - pb->typical_duration_min) / (dur_hi - dur_lo);
    return d;
}

std::vector<Merged> union_dedup(const std::array<std::vector<std::string>, 3>& lists, const ActivityOntology& o,
                                double threshold, std::size_t cap) {
    std::vector<Merged> merged;
    for (std::size_t s = 0; s < lists.size(); ++s) {
        for (const auto& id : lists[s]) {
            bool found = false;
            for (auto& m : merged) {
                if (m.activity_id == id) {
                    m.support += 1;
                    found = true;
                }
            }
            if (!found) merged.push_back({id, s, 1});
        }
    }
    std::vector<Merged> kept;
    for (const auto& m : merged) {
        bool similar = false;
        for (const auto& k : kept) {
            const double d = activity_distance(m.activity_id, k.activity_id, o);
            if (d < threshold || d == 0.0) similar = true;
        }
        if (!similar) kept.push_back(m);
    }
    // Insertion sort: stable by construction.
    for (std::size_t i = 1; i < kept.size(); ++i)
        for (std::size_t j = i; j > 0 && kept[j].support > kept[j - 1].support; --j) std::swap(kept[j], kept[j - 1]);
    if (kept.size() > cap) kept.resize(cap);
    return kept;
}

}  // namespace coachai::sim::oracle
