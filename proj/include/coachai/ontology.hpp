#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace coachai {

struct PhysicalActivity {
    std::string id;
    std::string name;
    std::vector<std::string> category_path;  // from the root, e.g. {"root", "cardio", "walking"}
    double met = 0.0;
    double typical_duration_min = 0.0;
    bool indoor = false;

    bool operator==(const PhysicalActivity&) const = default;
};

struct CategoryNode {
    std::string name;
    std::vector<CategoryNode> children;

    bool operator==(const CategoryNode&) const = default;
};

struct DistanceWeights {
    double tree = 0.5;
    double met = 0.3;
    double duration = 0.2;

    bool operator==(const DistanceWeights&) const = default;
};

/// Category tree plus activity table. Immutable once built; construct
/// through load_ontology or from_document so that validation always runs.
class ActivityOntology {
public:
    static ActivityOntology from_document(const nlohmann::json& doc);

    const CategoryNode& tree() const { return root_; }
    const DistanceWeights& weights() const { return weights_; }
    const std::vector<PhysicalActivity>& activities() const { return activities_; }

    const PhysicalActivity* find(std::string_view id) const;
    /// Throws Error(not_found) for unknown ids.
    const PhysicalActivity& at(std::string_view id) const;
    bool contains(std::string_view id) const { return find(id) != nullptr; }
    std::size_t size() const { return activities_.size(); }

    /// Longest root-to-leaf path, in edges.
    std::size_t height() const { return height_; }
    std::size_t category_count() const;
    double met_range() const { return met_max_ - met_min_; }
    double duration_range() const { return dur_max_ - dur_min_; }

    nlohmann::json to_document() const;

    bool operator==(const ActivityOntology& other) const {
        return root_ == other.root_ && activities_ == other.activities_ && weights_ == other.weights_;
    }

private:
    CategoryNode root_;
    std::vector<PhysicalActivity> activities_;
    std::map<std::string, std::size_t, std::less<>> index_;
    DistanceWeights weights_;
    std::size_t height_ = 0;
    double met_min_ = 0.0, met_max_ = 0.0;
    double dur_min_ = 0.0, dur_max_ = 0.0;
};

/// Parses and validates an ontology document. Errors: Error(parse) with
/// line/column for malformed JSON, Error(validation) naming the offending
/// activity for dangling category paths, duplicate ids and bad attributes.
ActivityOntology load_ontology(std::string_view document);
ActivityOntology load_ontology_file(const std::filesystem::path& path);

/// Hops between the two category nodes over twice the tree height.
double tree_distance(const PhysicalActivity& a, const PhysicalActivity& b, const ActivityOntology& o);

/// Weighted tree + MET + duration distance, in [0, 1].
double activity_distance(const PhysicalActivity& a, const PhysicalActivity& b, const ActivityOntology& o);
double activity_distance(std::string_view a, std::string_view b, const ActivityOntology& o);

/// Greedy scan in input order. A candidate survives when it is at least
/// `threshold` away from every survivor so far and not a zero-distance copy
/// of one.
std::vector<std::string> eliminate_similar(std::span<const std::string> candidates, double threshold,
                                           const ActivityOntology& o);

}  // namespace coachai
