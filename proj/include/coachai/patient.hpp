#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace coachai {

/// Milliseconds since the Unix epoch.
using Timestamp = std::int64_t;

struct AdherenceRecord {
    std::string activity_id;
    Timestamp assigned_at = 0;
    bool completed = false;
    // Opened by a coach assignment, waiting for feedback. Pending records
    // carry no outcome yet and are ignored by adherence scoring.
    bool pending = false;
    std::optional<std::string> feedback_text;
    std::optional<int> motivation_rating;

    bool operator==(const AdherenceRecord&) const = default;
};

/// Intake-derived fields stay optional until the patient has answered them;
/// clustering only ever sees complete profiles.
struct PatientProfile {
    std::string id;
    std::string external_ref;
    std::string name;
    std::optional<double> age;
    std::optional<std::string> profession;
    std::optional<double> bmi;
    std::optional<double> diet_score;
    std::optional<double> sleep_hours;
    std::optional<double> activity_level;
    std::set<std::string> health_flags;
    std::vector<AdherenceRecord> adherence_history;

    /// Names of the six feature fields that are still absent.
    std::vector<std::string> missing_fields() const;
    bool complete() const { return missing_fields().empty(); }

    bool operator==(const PatientProfile&) const = default;
};

/// Throws Error(validation) naming the first violated invariant.
void validate(const PatientProfile& profile);

inline constexpr std::size_t kFeatureDim = 6;

/// Order of the feature axes. Shared by raw and normalized vectors.
enum class Feature : std::size_t { bmi, diet_score, sleep_hours, activity_level, profession, age };

inline constexpr std::array<std::string_view, kFeatureDim> kFeatureNames = {
    "bmi", "diet_score", "sleep_hours", "activity_level", "profession_sedentariness", "age"};

using FeatureVector = std::vector<double>;

/// Job label -> sedentariness ordinal, 0 (very active job) to 4 (fully sedentary).
class ProfessionMap {
public:
    static constexpr int kDefaultOrdinal = 2;

    ProfessionMap() = default;
    explicit ProfessionMap(const std::map<std::string, int>& entries);

    /// One `label = ordinal` (or `label: ordinal`) per line; '#' starts a comment.
    static ProfessionMap parse(std::string_view text);
    static ProfessionMap load(const std::filesystem::path& path);

    void set(std::string_view label, int ordinal);
    std::optional<int> find(std::string_view label) const;
    const std::map<std::string, int>& entries() const { return entries_; }

private:
    std::map<std::string, int> entries_;
};

struct RawFeatures {
    std::array<double, kFeatureDim> values{};
    bool profession_defaulted = false;

    std::vector<double> to_vector() const { return {values.begin(), values.end()}; }
};

/// Projects a complete profile onto the fixed feature order. Throws
/// Error(invalid_argument) for incomplete or invalid profiles.
RawFeatures vectorize(const PatientProfile& profile, const ProfessionMap& professions);

/// Per-dimension z-score parameters fitted on a population (population
/// standard deviation). A zero-variance axis maps to 0.
struct Normalization {
    std::vector<double> mean;
    std::vector<double> stddev;

    static Normalization fit(std::span<const std::vector<double>> raw);
    FeatureVector apply(std::span<const double> raw) const;

    bool operator==(const Normalization&) const = default;
};

std::vector<FeatureVector> normalize(std::span<const std::vector<double>> raw);

enum class Band { high, medium, low };

inline constexpr std::array<Band, 3> kBands = {Band::high, Band::medium, Band::low};

std::string_view to_string(Band band);
Band band_from_string(std::string_view text);

struct AdherenceThresholds {
    double high = 0.75;
    double medium = 0.4;
    bool operator==(const AdherenceThresholds&) const = default;
};

struct AdherenceBand {
    Band band = Band::medium;
    std::optional<double> score;  // absent for cold-start patients

    bool operator==(const AdherenceBand&) const = default;
};

Band band_for_score(double score, const AdherenceThresholds& thresholds = {});

/// completed / assigned over the most recent `window` resolved records.
/// An empty history yields an absent score, banded MEDIUM.
AdherenceBand adherence_score(std::span<const AdherenceRecord> history, std::size_t window,
                              const AdherenceThresholds& thresholds = {});

void to_json(nlohmann::json& j, const AdherenceRecord& r);
void from_json(const nlohmann::json& j, AdherenceRecord& r);
void to_json(nlohmann::json& j, const PatientProfile& p);
void from_json(const nlohmann::json& j, PatientProfile& p);
void to_json(nlohmann::json& j, const Normalization& n);
void from_json(const nlohmann::json& j, Normalization& n);

}  // namespace coachai
