#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "coachai/patient.hpp"

namespace coachai::sim {

/// Deterministic generator with platform-independent conversions (the
/// standard distributions are implementation-defined). split() derives an
/// independent stream from a tag.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    std::uint64_t next() { return engine_(); }
    /// Uniform in [0, 1).
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Uniform integer in [0, n). n must be positive.
    std::size_t below(std::size_t n);
    /// Standard normal (Box-Muller).
    double normal();
    Rng split(std::string_view tag) const;
    std::uint64_t seed() const { return seed_; }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

struct FeatureDraw {
    double mean = 0.0;
    double noise = 0.0;  // standard deviation of the Gaussian jitter
};

struct BandProfile {
    FeatureDraw bmi{25.0, 2.0};
    FeatureDraw diet_score{0.5, 0.1};
    FeatureDraw sleep_hours{7.0, 0.5};
    FeatureDraw activity_level{0.5, 0.1};
    FeatureDraw age{45.0, 8.0};
    std::vector<std::string> professions{"teacher"};
    std::vector<std::string> activities;  // habit pool drawn from for histories
    double completion_rate = 0.5;         // for simulated feedback on new assignments
};

struct CohortSpec {
    std::size_t n = 0;
    std::uint64_t seed = 0;
    std::array<double, 3> band_mix{1.0 / 3, 1.0 / 3, 1.0 / 3};  // HIGH, MEDIUM, LOW
    std::array<BandProfile, 3> bands;
    std::size_t history_length = 10;
    std::size_t fresh_patients = 10;

    /// Throws Error(validation) on a bad spec.
    void validate() const;
};

void to_json(nlohmann::json& j, const FeatureDraw& f);
void from_json(const nlohmann::json& j, FeatureDraw& f);
void to_json(nlohmann::json& j, const BandProfile& b);
void from_json(const nlohmann::json& j, BandProfile& b);
void to_json(nlohmann::json& j, const CohortSpec& s);
void from_json(const nlohmann::json& j, CohortSpec& s);
CohortSpec load_cohort_spec(const std::string& path);

/// Per-band counts: floor(n * p) each, then leftover units to the largest
/// fractional parts (ties to the earlier band).
std::array<std::size_t, 3> largest_remainder(std::size_t n, const std::array<double, 3>& mix);

struct Cohort {
    std::vector<PatientProfile> patients;
    std::vector<Band> bands;  // the band each patient was generated for
};

/// Patients with complete features and `history_length` resolved records
/// whose completion count places them in their assigned band.
Cohort generate(const CohortSpec& spec, const AdherenceThresholds& thresholds = {});

/// Features only (no history) for a newcomer drawn from `band`.
PatientProfile draw_patient(const BandProfile& band, Rng& rng);

}  // namespace coachai::sim
