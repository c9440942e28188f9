#include "coachai/sim/cohort.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include "coachai/error.hpp"

namespace coachai::sim {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) h = (h ^ c) * 0x100000001b3ULL;
    return h;
}

double draw(Rng& rng, const FeatureDraw& f, double lo, double hi) {
    return std::clamp(f.mean + f.noise * rng.normal(), lo, hi);
}

constexpr std::array<std::string_view, 3> kBandKeys = {"high", "medium", "low"};


}  // namespace

void to_json(nlohmann::json& j, const FeatureDraw& f) { j = {{"mean", f.mean}, {"noise", f.noise}}; }

void from_json(const nlohmann::json& j, FeatureDraw& f) {
    f.mean = j.at("mean").get<double>();
    f.noise = j.value("noise", 0.0);
}

void to_json(nlohmann::json& j, const BandProfile& b) {
    j = {{"bmi", b.bmi},
         {"diet_score", b.diet_score},
         {"sleep_hours", b.sleep_hours},
         {"activity_level", b.activity_level},
         {"age", b.age},
         {"professions", b.professions},
         {"activities", b.activities},
         {"completion_rate", b.completion_rate}};
}

void from_json(const nlohmann::json& j, BandProfile& b) {
    BandProfile d;
    b.bmi = j.value("bmi", d.bmi);
    b.diet_score = j.value("diet_score", d.diet_score);
    b.sleep_hours = j.value("sleep_hours", d.sleep_hours);
    b.activity_level = j.value("activity_level", d.activity_level);
    b.age = j.value("age", d.age);
    b.professions = j.value("professions", d.professions);
    b.activities = j.at("activities").get<std::vector<std::string>>();
    b.completion_rate = j.value("completion_rate", d.completion_rate);
}

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

std::size_t Rng::below(std::size_t n) {
    if (n == 0) throw Error(ErrorKind::invalid_argument, "Rng::below(0)");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do x = engine_();
    while (x >= limit);
    return static_cast<std::size_t>(x % n);
}

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1 = 0.0;
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
}

Rng Rng::split(std::string_view tag) const { return Rng(splitmix64(seed_ ^ fnv1a(tag))); }

void CohortSpec::validate() const {
    if (n < 1) throw Error(ErrorKind::validation, "cohort size n must be at least 1");
    double sum = 0.0;
    for (double p : band_mix) {
        if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorKind::validation, "band_mix proportions must be in [0, 1]");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw Error(ErrorKind::validation, "band_mix must sum to 1");
    if (history_length < 1) throw Error(ErrorKind::validation, "history_length must be at least 1");
    for (std::size_t b = 0; b < 3; ++b) {
        const auto& band = bands[b];
        if (band_mix[b] > 0.0 && band.activities.empty())
            throw Error(ErrorKind::validation, std::string("band ") + std::string(kBandKeys[b]) + " has no activities");
        if (band.professions.empty())
            throw Error(ErrorKind::validation, std::string("band ") + std::string(kBandKeys[b]) + " has no professions");
        if (!(band.completion_rate >= 0.0 && band.completion_rate <= 1.0))
            throw Error(ErrorKind::validation, "completion_rate must be in [0, 1]");
        for (const auto* f : {&band.bmi, &band.diet_score, &band.sleep_hours, &band.activity_level, &band.age})
            if (!(f->noise >= 0.0) || !std::isfinite(f->mean))
                throw Error(ErrorKind::validation, "feature draws need a finite mean and non-negative noise");
    }
}

void to_json(nlohmann::json& j, const CohortSpec& s) {
    nlohmann::json bands;
    for (std::size_t b = 0; b < 3; ++b) bands[std::string(kBandKeys[b])] = s.bands[b];
    j = {{"n", s.n},
         {"seed", s.seed},
         {"band_mix", {{"high", s.band_mix[0]}, {"medium", s.band_mix[1]}, {"low", s.band_mix[2]}}},
         {"bands", bands},
         {"history_length", s.history_length},
         {"fresh_patients", s.fresh_patients}};
}

void from_json(const nlohmann::json& j, CohortSpec& s) {
    s.n = j.at("n").get<std::size_t>();
    s.seed = j.at("seed").get<std::uint64_t>();
    const auto& mix = j.at("band_mix");
    for (std::size_t b = 0; b < 3; ++b) {
        s.band_mix[b] = mix.at(std::string(kBandKeys[b])).get<double>();
        s.bands[b] = j.at("bands").at(std::string(kBandKeys[b])).get<BandProfile>();
    }
    s.history_length = j.value("history_length", s.history_length);
    s.fresh_patients = j.value("fresh_patients", s.fresh_patients);
}

CohortSpec load_cohort_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::io, "cannot open cohort spec " + path);
    try {
        return nlohmann::json::parse(in).get<CohortSpec>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::parse, "cohort spec " + path + ": " + e.what());
    }
}

std::array<std::size_t, 3> largest_remainder(std::size_t n, const std::array<double, 3>& mix) {
    std::array<std::size_t, 3> counts{};
    std::array<double, 3> frac{};
    std::size_t assigned = 0;
    for (std::size_t b = 0; b < 3; ++b) {
        const double exact = static_cast<double>(n) * mix[b];
        counts[b] = static_cast<std::size_t>(std::floor(exact + 1e-9));
        frac[b] = exact - static_cast<double>(counts[b]);
        assigned += counts[b];
    }
    std::array<std::size_t, 3> order{0, 1, 2};
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
    for (std::size_t i = 0; assigned < n; i = (i + 1) % 3, ++assigned) ++counts[order[i]];
    return counts;
}

PatientProfile draw_patient(const BandProfile& band, Rng& rng) {
    PatientProfile p;
    p.bmi = draw(rng, band.bmi, 15.0, 50.0);
    p.diet_score = draw(rng, band.diet_score, 0.0, 1.0);
    p.sleep_hours = draw(rng, band.sleep_hours, 3.0, 12.0);
    p.activity_level = draw(rng, band.activity_level, 0.0, 1.0);
    p.age = std::round(draw(rng, band.age, 18.0, 90.0));
    p.profession = band.professions[rng.below(band.professions.size())];
    return p;
}

Cohort generate(const CohortSpec& spec, const AdherenceThresholds& thresholds) {
    spec.validate();
    const auto counts = largest_remainder(spec.n, spec.band_mix);
    const std::size_t L = spec.history_length;
    Rng rng = Rng(spec.seed).split("cohort");
    Cohort cohort;
    constexpr Timestamp kDay = 86'400'000;
    for (std::size_t b = 0; b < 3; ++b) {
        const Band band = kBands[b];
        // Completion counts whose score lands in this band.
        std::vector<std::size_t> allowed;
        for (std::size_t c = 0; c <= L; ++c) {
            const double score = static_cast<double>(c) / static_cast<double>(L);
            const Band got = score >= thresholds.high ? Band::high : score >= thresholds.medium ? Band::medium : Band::low;
            if (got == band) allowed.push_back(c);
        }
        if (counts[b] > 0 && allowed.empty())
            throw Error(ErrorKind::validation, "history_length too short to reach band " + std::string(to_string(band)));
        const auto& profile = spec.bands[b];
        for (std::size_t i = 0; i < counts[b]; ++i) {
            auto p = draw_patient(profile, rng);
            const std::size_t idx = cohort.patients.size() + 1;
            char ref[32];
            std::snprintf(ref, sizeof ref, "sim-%04zu", idx);
            p.external_ref = ref;
            p.name = std::string("Sim patient ") + std::to_string(idx);
            const std::size_t done = allowed[rng.below(allowed.size())];
            std::vector<bool> completed(L, false);
            std::fill(completed.begin(), completed.begin() + static_cast<std::ptrdiff_t>(done), true);
            // Fisher-Yates with our own index draw.
            for (std::size_t k = L; k > 1; --k) {
                const std::size_t r = rng.below(k);
                const bool tmp = completed[k - 1];
                completed[k - 1] = completed[r];
                completed[r] = tmp;
            }
            for (std::size_t k = 0; k < L; ++k) {
                AdherenceRecord rec;
                rec.activity_id = profile.activities[rng.below(profile.activities.size())];
                rec.assigned_at = static_cast<Timestamp>(k) * kDay;
                rec.completed = completed[k];
                p.adherence_history.push_back(std::move(rec));
            }
            cohort.patients.push_back(std::move(p));
            cohort.bands.push_back(band);
        }
    }
    return cohort;
}

}  // namespace coachai::sim
