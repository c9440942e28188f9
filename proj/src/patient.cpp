#include "coachai/patient.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "coachai/error.hpp"
#include "text_util.hpp"

namespace coachai {

std::vector<std::string> PatientProfile::missing_fields() const {
    std::vector<std::string> missing;
    if (!bmi) missing.emplace_back("bmi");
    if (!diet_score) missing.emplace_back("diet_score");
    if (!sleep_hours) missing.emplace_back("sleep_hours");
    if (!activity_level) missing.emplace_back("activity_level");
    if (!profession) missing.emplace_back("profession");
    if (!age) missing.emplace_back("age");
    return missing;
}

void validate(const PatientProfile& p) {
    auto fail = [&](const std::string& what) {
        throw Error(ErrorKind::validation, "patient '" + p.id + "': " + what);
    };
    auto in_unit = [](double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; };
    if (p.bmi && !(std::isfinite(*p.bmi) && *p.bmi > 0.0)) fail("bmi must be positive");
    if (p.sleep_hours && !(std::isfinite(*p.sleep_hours) && *p.sleep_hours >= 0.0 && *p.sleep_hours <= 24.0))
        fail("sleep_hours must be in [0, 24]");
    if (p.diet_score && !in_unit(*p.diet_score)) fail("diet_score must be in [0, 1]");
    if (p.activity_level && !in_unit(*p.activity_level)) fail("activity_level must be in [0, 1]");
    if (p.age && !(std::isfinite(*p.age) && *p.age >= 0.0)) fail("age must be non-negative");
    for (std::size_t i = 1; i < p.adherence_history.size(); ++i) {
        if (p.adherence_history[i].assigned_at < p.adherence_history[i - 1].assigned_at)
            fail("adherence history is not ordered by assigned_at");
    }
    for (const auto& r : p.adherence_history) {
        if (r.motivation_rating && (*r.motivation_rating < 1 || *r.motivation_rating > 5))
            fail("motivation rating must be in 1..5");
    }
}

// ---------------------------------------------------------------------------
// Profession table

ProfessionMap::ProfessionMap(const std::map<std::string, int>& entries) {
    for (const auto& [label, ordinal] : entries) set(label, ordinal);
}

void ProfessionMap::set(std::string_view label, int ordinal) {
    if (ordinal < 0 || ordinal > 4)
        throw Error(ErrorKind::validation,
                    "profession '" + std::string(label) + "': ordinal must be in 0..4");
    entries_[detail::to_lower(detail::trim(label))] = ordinal;
}

std::optional<int> ProfessionMap::find(std::string_view label) const {
    auto it = entries_.find(detail::to_lower(detail::trim(label)));
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

ProfessionMap ProfessionMap::parse(std::string_view text) {
    ProfessionMap map;
    std::istringstream in{std::string(text)};
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view view = line;
        if (auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
        view = detail::trim(view);
        if (view.empty()) continue;
        auto sep = view.find_first_of("=:");
        if (sep == std::string_view::npos)
            throw Error(ErrorKind::parse,
                        "profession table line " + std::to_string(line_no) + ": expected 'label = ordinal'");
        auto label = detail::trim(view.substr(0, sep));
        auto value = std::string(detail::trim(view.substr(sep + 1)));
        std::size_t used = 0;
        int ordinal = 0;
        try {
            ordinal = std::stoi(value, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (label.empty() || used == 0 || used != value.size())
            throw Error(ErrorKind::parse,
                        "profession table line " + std::to_string(line_no) + ": bad entry");
        map.set(label, ordinal);
    }
    return map;
}

ProfessionMap ProfessionMap::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::io, "cannot open profession table " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

// ---------------------------------------------------------------------------
// Features

RawFeatures vectorize(const PatientProfile& profile, const ProfessionMap& professions) {
    if (!profile.complete())
        throw Error(ErrorKind::invalid_argument,
                    "patient '" + profile.id + "' has incomplete features");
    validate(profile);

    RawFeatures out;
    auto at = [&](Feature f) -> double& { return out.values[static_cast<std::size_t>(f)]; };
    at(Feature::bmi) = *profile.bmi;
    at(Feature::diet_score) = *profile.diet_score;
    at(Feature::sleep_hours) = *profile.sleep_hours;
    at(Feature::activity_level) = *profile.activity_level;
    if (auto ordinal = professions.find(*profile.profession)) {
        at(Feature::profession) = *ordinal;
    } else {
        at(Feature::profession) = ProfessionMap::kDefaultOrdinal;
        out.profession_defaulted = true;
    }
    at(Feature::age) = *profile.age;
    return out;
}

Normalization Normalization::fit(std::span<const std::vector<double>> raw) {
    if (raw.empty()) throw Error(ErrorKind::invalid_argument, "empty population");
    const std::size_t dim = raw.front().size();
    for (const auto& row : raw) {
        if (row.size() != dim)
            throw Error(ErrorKind::invalid_argument, "raw vectors differ in dimension");
    }
    const double n = static_cast<double>(raw.size());
    Normalization norm;
    norm.mean.assign(dim, 0.0);
    norm.stddev.assign(dim, 0.0);
    for (const auto& row : raw)
        for (std::size_t d = 0; d < dim; ++d) norm.mean[d] += row[d];
    for (auto& m : norm.mean) m /= n;
    for (const auto& row : raw) {
        for (std::size_t d = 0; d < dim; ++d) {
            const double diff = row[d] - norm.mean[d];
            norm.stddev[d] += diff * diff;
        }
    }
    for (auto& s : norm.stddev) s = std::sqrt(s / n);
    return norm;
}

FeatureVector Normalization::apply(std::span<const double> raw) const {
    if (raw.size() != mean.size())
        throw Error(ErrorKind::invalid_argument, "raw vector dimension does not match normalization");
    FeatureVector out(raw.size(), 0.0);
    for (std::size_t d = 0; d < raw.size(); ++d) {
        // Constant axes carry no information; keep them at the origin.
        if (stddev[d] > 0.0) out[d] = (raw[d] - mean[d]) / stddev[d];
    }
    return out;
}

std::vector<FeatureVector> normalize(std::span<const std::vector<double>> raw) {
    const auto norm = Normalization::fit(raw);
    std::vector<FeatureVector> out;
    out.reserve(raw.size());
    for (const auto& row : raw) out.push_back(norm.apply(row));
    return out;
}

// ---------------------------------------------------------------------------
// Adherence

std::string_view to_string(Band band) {
    switch (band) {
        case Band::high: return "HIGH";
        case Band::medium: return "MEDIUM";
        case Band::low: return "LOW";
    }
    return "MEDIUM";
}

Band band_from_string(std::string_view text) {
    const auto upper = detail::to_upper(text);
    if (upper == "HIGH") return Band::high;
    if (upper == "MEDIUM") return Band::medium;
    if (upper == "LOW") return Band::low;
    throw Error(ErrorKind::parse, "unknown adherence band '" + std::string(text) + "'");
}

Band band_for_score(double score, const AdherenceThresholds& thresholds) {
    if (score >= thresholds.high) return Band::high;
    if (score >= thresholds.medium) return Band::medium;
    return Band::low;
}

AdherenceBand adherence_score(std::span<const AdherenceRecord> history, std::size_t window,
                              const AdherenceThresholds& thresholds) {
    if (window == 0) throw Error(ErrorKind::invalid_argument, "adherence window must be >= 1");
    std::size_t assigned = 0;
    std::size_t completed = 0;
    for (auto it = history.rbegin(); it != history.rend() && assigned < window; ++it) {
        if (it->pending) continue;
        ++assigned;
        if (it->completed) ++completed;
    }
    if (assigned == 0) return {Band::medium, std::nullopt};
    const double score = static_cast<double>(completed) / static_cast<double>(assigned);
    return {band_for_score(score, thresholds), score};
}

// ---------------------------------------------------------------------------
// JSON

namespace {

template <typename T>
void put_optional(nlohmann::json& j, const char* key, const std::optional<T>& value) {
    if (value) j[key] = *value;
    else j[key] = nullptr;
}

template <typename T>
std::optional<T> get_optional(const nlohmann::json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    return it->get<T>();
}

}  // namespace

void to_json(nlohmann::json& j, const AdherenceRecord& r) {
    j = nlohmann::json{{"activity_id", r.activity_id},
                       {"assigned_at", r.assigned_at},
                       {"completed", r.completed},
                       {"pending", r.pending}};
    put_optional(j, "feedback_text", r.feedback_text);
    put_optional(j, "motivation_rating", r.motivation_rating);
}

void from_json(const nlohmann::json& j, AdherenceRecord& r) {
    r.activity_id = j.at("activity_id").get<std::string>();
    r.assigned_at = j.at("assigned_at").get<Timestamp>();
    r.completed = j.at("completed").get<bool>();
    r.pending = j.value("pending", false);
    r.feedback_text = get_optional<std::string>(j, "feedback_text");
    r.motivation_rating = get_optional<int>(j, "motivation_rating");
}

void to_json(nlohmann::json& j, const PatientProfile& p) {
    j = nlohmann::json{{"id", p.id},
                       {"external_ref", p.external_ref},
                       {"name", p.name},
                       {"health_flags", p.health_flags},
                       {"adherence_history", p.adherence_history}};
    put_optional(j, "age", p.age);
    put_optional(j, "profession", p.profession);
    put_optional(j, "bmi", p.bmi);
    put_optional(j, "diet_score", p.diet_score);
    put_optional(j, "sleep_hours", p.sleep_hours);
    put_optional(j, "activity_level", p.activity_level);
}

void from_json(const nlohmann::json& j, PatientProfile& p) {
    p.id = j.at("id").get<std::string>();
    p.external_ref = j.value("external_ref", std::string{});
    p.name = j.value("name", std::string{});
    p.age = get_optional<double>(j, "age");
    p.profession = get_optional<std::string>(j, "profession");
    p.bmi = get_optional<double>(j, "bmi");
    p.diet_score = get_optional<double>(j, "diet_score");
    p.sleep_hours = get_optional<double>(j, "sleep_hours");
    p.activity_level = get_optional<double>(j, "activity_level");
    p.health_flags = j.value("health_flags", std::set<std::string>{});
    p.adherence_history = j.value("adherence_history", std::vector<AdherenceRecord>{});
}

void to_json(nlohmann::json& j, const Normalization& n) {
    j = nlohmann::json{{"mean", n.mean}, {"stddev", n.stddev}};
}

void from_json(const nlohmann::json& j, Normalization& n) {
    n.mean = j.at("mean").get<std::vector<double>>();
    n.stddev = j.at("stddev").get<std::vector<double>>();
}

}  // namespace coachai
