#include "coachai/dialogue/intake.hpp"

#include <cmath>
#include <cstdlib>

#include "coachai/dialogue/matcher.hpp"
#include "coachai/error.hpp"
#include "../text_util.hpp"

namespace coachai::dialogue {

IntakeTables IntakeTables::defaults() {
    IntakeTables t;
    t.diet = {{"healthy", 1.0},   {"balanced", 0.75},  {"mixed", 0.5},
              {"irregular", 0.25}, {"unhealthy", 0.0}, {"junk", 0.0}};
    t.activity = {{"sedentary", 0.0}, {"inactive", 0.0}, {"light", 0.25},   {"low", 0.25},
                  {"moderate", 0.5},  {"active", 0.75},  {"athletic", 1.0}, {"intense", 1.0}};
    return t;
}

bool ProfileUpdate::empty() const {
    return !age && !bmi && !diet_score && !sleep_hours && !activity_level && !profession;
}

void ProfileUpdate::apply_to(PatientProfile& p) const {
    if (age) p.age = age;
    if (bmi) p.bmi = bmi;
    if (diet_score) p.diet_score = diet_score;
    if (sleep_hours) p.sleep_hours = sleep_hours;
    if (activity_level) p.activity_level = activity_level;
    if (profession) p.profession = profession;
}

std::string gambit_label_for(std::string_view field) { return detail::to_upper(field); }

namespace {

std::optional<double> parse_number(const std::string& text) {
    const auto folded = normalize_word(text);
    if (!is_number(folded)) return std::nullopt;
    return std::strtod(folded.c_str(), nullptr);
}

std::optional<std::string> answer(const Session& s, std::string_view field) {
    if (auto it = s.intake_answers.find(std::string(field)); it != s.intake_answers.end()) return it->second;
    return std::nullopt;
}

}  // namespace

IntakeResult intake_to_profile(const Session& session, const IntakeTables& tables) {
    if (session.phase != Phase::intake) throw Error(ErrorKind::conflict, "session is not in the intake phase");
    IntakeResult out;
    auto& u = out.update;

    // Numeric field within (lo, hi] or [lo, hi] depending on `open_low`.
    auto numeric = [&](std::string_view field, double lo, double hi, bool open_low) -> std::optional<double> {
        auto raw = answer(session, field);
        if (!raw) return std::nullopt;
        auto v = parse_number(*raw);
        const bool ok = v && std::isfinite(*v) && (open_low ? *v > lo : *v >= lo) && *v <= hi;
        if (!ok) {
            out.reask.emplace_back(field);
            return std::nullopt;
        }
        return v;
    };

    u.age = numeric("age", 0.0, 130.0, true);
    u.sleep_hours = numeric("sleep_hours", 0.0, 24.0, false);
    u.bmi = numeric("bmi", 0.0, 200.0, true);
    if (!u.bmi && !answer(session, "bmi")) {
        auto height = numeric("height_cm", 0.0, 300.0, true);
        auto weight = numeric("weight_kg", 0.0, 700.0, true);
        if (height && weight) u.bmi = *weight / ((*height / 100.0) * (*height / 100.0));
    }

    auto categorical = [&](std::string_view field, const auto& table) -> std::optional<double> {
        auto raw = answer(session, field);
        if (!raw) return std::nullopt;
        if (auto it = table.find(normalize_word(*raw)); it != table.end()) return it->second;
        out.reask.emplace_back(field);
        return std::nullopt;
    };
    u.diet_score = categorical("diet", tables.diet);
    u.activity_level = categorical("activity_level", tables.activity);

    if (auto raw = answer(session, "profession")) {
        u.profession = normalize_word(*raw);
    } else if (auto it = session.answers.find(gambit_label_for("profession")); it != session.answers.end()) {
        // No recognized job word: keep the reply itself as the label.
        std::string label;
        for (const auto& tok : tokenize(it->second)) label += (label.empty() ? "" : " ") + tok;
        if (!label.empty()) u.profession = label;
    }
    return out;
}

FeedbackResult feedback_from_session(const Session& session) {
    FeedbackResult out;
    if (session.captures.count("deny")) out.completed = false;
    else if (session.captures.count("affirm")) out.completed = true;

    if (auto it = session.captures.find("motivation"); it != session.captures.end()) {
        static const std::map<std::string, int, std::less<>> words = {
            {"one", 1}, {"two", 2}, {"three", 3}, {"four", 4}, {"five", 5}};
        if (auto w = words.find(it->second); w != words.end()) {
            out.motivation = w->second;
        } else if (auto v = parse_number(it->second); v && *v >= 1 && *v <= 5 && std::floor(*v) == *v) {
            out.motivation = static_cast<int>(*v);
        }
    }
    if (auto it = session.answers.find("NOTES"); it != session.answers.end()) {
        auto text = std::string(detail::trim(it->second));
        if (!text.empty()) out.notes = text;
    }
    return out;
}

}  // namespace coachai::dialogue
