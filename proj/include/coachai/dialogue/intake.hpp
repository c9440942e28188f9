#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "coachai/dialogue/session.hpp"
#include "coachai/patient.hpp"

namespace coachai::dialogue {

/// Categorical answer -> numeric feature tables.
struct IntakeTables {
    std::map<std::string, double, std::less<>> diet;      // -> diet_score
    std::map<std::string, double, std::less<>> activity;  // -> activity_level

    static IntakeTables defaults();
};

struct ProfileUpdate {
    std::optional<double> age;
    std::optional<double> bmi;
    std::optional<double> diet_score;
    std::optional<double> sleep_hours;
    std::optional<double> activity_level;
    std::optional<std::string> profession;

    bool empty() const;
    void apply_to(PatientProfile& profile) const;

    bool operator==(const ProfileUpdate&) const = default;
};

struct IntakeResult {
    ProfileUpdate update;
    // Fields whose answer was out of range or unrecognized; each should be
    // asked again through the gambit labelled gambit_label_for(field).
    std::vector<std::string> reask;
};

/// Converts the session's intake answers into profile fields. Unanswered
/// fields stay absent. Throws Error(conflict) outside the INTAKE phase.
IntakeResult intake_to_profile(const Session& session, const IntakeTables& tables = IntakeTables::defaults());

/// "sleep_hours" -> "SLEEP_HOURS".
std::string gambit_label_for(std::string_view field);

struct FeedbackResult {
    std::optional<bool> completed;
    std::optional<int> motivation;
    std::optional<std::string> notes;
};

/// Reads the feedback phase's answers: the "affirm"/"deny" captures, the
/// "motivation" capture (1-5) and the raw reply to the NOTES gambit.
FeedbackResult feedback_from_session(const Session& session);

}  // namespace coachai::dialogue
