#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "coachai/dialogue/script.hpp"
#include "coachai/patient.hpp"

namespace coachai::dialogue {

enum class Phase { intake, feedback, idle };
enum class Speaker { patient, bot };

std::string_view to_string(Phase p);
Phase phase_from_string(std::string_view text);
std::string_view to_string(Speaker s);

struct TranscriptEntry {
    Speaker speaker = Speaker::bot;
    std::string text;
    Timestamp at = 0;

    bool operator==(const TranscriptEntry&) const = default;
};

/// A rule addressed by topic name and position within the topic.
struct RuleRef {
    std::string topic;
    std::size_t index = 0;

    bool operator==(const RuleRef&) const = default;
};

/// Capture names that feed the intake profile.
inline constexpr std::string_view kIntakeFields[] = {
    "age", "bmi", "height_cm", "weight_kg", "diet", "sleep_hours", "activity_level", "profession",
};

/// Per-patient conversation state. Sessions are plain values; advance()
/// takes one and returns the next.
struct Session {
    std::string patient_id;
    Phase phase = Phase::idle;
    std::string current_topic;
    // Topic that owns the structured phase. Gambits come from here while
    // the phase is INTAKE or FEEDBACK, even after a side question.
    std::string home_topic;
    std::optional<RuleRef> pending;  // last fired rule whose rejoinders are armed
    std::map<std::string, std::set<std::size_t>> fired_gambits;
    std::map<std::string, std::string> captures;
    // Raw reply to each labelled gambit, keyed by label.
    std::map<std::string, std::string> answers;
    std::vector<TranscriptEntry> transcript;
    std::map<std::string, std::string> intake_answers;

    bool operator==(const Session&) const = default;
};

struct DialogueOptions {
    std::string fallback_line = "Sorry, I didn't quite get that. Could you say it another way?";
    // Follow a matched reply with the topic's next gambit. Enabled for the
    // structured intake and feedback phases only.
    bool chain_in_structured_phases = true;
};

struct Turn {
    std::string response;
    Session session;
};

/// Enters `topic` in `phase`, resets its gambits, captures and answers, and
/// fires its first gambit (appended to the transcript as a bot line).
/// Gambits labelled in `skip_labels` start out as already fired.
Turn begin_topic(Session session, const DialogueScript& script, std::string_view topic, Phase phase,
                 Timestamp now, const DialogueOptions& options = {},
                 const std::set<std::string>& skip_labels = {});

/// One conversational turn. Resolution order: the pending rule's rejoinders,
/// the current topic's responders, other topics' responders (switching topic
/// on a match), the current topic's next unfired gambit, the fallback line.
Turn advance(Session session, std::string_view input, const DialogueScript& script, Timestamp now,
             const DialogueOptions& options = {});

/// INTAKE -> IDLE and IDLE <-> FEEDBACK only; throws Error(conflict) otherwise.
void transition(Session& session, Phase next);

/// No unfired gambit left in the gambit topic (home topic in structured
/// phases, else current) and nothing awaiting a reply.
bool topic_exhausted(const Session& session, const DialogueScript& script);

/// Marks the gambit topic's gambit `label` unfired so it is asked again.
/// Returns false when no such gambit exists.
bool requeue_gambit(Session& session, const DialogueScript& script, std::string_view label);

void to_json(nlohmann::json& j, const Session& s);
void from_json(const nlohmann::json& j, Session& s);

}  // namespace coachai::dialogue
