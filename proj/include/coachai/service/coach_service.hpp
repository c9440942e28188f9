#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "coachai/dialogue/intake.hpp"
#include "coachai/dialogue/script.hpp"
#include "coachai/dialogue/session.hpp"
#include "coachai/ontology.hpp"
#include "coachai/patient.hpp"
#include "coachai/recommender.hpp"
#include "coachai/service/config.hpp"
#include "coachai/service/messaging.hpp"
#include "coachai/service/store.hpp"

namespace coachai::service {

using Clock = std::function<Timestamp()>;

/// Wall clock in milliseconds.
Timestamp system_now();

/// Deterministic clock: start, start + step, start + 2*step, ...
Clock logical_clock(Timestamp start = 0, Timestamp step = 1000);

/// Static inputs the service is built from.
struct Resources {
    dialogue::DialogueScript script;
    ActivityOntology ontology;
    ProfessionMap professions;
    dialogue::IntakeTables intake_tables = dialogue::IntakeTables::defaults();

    /// Loads script (with the optional concept library), ontology and
    /// profession table from the paths in `cfg`.
    static Resources load(const ServiceConfig& cfg);
};

struct Registration {
    std::string external_ref;
    std::string name;
    std::optional<double> age;
    std::optional<std::string> profession;
    std::optional<double> bmi;
    std::optional<double> diet_score;
    std::optional<double> sleep_hours;
    std::optional<double> activity_level;
    std::set<std::string> health_flags;
};

struct RegistrationResult {
    std::string patient_id;
    std::string session_key;
    ChatOutbound first_message;
};

struct ModelSnapshot {
    std::string id;
    Timestamp created_at = 0;
    RecommenderConfig config;
    AdherenceGroupModel groups;
    // Adherence-history length per patient when the snapshot was taken.
    std::map<std::string, std::size_t> record_counts;
};

enum class Decision { accept, reject };

struct DecisionLogEntry {
    std::uint64_t seq = 0;
    std::string case_id;
    std::string patient_id;
    Decision decision = Decision::accept;
    std::optional<std::string> activity_id;
    std::optional<std::string> note;
    Timestamp at = 0;
};

struct Notification {
    std::string id;
    std::string patient_id;
    std::string kind;  // "intake_complete" | "feedback"
    Timestamp at = 0;
    nlohmann::json detail = nlohmann::json::object();
};

void to_json(nlohmann::json& j, const Registration& r);
void from_json(const nlohmann::json& j, Registration& r);
void to_json(nlohmann::json& j, const ModelSnapshot& s);
void from_json(const nlohmann::json& j, ModelSnapshot& s);
std::string_view to_string(Decision d);
Decision decision_from_string(std::string_view text);
void to_json(nlohmann::json& j, const DecisionLogEntry& e);
void from_json(const nlohmann::json& j, DecisionLogEntry& e);
void to_json(nlohmann::json& j, const Notification& n);
void from_json(const nlohmann::json& j, Notification& n);

/// The coach-in-the-loop workflow: intake chat, model refresh,
/// recommendation cases, coach decisions and feedback. All operations are
/// serialized through one writer lock; reads share it.
class CoachService {
public:
    CoachService(ServiceConfig cfg, Resources resources, Store store, Clock clock = system_now,
                 std::shared_ptr<MessageSink> sink = nullptr);

    /// Opens the store at cfg.data_dir and loads resources from cfg paths.
    static std::unique_ptr<CoachService> open(const ServiceConfig& cfg, Clock clock = system_now,
                                              std::shared_ptr<MessageSink> sink = nullptr);

    RegistrationResult register_patient(const Registration& reg);
    /// Adds a profile wholesale (history included); used to seed cohorts.
    /// The returned id replaces profile.id. No chat session is opened beyond
    /// an IDLE one.
    std::string import_patient(PatientProfile profile);

    ChatOutbound chat_webhook(const ChatInbound& message);
    /// Starts the feedback conversation about the patient's open assignment.
    ChatOutbound request_feedback(const std::string& patient_id);

    /// Rebuilds the group model from all complete profiles; returns the
    /// new snapshot id.
    std::string refresh_models();
    /// The patient's open case, or a fresh one (refreshing a stale model).
    RecommendationCase get_recommendations(const std::string& patient_id);
    RecommendationCase decide(const std::string& case_id, Decision decision,
                              const std::optional<std::string>& activity_id, const std::optional<std::string>& note);

    PatientProfile get_patient(const std::string& id) const;
    std::vector<PatientProfile> list_patients() const;
    dialogue::Session get_session(const std::string& patient_id) const;
    std::optional<ModelSnapshot> latest_snapshot() const;
    std::vector<RecommendationCase> list_cases(std::optional<CaseStatus> status = std::nullopt) const;
    RecommendationCase get_case(const std::string& id) const;
    std::vector<Notification> notifications() const;
    std::vector<DecisionLogEntry> decision_log() const;
    std::vector<ChatOutbound> outbox() const;

    /// Throws Error(validation) describing the first broken cross-reference.
    void check_integrity() const;
    nlohmann::json dump_state() const;
    void compact();

    const ServiceConfig& config() const { return cfg_; }
    const Resources& resources() const { return res_; }
    Timestamp now() const { return clock_(); }

    static std::string session_key_for(const std::string& patient_id) { return "chat-" + patient_id; }

private:
    PatientProfile load_patient(const std::string& id) const;
    void save_patient(const PatientProfile& p);
    dialogue::Session load_session(const std::string& key) const;
    void save_session(const std::string& key, const dialogue::Session& s);
    std::optional<ModelSnapshot> latest_snapshot_locked() const;
    bool snapshot_stale(const std::optional<ModelSnapshot>& snap) const;
    std::string refresh_locked();
    std::string next_id(std::string_view collection, std::string_view prefix) const;
    ChatOutbound outbound(const std::string& key, const dialogue::Session& s, std::string text) const;
    void send(const ChatOutbound& msg);
    void notify(const std::string& patient_id, std::string kind, nlohmann::json detail);
    void finish_intake(PatientProfile& patient, dialogue::Session& s);
    void finish_feedback(PatientProfile& patient, dialogue::Session& s);

    ServiceConfig cfg_;
    Resources res_;
    Store store_;
    Clock clock_;
    std::shared_ptr<MessageSink> sink_;
    dialogue::DialogueOptions dialogue_options_;
    mutable std::shared_mutex mu_;
};

}  // namespace coachai::service
