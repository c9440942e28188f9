#include "coachai/service/coach_service.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>

#include "coachai/error.hpp"
#include "../text_util.hpp"

namespace coachai::service {

namespace {

constexpr std::string_view kPatients = "patients";
constexpr std::string_view kSessions = "sessions";
constexpr std::string_view kCases = "cases";
constexpr std::string_view kSnapshots = "snapshots";
constexpr std::string_view kDecisions = "decisions";
constexpr std::string_view kNotifications = "notifications";
constexpr std::string_view kOutbox = "outbox";

// Profile field -> intake gambit label.
const std::map<std::string, std::string, std::less<>> kFieldGambits = {
    {"age", "AGE"},           {"bmi", "BMI"},
    {"diet_score", "DIET"},   {"sleep_hours", "SLEEP_HOURS"},
    {"activity_level", "ACTIVITY_LEVEL"}, {"profession", "PROFESSION"},
};

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::size_t resolved_records(const PatientProfile& p) {
    return static_cast<std::size_t>(std::count_if(p.adherence_history.begin(), p.adherence_history.end(),
                                                  [](const AdherenceRecord& r) { return !r.pending; }));
}

AdherenceRecord* open_assignment(PatientProfile& p) {
    for (auto it = p.adherence_history.rbegin(); it != p.adherence_history.rend(); ++it)
        if (it->pending) return &*it;
    return nullptr;
}

const dialogue::Rule* rule_for(const dialogue::DialogueScript& script, const dialogue::RuleRef& ref) {
    const auto* t = script.find_topic(ref.topic);
    if (!t || ref.index >= t->rules.size()) return nullptr;
    return &t->rules[ref.index];
}

// True when the gambit labelled `label` in `topic` has fired and is not the
// one currently awaiting a reply.
bool gambit_done(const dialogue::Session& s, const dialogue::DialogueScript& script, std::string_view topic,
                 std::string_view label) {
    const auto* t = script.find_topic(topic);
    if (!t) return false;
    for (std::size_t i = 0; i < t->rules.size(); ++i) {
        if (t->rules[i].kind != dialogue::RuleKind::gambit || t->rules[i].label != label) continue;
        auto f = s.fired_gambits.find(t->name);
        const bool fired = f != s.fired_gambits.end() && f->second.contains(i);
        const bool awaiting = s.pending && s.pending->topic == t->name && s.pending->index == i;
        return fired && !awaiting;
    }
    return false;
}

}  // namespace

Timestamp system_now() {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
}

Clock logical_clock(Timestamp start, Timestamp step) {
    auto t = std::make_shared<Timestamp>(start - step);
    return [t, step] { return *t += step; };
}

Resources Resources::load(const ServiceConfig& cfg) {
    Resources r;
    dialogue::ConceptLibrary library;
    if (!cfg.concepts_path.empty() && std::filesystem::exists(cfg.concepts_path))
        library = dialogue::parse_concept_library(read_file(cfg.concepts_path));
    r.script = dialogue::parse_script(read_file(cfg.script_path), library);
    r.ontology = load_ontology_file(cfg.ontology_path);
    if (!cfg.professions_path.empty()) r.professions = ProfessionMap::load(cfg.professions_path);
    for (const auto& topic : {cfg.intake_topic, cfg.feedback_topic})
        if (!r.script.find_topic(topic))
            throw Error(ErrorKind::validation, "dialogue script has no topic ~" + topic);
    return r;
}

// ---- JSON -------------------------------------------------------------------

void to_json(nlohmann::json& j, const Registration& r) {
    auto opt = [](const auto& o) { return o ? nlohmann::json(*o) : nlohmann::json(nullptr); };
    j = {{"external_ref", r.external_ref}, {"name", r.name},     {"age", opt(r.age)},
         {"profession", opt(r.profession)}, {"bmi", opt(r.bmi)}, {"diet_score", opt(r.diet_score)},
         {"sleep_hours", opt(r.sleep_hours)}, {"activity_level", opt(r.activity_level)},
         {"health_flags", r.health_flags}};
}

void from_json(const nlohmann::json& j, Registration& r) {
    if (!j.is_object()) throw Error(ErrorKind::validation, "registration must be an object");
    auto str = [&](const char* key) -> std::string {
        if (!j.contains(key) || !j[key].is_string()) throw Error(ErrorKind::validation, std::string(key) + " is required");
        return j[key].get<std::string>();
    };
    auto num = [&](const char* key) -> std::optional<double> {
        if (!j.contains(key) || j[key].is_null()) return std::nullopt;
        if (!j[key].is_number()) throw Error(ErrorKind::validation, std::string(key) + " must be a number");
        return j[key].get<double>();
    };
    r.external_ref = str("external_ref");
    r.name = str("name");
    r.age = num("age");
    r.bmi = num("bmi");
    r.diet_score = num("diet_score");
    r.sleep_hours = num("sleep_hours");
    r.activity_level = num("activity_level");
    if (j.contains("profession") && !j["profession"].is_null()) r.profession = j["profession"].get<std::string>();
    r.health_flags = j.value("health_flags", std::set<std::string>{});
}

void to_json(nlohmann::json& j, const ModelSnapshot& s) {
    j = {{"version", 1},       {"id", s.id},         {"created_at", s.created_at},
         {"config", s.config}, {"groups", s.groups}, {"record_counts", s.record_counts}};
}

void from_json(const nlohmann::json& j, ModelSnapshot& s) {
    s.id = j.at("id").get<std::string>();
    s.created_at = j.at("created_at").get<Timestamp>();
    s.config = j.at("config").get<RecommenderConfig>();
    s.groups = j.at("groups").get<AdherenceGroupModel>();
    s.record_counts = j.at("record_counts").get<std::map<std::string, std::size_t>>();
}

std::string_view to_string(Decision d) { return d == Decision::accept ? "ACCEPT" : "REJECT"; }

Decision decision_from_string(std::string_view text) {
    if (text == "ACCEPT") return Decision::accept;
    if (text == "REJECT") return Decision::reject;
    throw Error(ErrorKind::validation, "decision must be ACCEPT or REJECT");
}

void to_json(nlohmann::json& j, const DecisionLogEntry& e) {
    j = {{"seq", e.seq},
         {"case_id", e.case_id},
         {"patient_id", e.patient_id},
         {"decision", to_string(e.decision)},
         {"activity_id", e.activity_id ? nlohmann::json(*e.activity_id) : nlohmann::json(nullptr)},
         {"note", e.note ? nlohmann::json(*e.note) : nlohmann::json(nullptr)},
         {"at", e.at}};
}

void from_json(const nlohmann::json& j, DecisionLogEntry& e) {
    e.seq = j.at("seq").get<std::uint64_t>();
    e.case_id = j.at("case_id").get<std::string>();
    e.patient_id = j.at("patient_id").get<std::string>();
    e.decision = decision_from_string(j.at("decision").get<std::string>());
    if (!j.at("activity_id").is_null()) e.activity_id = j["activity_id"].get<std::string>();
    if (!j.at("note").is_null()) e.note = j["note"].get<std::string>();
    e.at = j.at("at").get<Timestamp>();
}

void to_json(nlohmann::json& j, const Notification& n) {
    j = {{"id", n.id}, {"patient_id", n.patient_id}, {"kind", n.kind}, {"at", n.at}, {"detail", n.detail}};
}

void from_json(const nlohmann::json& j, Notification& n) {
    n.id = j.at("id").get<std::string>();
    n.patient_id = j.at("patient_id").get<std::string>();
    n.kind = j.at("kind").get<std::string>();
    n.at = j.at("at").get<Timestamp>();
    n.detail = j.value("detail", nlohmann::json::object());
}

// ---- service ----------------------------------------------------------------

CoachService::CoachService(ServiceConfig cfg, Resources resources, Store store, Clock clock,
                           std::shared_ptr<MessageSink> sink)
    : cfg_(std::move(cfg)),
      res_(std::move(resources)),
      store_(std::move(store)),
      clock_(std::move(clock)),
      sink_(std::move(sink)) {
    if (!clock_) clock_ = system_now;
}

std::unique_ptr<CoachService> CoachService::open(const ServiceConfig& cfg, Clock clock,
                                                 std::shared_ptr<MessageSink> sink) {
    auto res = Resources::load(cfg);
    Store store(cfg.data_dir, StoreOptions{cfg.fsync, cfg.compact_after});
    return std::make_unique<CoachService>(cfg, std::move(res), std::move(store), std::move(clock), std::move(sink));
}

std::string CoachService::next_id(std::string_view collection, std::string_view prefix) const {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%06zu", store_.size(collection) + 1);
    return std::string(prefix) + buf;
}

PatientProfile CoachService::load_patient(const std::string& id) const {
    auto doc = store_.get(kPatients, id);
    if (!doc) throw Error(ErrorKind::not_found, "no patient " + id);
    return doc->get<PatientProfile>();
}

void CoachService::save_patient(const PatientProfile& p) {
    validate(p);
    store_.put(kPatients, p.id, p);
}

dialogue::Session CoachService::load_session(const std::string& key) const {
    auto doc = store_.get(kSessions, key);
    if (!doc) throw Error(ErrorKind::not_found, "no chat session " + key);
    return doc->get<dialogue::Session>();
}

void CoachService::save_session(const std::string& key, const dialogue::Session& s) { store_.put(kSessions, key, s); }

ChatOutbound CoachService::outbound(const std::string& key, const dialogue::Session& s, std::string text) const {
    ChatOutbound out{key, std::move(text), {}};
    if (s.pending) {
        if (const auto* rule = rule_for(res_.script, *s.pending)) {
            if (auto it = cfg_.quick_replies.find(rule->label); it != cfg_.quick_replies.end())
                out.quick_replies = it->second;
        }
    }
    return out;
}

void CoachService::send(const ChatOutbound& msg) {
    nlohmann::json doc = msg;
    doc["at"] = clock_();
    store_.put(kOutbox, next_id(kOutbox, "msg-"), doc);
    if (sink_) sink_->deliver(msg);
}

void CoachService::notify(const std::string& patient_id, std::string kind, nlohmann::json detail) {
    Notification n{next_id(kNotifications, "note-"), patient_id, std::move(kind), clock_(), std::move(detail)};
    store_.put(kNotifications, n.id, n);
}

RegistrationResult CoachService::register_patient(const Registration& reg) {
    std::unique_lock lock(mu_);
    if (detail::trim(reg.external_ref).empty()) throw Error(ErrorKind::validation, "external_ref is required");
    if (detail::trim(reg.name).empty()) throw Error(ErrorKind::validation, "name is required");
    for (const auto& doc : store_.list(kPatients))
        if (doc.at("external_ref") == reg.external_ref)
            throw Error(ErrorKind::conflict, "external_ref " + reg.external_ref + " is already registered");

    PatientProfile p;
    p.id = next_id(kPatients, "p-");
    p.external_ref = reg.external_ref;
    p.name = reg.name;
    p.age = reg.age;
    p.profession = reg.profession;
    p.bmi = reg.bmi;
    p.diet_score = reg.diet_score;
    p.sleep_hours = reg.sleep_hours;
    p.activity_level = reg.activity_level;
    p.health_flags = reg.health_flags;
    validate(p);

    // Questions already answered at registration are not asked again.
    std::set<std::string> skip;
    const auto missing = p.missing_fields();
    for (const auto& [field, label] : kFieldGambits)
        if (std::find(missing.begin(), missing.end(), field) == missing.end()) skip.insert(label);

    dialogue::Session s;
    s.patient_id = p.id;
    auto turn = dialogue::begin_topic(std::move(s), res_.script, cfg_.intake_topic, dialogue::Phase::intake, clock_(),
                                      dialogue_options_, skip);
    s = std::move(turn.session);
    const auto key = session_key_for(p.id);
    if (dialogue::topic_exhausted(s, res_.script)) finish_intake(p, s);
    save_patient(p);
    save_session(key, s);
    return {p.id, key, outbound(key, s, turn.response)};
}

std::string CoachService::import_patient(PatientProfile profile) {
    std::unique_lock lock(mu_);
    for (const auto& doc : store_.list(kPatients))
        if (!profile.external_ref.empty() && doc.at("external_ref") == profile.external_ref)
            throw Error(ErrorKind::conflict, "external_ref " + profile.external_ref + " is already registered");
    for (const auto& r : profile.adherence_history)
        if (!res_.ontology.contains(r.activity_id))
            throw Error(ErrorKind::validation, "unknown activity " + r.activity_id);
    profile.id = next_id(kPatients, "p-");
    save_patient(profile);
    dialogue::Session s;
    s.patient_id = profile.id;
    s.phase = dialogue::Phase::idle;
    save_session(session_key_for(profile.id), s);
    return profile.id;
}

void CoachService::finish_intake(PatientProfile& patient, dialogue::Session& s) {
    dialogue::transition(s, dialogue::Phase::idle);
    notify(patient.id, "intake_complete",
           {{"complete", patient.complete()}, {"missing_fields", patient.missing_fields()}});
}

void CoachService::finish_feedback(PatientProfile& patient, dialogue::Session& s) {
    const auto fb = dialogue::feedback_from_session(s);
    nlohmann::json detail = {{"completed", fb.completed ? nlohmann::json(*fb.completed) : nlohmann::json(nullptr)},
                             {"motivation", fb.motivation ? nlohmann::json(*fb.motivation) : nlohmann::json(nullptr)},
                             {"notes", fb.notes ? nlohmann::json(*fb.notes) : nlohmann::json(nullptr)}};
    if (auto* rec = open_assignment(patient)) {
        rec->pending = false;
        rec->completed = fb.completed.value_or(false);
        rec->feedback_text = fb.notes;
        rec->motivation_rating = fb.motivation;
        detail["activity_id"] = rec->activity_id;
    }
    dialogue::transition(s, dialogue::Phase::idle);
    notify(patient.id, "feedback", std::move(detail));
}

ChatOutbound CoachService::chat_webhook(const ChatInbound& message) {
    std::unique_lock lock(mu_);
    auto s = load_session(message.session_key);
    if (detail::trim(message.text).empty()) throw Error(ErrorKind::validation, "empty message");
    auto patient = load_patient(s.patient_id);

    auto turn = dialogue::advance(std::move(s), message.text, res_.script, clock_(), dialogue_options_);
    s = std::move(turn.session);

    if (s.phase == dialogue::Phase::intake) {
        auto result = dialogue::intake_to_profile(s, res_.intake_tables);
        for (const auto& field : result.reask) {
            s.intake_answers.erase(field);
            s.captures.erase(field);
        }
        result.update.apply_to(patient);
        // Anything still missing whose question has passed gets asked again.
        for (const auto& field : patient.missing_fields()) {
            const auto& label = kFieldGambits.at(field);
            if (gambit_done(s, res_.script, s.home_topic, label)) dialogue::requeue_gambit(s, res_.script, label);
        }
        if (dialogue::topic_exhausted(s, res_.script)) finish_intake(patient, s);
    } else if (s.phase == dialogue::Phase::feedback) {
        const auto fb = dialogue::feedback_from_session(s);
        if (!fb.completed && gambit_done(s, res_.script, s.home_topic, "COMPLETED"))
            dialogue::requeue_gambit(s, res_.script, "COMPLETED");
        if (!fb.motivation && gambit_done(s, res_.script, s.home_topic, "MOTIVATION")) {
            s.captures.erase("motivation");
            dialogue::requeue_gambit(s, res_.script, "MOTIVATION");
        }
        if (dialogue::topic_exhausted(s, res_.script)) finish_feedback(patient, s);
    }
    save_patient(patient);
    save_session(message.session_key, s);
    return outbound(message.session_key, s, std::move(turn.response));
}

ChatOutbound CoachService::request_feedback(const std::string& patient_id) {
    std::unique_lock lock(mu_);
    auto patient = load_patient(patient_id);
    const auto key = session_key_for(patient_id);
    auto s = load_session(key);
    if (!open_assignment(patient)) throw Error(ErrorKind::conflict, "patient " + patient_id + " has no open assignment");
    dialogue::transition(s, dialogue::Phase::feedback);
    auto turn = dialogue::begin_topic(std::move(s), res_.script, cfg_.feedback_topic, dialogue::Phase::feedback,
                                      clock_(), dialogue_options_);
    s = std::move(turn.session);
    save_session(key, s);
    auto msg = outbound(key, s, turn.response);
    send(msg);
    return msg;
}

std::optional<ModelSnapshot> CoachService::latest_snapshot_locked() const {
    auto doc = store_.last(kSnapshots);
    if (!doc) return std::nullopt;
    return doc->get<ModelSnapshot>();
}

std::optional<ModelSnapshot> CoachService::latest_snapshot() const {
    std::shared_lock lock(mu_);
    return latest_snapshot_locked();
}

bool CoachService::snapshot_stale(const std::optional<ModelSnapshot>& snap) const {
    if (!snap) return true;
    for (const auto& doc : store_.list(kPatients)) {
        const auto p = doc.get<PatientProfile>();
        if (!p.complete()) continue;
        const auto it = snap->record_counts.find(p.id);
        const std::size_t before = it == snap->record_counts.end() ? 0 : it->second;
        if (resolved_records(p) != before) return true;
    }
    return false;
}

std::string CoachService::refresh_locked() {
    std::vector<PatientProfile> population;
    for (const auto& doc : store_.list(kPatients)) {
        auto p = doc.get<PatientProfile>();
        if (p.complete()) population.push_back(std::move(p));
    }
    if (population.empty()) throw Error(ErrorKind::invalid_argument, "no patients with complete features");
    ModelSnapshot snap;
    snap.id = next_id(kSnapshots, "snap-");
    snap.created_at = clock_();
    snap.config = cfg_.recommender;
    snap.groups = build_group_model(population, res_.professions, res_.ontology, cfg_.recommender);
    for (const auto& p : population) snap.record_counts[p.id] = resolved_records(p);
    store_.put(kSnapshots, snap.id, snap);
    return snap.id;
}

std::string CoachService::refresh_models() {
    std::unique_lock lock(mu_);
    return refresh_locked();
}

RecommendationCase CoachService::get_recommendations(const std::string& patient_id) {
    std::unique_lock lock(mu_);
    const auto patient = load_patient(patient_id);
    if (const auto missing = patient.missing_fields(); !missing.empty()) {
        std::string list;
        for (const auto& f : missing) list += (list.empty() ? "" : ", ") + f;
        throw Error(ErrorKind::validation, "intake incomplete: missing " + list);
    }
    for (const auto& doc : store_.list(kCases)) {
        if (doc.at("patient_id") == patient_id && doc.at("status") == "PENDING")
            return doc.get<RecommendationCase>();
    }
    auto snap = latest_snapshot_locked();
    if (snapshot_stale(snap)) {
        refresh_locked();
        snap = latest_snapshot_locked();
    }
    auto rc = recommend(patient, snap->groups, res_.professions, res_.ontology, cfg_.recommender, clock_());
    rc.id = next_id(kCases, "case-");
    rc.snapshot_id = snap->id;
    store_.put(kCases, rc.id, rc);
    return rc;
}

RecommendationCase CoachService::decide(const std::string& case_id, Decision decision,
                                        const std::optional<std::string>& activity_id,
                                        const std::optional<std::string>& note) {
    std::unique_lock lock(mu_);
    auto doc = store_.get(kCases, case_id);
    if (!doc) throw Error(ErrorKind::not_found, "no case " + case_id);
    auto rc = doc->get<RecommendationCase>();
    if (rc.status != CaseStatus::pending)
        throw Error(ErrorKind::conflict, "case " + case_id + " is already " + std::string(to_string(rc.status)));
    auto patient = load_patient(rc.patient_id);
    const auto now = clock_();

    if (decision == Decision::accept) {
        if (!activity_id) throw Error(ErrorKind::validation, "ACCEPT needs an activity_id");
        const bool listed = std::any_of(rc.candidates.begin(), rc.candidates.end(),
                                        [&](const Candidate& c) { return c.activity_id == *activity_id; });
        if (!listed) throw Error(ErrorKind::validation, "activity " + *activity_id + " is not a candidate of " + case_id);
        if (open_assignment(patient))
            throw Error(ErrorKind::conflict, "patient " + patient.id + " has an assignment awaiting feedback");
        Timestamp at = now;
        if (!patient.adherence_history.empty()) at = std::max(at, patient.adherence_history.back().assigned_at);
        patient.adherence_history.push_back({*activity_id, at, false, true, std::nullopt, std::nullopt});
        rc.status = CaseStatus::accepted;
        rc.accepted_activity = activity_id;
    } else {
        rc.status = CaseStatus::rejected;
    }
    rc.coach_note = note;
    rc.decided_at = now;

    DecisionLogEntry entry{store_.size(kDecisions) + 1, rc.id, rc.patient_id, decision,
                           decision == Decision::accept ? activity_id : std::nullopt, note, now};
    store_.put(kDecisions, "d-" + std::to_string(entry.seq), entry);
    save_patient(patient);
    store_.put(kCases, rc.id, rc);

    if (decision == Decision::accept) {
        const auto& a = res_.ontology.at(*activity_id);
        std::string text = "Your coach has a new activity for you: " + a.name + ", about " +
                           std::to_string(static_cast<int>(std::lround(a.typical_duration_min))) + " minutes.";
        if (note && !detail::trim(*note).empty()) text += " Note from your coach: " + *note;
        send({session_key_for(patient.id), std::move(text), {}});
    }
    return rc;
}

PatientProfile CoachService::get_patient(const std::string& id) const {
    std::shared_lock lock(mu_);
    return load_patient(id);
}

std::vector<PatientProfile> CoachService::list_patients() const {
    std::shared_lock lock(mu_);
    std::vector<PatientProfile> out;
    for (const auto& doc : store_.list(kPatients)) out.push_back(doc.get<PatientProfile>());
    return out;
}

dialogue::Session CoachService::get_session(const std::string& patient_id) const {
    std::shared_lock lock(mu_);
    load_patient(patient_id);
    return load_session(session_key_for(patient_id));
}

std::vector<RecommendationCase> CoachService::list_cases(std::optional<CaseStatus> status) const {
    std::shared_lock lock(mu_);
    std::vector<RecommendationCase> out;
    for (const auto& doc : store_.list(kCases)) {
        auto rc = doc.get<RecommendationCase>();
        if (!status || rc.status == *status) out.push_back(std::move(rc));
    }
    return out;
}

RecommendationCase CoachService::get_case(const std::string& id) const {
    std::shared_lock lock(mu_);
    auto doc = store_.get(kCases, id);
    if (!doc) throw Error(ErrorKind::not_found, "no case " + id);
    return doc->get<RecommendationCase>();
}

std::vector<Notification> CoachService::notifications() const {
    std::shared_lock lock(mu_);
    std::vector<Notification> out;
    for (const auto& doc : store_.list(kNotifications)) out.push_back(doc.get<Notification>());
    return out;
}

std::vector<DecisionLogEntry> CoachService::decision_log() const {
    std::shared_lock lock(mu_);
    std::vector<DecisionLogEntry> out;
    for (const auto& doc : store_.list(kDecisions)) out.push_back(doc.get<DecisionLogEntry>());
    return out;
}

std::vector<ChatOutbound> CoachService::outbox() const {
    std::shared_lock lock(mu_);
    std::vector<ChatOutbound> out;
    for (const auto& doc : store_.list(kOutbox)) out.push_back(doc.get<ChatOutbound>());
    return out;
}

void CoachService::check_integrity() const {
    std::shared_lock lock(mu_);
    auto fail = [](const std::string& msg) { throw Error(ErrorKind::validation, "integrity: " + msg); };

    std::set<std::string> patients;
    for (const auto& doc : store_.list(kPatients)) {
        const auto p = doc.get<PatientProfile>();
        patients.insert(p.id);
        validate(p);
        std::size_t open = 0;
        Timestamp last = std::numeric_limits<Timestamp>::min();
        for (const auto& r : p.adherence_history) {
            if (!res_.ontology.contains(r.activity_id)) fail(p.id + " references unknown activity " + r.activity_id);
            if (r.assigned_at < last) fail(p.id + " has out-of-order adherence records");
            last = r.assigned_at;
            open += r.pending ? 1 : 0;
        }
        if (open > 1) fail(p.id + " has " + std::to_string(open) + " open assignments");
        if (!store_.contains(kSessions, session_key_for(p.id))) fail(p.id + " has no chat session");
    }
    for (const auto& doc : store_.list(kSessions)) {
        const auto pid = doc.at("patient_id").get<std::string>();
        if (!patients.contains(pid)) fail("session for unknown patient " + pid);
    }
    std::set<std::string> snapshots;
    for (const auto& doc : store_.list(kSnapshots)) snapshots.insert(doc.at("id").get<std::string>());
    std::map<std::string, std::size_t> pending_cases;
    std::set<std::string> cases;
    for (const auto& doc : store_.list(kCases)) {
        const auto rc = doc.get<RecommendationCase>();
        cases.insert(rc.id);
        if (!patients.contains(rc.patient_id)) fail(rc.id + " references unknown patient " + rc.patient_id);
        if (!rc.snapshot_id.empty() && !snapshots.contains(rc.snapshot_id))
            fail(rc.id + " references unknown snapshot " + rc.snapshot_id);
        for (const auto& c : rc.candidates)
            if (!res_.ontology.contains(c.activity_id)) fail(rc.id + " lists unknown activity " + c.activity_id);
        if (rc.status == CaseStatus::accepted) {
            const bool listed = rc.accepted_activity &&
                                std::any_of(rc.candidates.begin(), rc.candidates.end(), [&](const Candidate& c) {
                                    return c.activity_id == *rc.accepted_activity;
                                });
            if (!listed) fail(rc.id + " accepted an activity outside its candidates");
        }
        if (rc.status == CaseStatus::pending && ++pending_cases[rc.patient_id] > 1)
            fail(rc.patient_id + " has more than one pending case");
    }
    std::uint64_t expected = 1;
    for (const auto& doc : store_.list(kDecisions)) {
        const auto e = doc.get<DecisionLogEntry>();
        if (e.seq != expected++) fail("decision log sequence broken at " + std::to_string(e.seq));
        if (!cases.contains(e.case_id)) fail("decision for unknown case " + e.case_id);
    }
}

nlohmann::json CoachService::dump_state() const {
    std::shared_lock lock(mu_);
    return store_.dump();
}

void CoachService::compact() {
    std::unique_lock lock(mu_);
    store_.compact();
}

}  // namespace coachai::service
