#include "coachai/dialogue/session.hpp"

#include <algorithm>

#include "coachai/dialogue/matcher.hpp"
#include "coachai/error.hpp"

namespace coachai::dialogue {

std::string_view to_string(Phase p) {
    switch (p) {
        case Phase::intake: return "INTAKE";
        case Phase::feedback: return "FEEDBACK";
        case Phase::idle: return "IDLE";
    }
    return "IDLE";
}

Phase phase_from_string(std::string_view text) {
    if (text == "INTAKE") return Phase::intake;
    if (text == "FEEDBACK") return Phase::feedback;
    if (text == "IDLE") return Phase::idle;
    throw Error(ErrorKind::parse, "unknown phase '" + std::string(text) + "'");
}

std::string_view to_string(Speaker s) { return s == Speaker::bot ? "bot" : "patient"; }

namespace {

const Rule& rule_at(const DialogueScript& script, const RuleRef& ref) {
    const auto* topic = script.find_topic(ref.topic);
    if (!topic || ref.index >= topic->rules.size())
        throw Error(ErrorKind::invalid_argument, "session refers to a rule missing from the script");
    return topic->rules[ref.index];
}

const std::string& gambit_topic(const Session& s) {
    return s.phase != Phase::idle && !s.home_topic.empty() ? s.home_topic : s.current_topic;
}

/// Fires the next unfired gambit of the gambit topic, if any.
std::optional<std::string> fire_next_gambit(Session& s, const DialogueScript& script) {
    const auto* topic = script.find_topic(gambit_topic(s));
    if (!topic) return std::nullopt;
    auto& fired = s.fired_gambits[topic->name];
    for (std::size_t i = 0; i < topic->rules.size(); ++i) {
        const auto& rule = topic->rules[i];
        if (rule.kind != RuleKind::gambit || fired.count(i)) continue;
        fired.insert(i);
        s.current_topic = topic->name;
        s.pending = RuleRef{topic->name, i};
        return rule.output;
    }
    return std::nullopt;
}

void merge_captures(Session& s, const std::map<std::string, std::string>& captures) {
    for (const auto& [name, value] : captures) {
        s.captures[name] = value;
        if (s.phase == Phase::intake &&
            std::find(std::begin(kIntakeFields), std::end(kIntakeFields), name) != std::end(kIntakeFields))
            s.intake_answers[name] = value;
    }
}

/// First responder in `topic` whose pattern matches.
std::optional<std::size_t> find_responder(const Topic& topic, std::span<const std::string> tokens,
                                          const DialogueScript& script, MatchResult& result) {
    for (std::size_t i = 0; i < topic.rules.size(); ++i) {
        const auto& rule = topic.rules[i];
        if (!rule.is_responder()) continue;
        auto m = match(*rule.pattern, tokens, script);
        if (m.matched) {
            result = std::move(m);
            return i;
        }
    }
    return std::nullopt;
}

void append(Session& s, Speaker who, std::string text, Timestamp now) {
    s.transcript.push_back({who, std::move(text), now});
}

}  // namespace

Turn begin_topic(Session session, const DialogueScript& script, std::string_view topic, Phase phase,
                 Timestamp now, const DialogueOptions& options, const std::set<std::string>& skip_labels) {
    const auto* t = script.find_topic(topic);
    if (!t) throw Error(ErrorKind::not_found, "script has no topic ~" + std::string(topic));
    session.phase = phase;
    session.current_topic = t->name;
    session.home_topic = t->name;
    session.pending.reset();
    session.fired_gambits.erase(t->name);
    for (std::size_t i = 0; i < t->rules.size(); ++i) {
        const auto& r = t->rules[i];
        if (r.kind == RuleKind::gambit && !r.label.empty() && skip_labels.contains(r.label))
            session.fired_gambits[t->name].insert(i);
    }
    session.captures.clear();
    session.answers.clear();
    auto opening = fire_next_gambit(session, script);
    std::string response = opening ? *opening : options.fallback_line;
    append(session, Speaker::bot, response, now);
    return {std::move(response), std::move(session)};
}

Turn advance(Session session, std::string_view input, const DialogueScript& script, Timestamp now,
             const DialogueOptions& options) {
    const auto tokens = tokenize(input);
    append(session, Speaker::patient, std::string(input), now);

    const auto pending = session.pending;
    session.pending.reset();

    std::optional<std::string> reply;
    if (pending) {
        const auto& rule = rule_at(script, *pending);
        if (!rule.label.empty()) session.answers[rule.label] = std::string(input);
        for (const auto& rj : rule.rejoinders) {
            auto m = match(rj.pattern, tokens, script);
            if (!m.matched) continue;
            merge_captures(session, m.captures);
            reply = rj.output;
            break;
        }
    }

    if (!reply) {
        MatchResult m;
        std::optional<RuleRef> hit;
        if (const auto* current = script.find_topic(session.current_topic)) {
            if (auto i = find_responder(*current, tokens, script, m)) hit = RuleRef{current->name, *i};
        }
        if (!hit) {
            for (const auto& topic : script.topics) {
                if (topic.name == session.current_topic) continue;
                if (auto i = find_responder(topic, tokens, script, m)) {
                    hit = RuleRef{topic.name, *i};
                    break;
                }
            }
        }
        if (hit) {
            session.current_topic = hit->topic;
            merge_captures(session, m.captures);
            const auto& rule = rule_at(script, *hit);
            if (!rule.rejoinders.empty()) session.pending = hit;
            reply = rule.output;
        }
    }

    std::string response;
    if (reply) {
        response = *reply;
        const bool chain = options.chain_in_structured_phases && session.phase != Phase::idle;
        // A silent responder (no output text) hands over to the next gambit.
        if (chain || response.empty()) {
            if (!session.pending || response.empty()) {
                if (auto next = fire_next_gambit(session, script)) {
                    response = response.empty() ? *next : response + " " + *next;
                }
            }
        }
        if (response.empty()) response = options.fallback_line;
    } else if (auto next = fire_next_gambit(session, script)) {
        response = *next;
    } else {
        response = options.fallback_line;
    }

    append(session, Speaker::bot, response, now);
    return {std::move(response), std::move(session)};
}

void transition(Session& session, Phase next) {
    const auto from = session.phase;
    const bool ok = (from == Phase::intake && next == Phase::idle) ||
                    (from == Phase::idle && next == Phase::feedback) ||
                    (from == Phase::feedback && next == Phase::idle);
    if (!ok)
        throw Error(ErrorKind::conflict, "illegal phase transition " + std::string(to_string(from)) + " -> " +
                                             std::string(to_string(next)));
    session.phase = next;
}

bool topic_exhausted(const Session& session, const DialogueScript& script) {
    const auto* topic = script.find_topic(gambit_topic(session));
    if (!topic) return true;
    if (session.pending && !rule_at(script, *session.pending).rejoinders.empty()) return false;
    auto it = session.fired_gambits.find(topic->name);
    for (std::size_t i = 0; i < topic->rules.size(); ++i) {
        if (topic->rules[i].kind != RuleKind::gambit) continue;
        if (it == session.fired_gambits.end() || !it->second.count(i)) return false;
    }
    return true;
}

bool requeue_gambit(Session& session, const DialogueScript& script, std::string_view label) {
    const auto* topic = script.find_topic(gambit_topic(session));
    if (!topic) return false;
    for (std::size_t i = 0; i < topic->rules.size(); ++i) {
        const auto& rule = topic->rules[i];
        if (rule.kind == RuleKind::gambit && rule.label == label) {
            session.fired_gambits[topic->name].erase(i);
            return true;
        }
    }
    return false;
}

// ---------------------------------------------------------------------------
// JSON

void to_json(nlohmann::json& j, const Session& s) {
    auto transcript = nlohmann::json::array();
    for (const auto& e : s.transcript)
        transcript.push_back({{"speaker", to_string(e.speaker)}, {"text", e.text}, {"at", e.at}});
    nlohmann::json fired = nlohmann::json::object();
    for (const auto& [topic, set] : s.fired_gambits) fired[topic] = set;
    j = nlohmann::json{{"patient_id", s.patient_id},
                       {"phase", to_string(s.phase)},
                       {"current_topic", s.current_topic},
                       {"home_topic", s.home_topic},
                       {"fired_gambits", fired},
                       {"captures", s.captures},
                       {"answers", s.answers},
                       {"transcript", transcript},
                       {"intake_answers", s.intake_answers}};
    j["pending"] = s.pending ? nlohmann::json{{"topic", s.pending->topic}, {"index", s.pending->index}}
                             : nlohmann::json();
}

void from_json(const nlohmann::json& j, Session& s) {
    s.patient_id = j.at("patient_id").get<std::string>();
    s.phase = phase_from_string(j.at("phase").get<std::string>());
    s.current_topic = j.value("current_topic", std::string{});
    s.home_topic = j.value("home_topic", std::string{});
    s.pending.reset();
    if (j.contains("pending") && !j["pending"].is_null())
        s.pending = RuleRef{j["pending"].at("topic").get<std::string>(), j["pending"].at("index").get<std::size_t>()};
    s.fired_gambits.clear();
    for (const auto& [topic, set] : j.at("fired_gambits").items())
        s.fired_gambits[topic] = set.get<std::set<std::size_t>>();
    s.captures = j.value("captures", std::map<std::string, std::string>{});
    s.answers = j.value("answers", std::map<std::string, std::string>{});
    s.intake_answers = j.value("intake_answers", std::map<std::string, std::string>{});
    s.transcript.clear();
    for (const auto& e : j.at("transcript")) {
        s.transcript.push_back({e.at("speaker").get<std::string>() == "bot" ? Speaker::bot : Speaker::patient,
                                e.at("text").get<std::string>(), e.at("at").get<Timestamp>()});
    }
}

}  // namespace coachai::dialogue
