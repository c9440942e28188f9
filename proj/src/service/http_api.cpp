#include "coachai/service/http_api.hpp"

#include <regex>

#include <httplib.h>

#include "coachai/error.hpp"

namespace coachai::service {

namespace {

nlohmann::json error_body(std::string_view kind, const std::string& message) {
    return {{"error", {{"kind", kind}, {"message", message}}}};
}

std::string_view kind_name(ErrorKind k) {
    switch (k) {
        case ErrorKind::invalid_argument: return "invalid_argument";
        case ErrorKind::not_found: return "not_found";
        case ErrorKind::conflict: return "conflict";
        case ErrorKind::validation: return "validation";
        case ErrorKind::parse: return "parse";
        case ErrorKind::io: return "io";
    }
    return "error";
}

nlohmann::json parse_body(const std::string& body) {
    if (body.empty()) return nlohmann::json::object();
    try {
        return nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::invalid_argument, std::string("malformed JSON body: ") + e.what());
    }
}

nlohmann::json transcript_view(const dialogue::Session& s) {
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& e : s.transcript)
        entries.push_back({{"speaker", dialogue::to_string(e.speaker)}, {"text", e.text}, {"at", e.at}});
    return {{"patient_id", s.patient_id}, {"phase", dialogue::to_string(s.phase)}, {"entries", entries}};
}

nlohmann::json snapshot_view(const ModelSnapshot& snap) {
    const auto& g = snap.groups;
    std::map<std::size_t, std::size_t> high_label;
    if (g.high_model)
        for (std::size_t i = 0; i < g.high_members.size(); ++i) high_label[g.high_members[i]] = g.high_model->labels[i];
    nlohmann::json members = nlohmann::json::array();
    for (std::size_t i = 0; i < g.members.size(); ++i) {
        const auto& m = g.members[i];
        nlohmann::json row = {{"id", m.id},
                              {"vector", m.vector},
                              {"band", to_string(m.band)},
                              {"cluster", g.band_model.labels[i]}};
        if (auto it = high_label.find(i); it != high_label.end()) row["high_cluster"] = it->second;
        members.push_back(std::move(row));
    }
    std::vector<std::string> features(std::begin(kFeatureNames), std::end(kFeatureNames));
    return {{"snapshot_id", snap.id},
            {"created_at", snap.created_at},
            {"feature_names", features},
            {"normalization", g.normalization},
            {"members", members},
            {"band_model", g.band_model},
            {"cluster_sizes", g.band_model.cluster_sizes()},
            {"high_model", g.high_model ? nlohmann::json(*g.high_model) : nlohmann::json(nullptr)},
            {"config", snap.config}};
}

}  // namespace

int status_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::not_found: return 404;
        case ErrorKind::conflict: return 409;
        case ErrorKind::validation: return 422;
        case ErrorKind::io: return 500;
        default: return 400;
    }
}

nlohmann::json patient_summary(const PatientProfile& p, const dialogue::Session& s, const RecommenderConfig& cfg) {
    const auto band = adherence_score(p.adherence_history, cfg.adherence_window, cfg.thresholds);
    nlohmann::json last = nullptr;
    for (auto it = p.adherence_history.rbegin(); it != p.adherence_history.rend(); ++it) {
        last = {{"activity_id", it->activity_id}, {"assigned_at", it->assigned_at},
                {"completed", it->completed},     {"pending", it->pending}};
        break;
    }
    return {{"id", p.id},
            {"external_ref", p.external_ref},
            {"name", p.name},
            {"complete", p.complete()},
            {"missing_fields", p.missing_fields()},
            {"band", to_string(band.band)},
            {"adherence_score", band.score ? nlohmann::json(*band.score) : nlohmann::json(nullptr)},
            {"last_activity", last},
            {"phase", dialogue::to_string(s.phase)}};
}

ApiResponse Api::handle(const ApiRequest& request) const {
    try {
        if (request.path != "/v1/health" && service_.config().bearer_token) {
            if (request.authorization != "Bearer " + *service_.config().bearer_token)
                return {401, error_body("unauthorized", "missing or wrong bearer token")};
        }
        return dispatch(request);
    } catch (const Error& e) {
        return {status_for(e.kind()), error_body(kind_name(e.kind()), e.what())};
    } catch (const nlohmann::json::exception& e) {
        return {400, error_body("invalid_argument", e.what())};
    } catch (const std::exception& e) {
        return {500, error_body("internal", e.what())};
    }
}

ApiResponse Api::dispatch(const ApiRequest& r) const {
    static const std::regex patient_re(R"(^/v1/patients/([^/]+)$)");
    static const std::regex patient_sub_re(R"(^/v1/patients/([^/]+)/(recommendations|transcript|feedback)$)");
    static const std::regex case_re(R"(^/v1/cases/([^/]+)$)");
    static const std::regex decision_re(R"(^/v1/cases/([^/]+)/decision$)");
    const bool get = r.method == "GET";
    const bool post = r.method == "POST";
    std::smatch m;

    if (r.path == "/v1/health" && get) return {200, {{"status", "ok"}}};
    if (r.path == "/v1/patients") {
        if (post) {
            const auto reg = parse_body(r.body).get<Registration>();
            const auto res = service_.register_patient(reg);
            return {201, {{"patient_id", res.patient_id},
                          {"session_key", res.session_key},
                          {"first_message", res.first_message}}};
        }
        if (get) {
            nlohmann::json rows = nlohmann::json::array();
            for (const auto& p : service_.list_patients())
                rows.push_back(patient_summary(p, service_.get_session(p.id), service_.config().recommender));
            return {200, rows};
        }
    }
    if (std::regex_match(r.path, m, patient_re) && get) {
        const auto p = service_.get_patient(m[1]);
        nlohmann::json body = p;
        body["summary"] = patient_summary(p, service_.get_session(p.id), service_.config().recommender);
        return {200, body};
    }
    if (std::regex_match(r.path, m, patient_sub_re)) {
        const std::string id = m[1];
        const std::string what = m[2];
        if (what == "recommendations" && get) return {200, service_.get_recommendations(id)};
        if (what == "transcript" && get) return {200, transcript_view(service_.get_session(id))};
        if (what == "feedback" && post) return {200, service_.request_feedback(id)};
    }
    if (r.path == "/v1/chat/webhook" && post) {
        const auto body = parse_body(r.body);
        ChatInbound msg;
        try {
            msg = body.get<ChatInbound>();
        } catch (const nlohmann::json::exception&) {
            throw Error(ErrorKind::validation, "webhook body needs session_key and text");
        }
        return {200, service_.chat_webhook(msg)};
    }
    if (r.path == "/v1/models/refresh" && post) return {200, {{"snapshot_id", service_.refresh_models()}}};
    if (r.path == "/v1/clusters/latest" && get) {
        auto snap = service_.latest_snapshot();
        if (!snap) throw Error(ErrorKind::not_found, "no model snapshot yet");
        return {200, snapshot_view(*snap)};
    }
    if (r.path == "/v1/cases" && get) {
        std::optional<CaseStatus> status;
        if (auto it = r.query.find("status"); it != r.query.end()) {
            try {
                status = case_status_from_string(it->second);
            } catch (const std::exception&) {
                throw Error(ErrorKind::validation, "unknown case status " + it->second);
            }
        }
        return {200, service_.list_cases(status)};
    }
    if (std::regex_match(r.path, m, case_re) && get) return {200, service_.get_case(m[1])};
    if (std::regex_match(r.path, m, decision_re) && post) {
        const auto body = parse_body(r.body);
        if (!body.contains("decision") || !body["decision"].is_string())
            throw Error(ErrorKind::validation, "decision is required");
        std::optional<std::string> activity, note;
        if (body.contains("activity_id") && body["activity_id"].is_string()) activity = body["activity_id"];
        if (body.contains("note") && body["note"].is_string()) note = body["note"];
        const auto d = decision_from_string(body["decision"].get<std::string>());
        return {200, service_.decide(m[1], d, activity, note)};
    }
    if (r.path == "/v1/notifications" && get) return {200, service_.notifications()};
    if (r.path == "/v1/decisions" && get) return {200, service_.decision_log()};
    return {404, error_body("not_found", "no route " + r.method + " " + r.path)};
}

struct HttpServer::Impl {
    explicit Impl(CoachService& s) : api(s) {}
    Api api;
    httplib::Server server;
};

HttpServer::HttpServer(CoachService& service) : impl_(std::make_unique<Impl>(service)) {
    auto handler = [this](const httplib::Request& req, httplib::Response& res) {
        ApiRequest r{req.method, req.path, {}, req.body, req.get_header_value("Authorization")};
        for (const auto& [k, v] : req.params) r.query[k] = v;
        const auto out = impl_->api.handle(r);
        res.status = out.status;
        res.set_content(out.body.dump(), "application/json");
    };
    impl_->server.Get(R"(/v1/.*)", handler);
    impl_->server.Post(R"(/v1/.*)", handler);
}

HttpServer::~HttpServer() = default;

bool HttpServer::listen(const std::string& host, int port) {
    if (bind(host, port) < 0) return false;
    return serve();
}

int HttpServer::bind(const std::string& host, int port) {
    if (port == 0) port_ = impl_->server.bind_to_any_port(host);
    else port_ = impl_->server.bind_to_port(host, port) ? port : -1;
    return port_;
}

bool HttpServer::serve() { return impl_->server.listen_after_bind(); }

void HttpServer::stop() { impl_->server.stop(); }

}  // namespace coachai::service
