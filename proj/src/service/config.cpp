#include "coachai/service/config.hpp"

#include <cstdlib>
#include <fstream>

#include "coachai/error.hpp"

namespace coachai::service {

namespace {

std::optional<std::string> env(const char* name) {
    if (const char* v = std::getenv(name); v && *v) return std::string(v);
    return std::nullopt;
}

template <typename T, typename Parse>
void override_from(const char* name, T& target, Parse parse) {
    if (auto v = env(name)) {
        try {
            target = parse(*v);
        } catch (const std::exception&) {
            throw Error(ErrorKind::invalid_argument, std::string("bad value for ") + name + ": " + *v);
        }
    }
}

}  // namespace

ServiceConfig ServiceConfig::from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
    ServiceConfig c;
    c.host = j.value("host", c.host);
    c.port = j.value("port", c.port);
    if (j.contains("data_dir")) c.data_dir = j["data_dir"].get<std::string>();
    if (j.contains("script_path")) c.script_path = j["script_path"].get<std::string>();
    if (j.contains("concepts_path")) c.concepts_path = j["concepts_path"].get<std::string>();
    if (j.contains("ontology_path")) c.ontology_path = j["ontology_path"].get<std::string>();
    if (j.contains("professions_path")) c.professions_path = j["professions_path"].get<std::string>();
    c.intake_topic = j.value("intake_topic", c.intake_topic);
    c.feedback_topic = j.value("feedback_topic", c.feedback_topic);
    if (j.contains("recommender")) c.recommender = j["recommender"].get<RecommenderConfig>();
    if (j.contains("bearer_token") && !j["bearer_token"].is_null())
        c.bearer_token = j["bearer_token"].get<std::string>();
    c.fsync = j.value("fsync", c.fsync);
    c.compact_after = j.value("compact_after", c.compact_after);
    if (j.contains("quick_replies"))
        c.quick_replies = j["quick_replies"].get<std::map<std::string, std::vector<std::string>>>();
    c.resolve_paths(base_dir);
    return c;
}

ServiceConfig ServiceConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::io, "cannot open config " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::parse, "config " + path.string() + ": " + e.what());
    }
    return from_json(j, path.parent_path());
}

void ServiceConfig::resolve_paths(const std::filesystem::path& base) {
    for (auto* p : {&data_dir, &script_path, &concepts_path, &ontology_path, &professions_path}) {
        if (!p->empty() && p->is_relative()) *p = base / *p;
    }
}

void ServiceConfig::apply_environment() {
    auto to_size = [](const std::string& v) { return static_cast<std::size_t>(std::stoul(v)); };
    auto to_double = [](const std::string& v) { return std::stod(v); };
    override_from("COACHAI_PORT", port, [](const std::string& v) { return std::stoi(v); });
    override_from("COACHAI_HOST", host, [](const std::string& v) { return v; });
    override_from("COACHAI_DATA_DIR", data_dir, [](const std::string& v) { return std::filesystem::path(v); });
    override_from("COACHAI_SCRIPT_PATH", script_path, [](const std::string& v) { return std::filesystem::path(v); });
    override_from("COACHAI_ONTOLOGY_PATH", ontology_path,
                  [](const std::string& v) { return std::filesystem::path(v); });
    override_from("COACHAI_K", recommender.clustering.k, to_size);
    override_from("COACHAI_KNN_K", recommender.knn_k, to_size);
    override_from("COACHAI_DEDUP_THRESHOLD", recommender.dedup_threshold, to_double);
    override_from("COACHAI_ADHERENCE_HIGH", recommender.thresholds.high, to_double);
    override_from("COACHAI_ADHERENCE_MEDIUM", recommender.thresholds.medium, to_double);
    if (auto t = env("COACHAI_TOKEN")) bearer_token = *t;
}

}  // namespace coachai::service
