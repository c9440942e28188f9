#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "coachai/recommender.hpp"

namespace coachai::service {

struct ServiceConfig {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::filesystem::path data_dir = "coachai-data";
    std::filesystem::path script_path = "data/coach.script";
    std::filesystem::path concepts_path = "data/paper_concepts.lib";  // optional, may be empty
    std::filesystem::path ontology_path = "data/starter_ontology.json";
    std::filesystem::path professions_path = "data/professions.txt";
    std::string intake_topic = "intake";
    std::string feedback_topic = "feedback";
    RecommenderConfig recommender;
    std::optional<std::string> bearer_token;
    bool fsync = true;
    // Rewrite a collection's log into a snapshot after this many appends.
    std::size_t compact_after = 1000;
    // Quick-reply buttons offered while a labelled gambit awaits an answer.
    std::map<std::string, std::vector<std::string>> quick_replies = {
        {"COMPLETED", {"yes", "no"}}, {"MOTIVATION", {"1", "2", "3", "4", "5"}}};

    /// Reads a JSON config file. Relative paths inside it resolve against
    /// the file's directory.
    static ServiceConfig load(const std::filesystem::path& path);
    static ServiceConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);

    /// COACHAI_PORT, COACHAI_HOST, COACHAI_DATA_DIR, COACHAI_K, COACHAI_KNN_K,
    /// COACHAI_DEDUP_THRESHOLD, COACHAI_ADHERENCE_HIGH, COACHAI_ADHERENCE_MEDIUM,
    /// COACHAI_SCRIPT_PATH, COACHAI_ONTOLOGY_PATH, COACHAI_TOKEN.
    void apply_environment();

    /// Resolves relative resource paths against `base`.
    void resolve_paths(const std::filesystem::path& base);
};

}  // namespace coachai::service
