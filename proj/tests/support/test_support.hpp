#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "coachai/patient.hpp"

namespace coachai::testing {

inline std::string data_path(const std::string& name) { return std::string(COACHAI_DATA_DIR) + "/" + name; }
inline std::string fixture_path(const std::string& name) { return std::string(COACHAI_FIXTURE_DIR) + "/" + name; }

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream b;
    b << in.rdbuf();
    return b.str();
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::mt19937_64 rng(std::random_device{}());
        path_ = std::filesystem::temp_directory_path() / ("coachai-test-" + std::to_string(rng()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

inline PatientProfile make_profile(std::string id, double bmi, double diet, double sleep, double activity,
                                   std::string profession, double age) {
    PatientProfile p;
    p.id = id;
    p.external_ref = "ext-" + id;
    p.name = "Patient " + id;
    p.bmi = bmi;
    p.diet_score = diet;
    p.sleep_hours = sleep;
    p.activity_level = activity;
    p.profession = std::move(profession);
    p.age = age;
    return p;
}

inline AdherenceRecord record(std::string activity, Timestamp at, bool completed) {
    AdherenceRecord r;
    r.activity_id = std::move(activity);
    r.assigned_at = at;
    r.completed = completed;
    return r;
}

}  // namespace coachai::testing
