#pragma once

#include <map>
#include <memory>
#include <string>

#include <json.hpp>

#include "coachai/service/coach_service.hpp"

namespace coachai::service {

struct ApiRequest {
    std::string method;  // "GET", "POST"
    std::string path;    // "/v1/patients/p-000001"
    std::map<std::string, std::string> query;
    std::string body;
    std::string authorization;  // raw Authorization header
};

struct ApiResponse {
    int status = 200;
    nlohmann::json body;
};

/// Routes /v1 requests to the service. Transport-free so it can be driven
/// directly; HttpServer below puts it behind a socket.
class Api {
public:
    explicit Api(CoachService& service) : service_(service) {}
    ApiResponse handle(const ApiRequest& request) const;

private:
    ApiResponse dispatch(const ApiRequest& request) const;
    CoachService& service_;
};

/// HTTP status for an error kind: not_found 404, conflict 409,
/// validation 422, io 500, everything else 400.
int status_for(ErrorKind kind);

/// Patient summary row used by GET /v1/patients.
nlohmann::json patient_summary(const PatientProfile& p, const dialogue::Session& s, const RecommenderConfig& cfg);

class HttpServer {
public:
    explicit HttpServer(CoachService& service);
    ~HttpServer();
    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    /// Blocks until stop(). Port 0 picks a free port (see bound_port()).
    bool listen(const std::string& host, int port);
    /// Binds without serving; pair with serve().
    int bind(const std::string& host, int port);
    bool serve();
    void stop();
    int bound_port() const { return port_; }

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    int port_ = 0;
};

}  // namespace coachai::service
