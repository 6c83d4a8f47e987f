#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <string>
#include <string_view>

#include <json.hpp>

#include "telemap/replay.hpp"

namespace httplib {
class Server;
}

namespace telemap {

struct ServiceConfig {
    std::filesystem::path models_dir;
    std::chrono::seconds idle_timeout{30 * 60};
    /// Clock used for idle eviction; defaults to steady_clock::now.
    std::function<std::chrono::steady_clock::time_point()> clock;
};

struct HttpResponse {
    int status = 200;
    nlohmann::json body;
};

/// In-memory mapping sessions over the models found in a models directory.
///
/// Endpoints:
///   GET  /models                  model summaries
///   POST /session                 {master, slave, method} -> {id}
///   POST /session/{id}/pose       {angles} -> slave pose, subspace point, fingertips, convergence
///   POST /session/{id}/method     {method} -> acknowledgement
///   POST /calibrate               {model, calibration} -> {mapping, report}
///
/// Requests for different sessions run concurrently; requests within one
/// session are serialized.
class Service {
public:
    explicit Service(ServiceConfig config);
    ~Service();
    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    HttpResponse models() const;
    HttpResponse create_session(const nlohmann::json& body);
    HttpResponse post_pose(std::string_view session_id, const nlohmann::json& body);
    HttpResponse post_method(std::string_view session_id, const nlohmann::json& body);
    HttpResponse calibrate(const nlohmann::json& body) const;

    /// Routes a raw request to the handlers above.
    HttpResponse handle(std::string_view method, std::string_view path, std::string_view body);

    std::size_t session_count() const;
    /// Drops sessions idle for longer than the configured timeout.
    void evict_idle();

private:
    struct Session;
    struct LoadedModel;

    std::shared_ptr<Session> find_session(std::string_view id);
    std::chrono::steady_clock::time_point now() const;

    ServiceConfig config_;
    ModelsDirectory dir_;
    std::map<std::string, std::shared_ptr<const LoadedModel>, std::less<>> models_;
    std::optional<nlohmann::json> correspondence_doc_;
    std::optional<FingertipMapConfig> fingertip_config_;

    mutable std::mutex sessions_mutex_;
    std::map<std::string, std::shared_ptr<Session>, std::less<>> sessions_;
    std::mt19937_64 id_rng_;
};

/// Registers every endpoint on an httplib server, plus permissive CORS
/// headers so a browser UI served elsewhere can call it.
void bind_routes(httplib::Server& server, Service& service);

/// Blocks serving on host:port until the server is stopped.
bool serve(Service& service, const std::string& host, int port);

}  // namespace telemap
