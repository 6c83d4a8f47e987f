#include "telemap/service.hpp"

#include <cmath>
#include <cstdio>

#include <httplib.h>

#include "json_fields.hpp"
#include "telemap/error.hpp"

namespace telemap {

using nlohmann::json;

struct Service::LoadedModel {
    HandModel model;
    std::optional<SubspaceMapping> mapping;  ///< from "<name>.cal" when present
};

struct Service::Session {
    std::mutex mutex;
    std::shared_ptr<const MappingSetup> setup;
    Method method = Method::Subspace;
    Pose last_master;
    Pose last_slave;
    std::chrono::steady_clock::time_point last_used;
};

namespace {

HttpResponse error(int status, std::string message) {
    return {status, {{"error", std::move(message)}}};
}

json tip_map(const HandModel& model, const Pose& q) {
    json out = json::object();
    for (const auto& f : model.fingers()) {
        const Eigen::Vector3d p = fingertip_position(f, q);
        out[f.name] = {p.x(), p.y(), p.z()};
    }
    return out;
}

json convergence_json(const FingertipMapResult& r) {
    json fingers = json::array();
    for (const auto& f : r.fingers)
        fingers.push_back({{"master", f.master},
                           {"slave", f.slave},
                           {"converged", f.ik.converged},
                           {"iterations", f.ik.iterations},
                           {"final_error", f.ik.final_error}});
    return {{"converged", r.converged()}, {"max_error", r.max_error()}, {"fingers", fingers}};
}

// Parses a pose field, reporting shape problems the way the endpoints need them.
std::optional<Pose> parse_pose(const json& body, std::size_t expected, std::string& problem) {
    const json* angles = body.is_object() ? detail::optional(body, "angles") : nullptr;
    if (!angles && body.is_array()) angles = &body;
    if (!angles || !angles->is_array()) {
        problem = "expected {\"angles\": [..]}";
        return std::nullopt;
    }
    if (angles->size() != expected) {
        problem = "expected " + std::to_string(expected) + " joint angles, got " + std::to_string(angles->size());
        return std::nullopt;
    }
    Pose q(static_cast<Eigen::Index>(expected));
    for (std::size_t i = 0; i < expected; ++i) {
        const json& v = (*angles)[i];
        if (!v.is_number() || !std::isfinite(v.get<double>())) {
            problem = "angles[" + std::to_string(i) + "]: expected a finite number";
            return std::nullopt;
        }
        q[static_cast<Eigen::Index>(i)] = v.get<double>();
    }
    return q;
}

}  // namespace

Service::Service(ServiceConfig config) : config_(std::move(config)), dir_{config_.models_dir}, id_rng_(std::random_device{}()) {
    for (const auto& name : dir_.model_names()) {
        HandModel model = load_model_file(dir_.model(name));
        if (model.name() != name)
            throw ValidationError(dir_.model(name).string() + ": model name '" + model.name() +
                                  "' does not match the file name");
        std::optional<SubspaceMapping> mapping;
        if (std::filesystem::exists(dir_.calibration(name)))
            mapping = telemap::calibrate(model, load_calibration_file(dir_.calibration(name))).mapping;
        models_.emplace(name, std::make_shared<const LoadedModel>(LoadedModel{std::move(model), std::move(mapping)}));
    }
    if (std::filesystem::exists(dir_.correspondence())) correspondence_doc_ = detail::parse_json_file(dir_.correspondence());
    if (std::filesystem::exists(dir_.fingertip_config()))
        fingertip_config_ = load_fingertip_config_file(dir_.fingertip_config());
}

Service::~Service() = default;

std::chrono::steady_clock::time_point Service::now() const {
    return config_.clock ? config_.clock() : std::chrono::steady_clock::now();
}

std::size_t Service::session_count() const {
    std::lock_guard lock(sessions_mutex_);
    return sessions_.size();
}

void Service::evict_idle() {
    const auto cutoff = now() - config_.idle_timeout;
    std::lock_guard lock(sessions_mutex_);
    for (auto it = sessions_.begin(); it != sessions_.end();) {
        bool idle;
        {
            std::lock_guard session_lock(it->second->mutex);
            idle = it->second->last_used < cutoff;
        }
        it = idle ? sessions_.erase(it) : std::next(it);
    }
}

std::shared_ptr<Service::Session> Service::find_session(std::string_view id) {
    evict_idle();
    std::lock_guard lock(sessions_mutex_);
    auto it = sessions_.find(id);
    return it == sessions_.end() ? nullptr : it->second;
}

HttpResponse Service::models() const {
    json list = json::array();
    for (const auto& [name, loaded] : models_) {
        json summary = to_json(loaded->model);
        summary["calibrated"] = loaded->mapping.has_value();
        list.push_back(std::move(summary));
    }
    return {200, {{"models", list}}};
}

HttpResponse Service::create_session(const json& body) {
    if (!body.is_object()) return error(422, "expected {\"master\", \"slave\", \"method\"}");
    const json* master = detail::optional(body, "master");
    const json* slave = detail::optional(body, "slave");
    if (!master || !master->is_string() || !slave || !slave->is_string())
        return error(422, "master and slave must be model names");
    Method method = Method::Subspace;
    if (const json* m = detail::optional(body, "method")) {
        const auto parsed = m->is_string() ? parse_method(m->get<std::string>()) : std::nullopt;
        if (!parsed) return error(422, "method: expected \"subspace\", \"joint\" or \"fingertip\"");
        method = *parsed;
    }

    const auto m_it = models_.find(master->get<std::string>());
    const auto s_it = models_.find(slave->get<std::string>());
    if (m_it == models_.end()) return error(422, "unknown master model '" + master->get<std::string>() + "'");
    if (s_it == models_.end()) return error(422, "unknown slave model '" + slave->get<std::string>() + "'");
    if (!m_it->second->mapping || !s_it->second->mapping)
        return error(409, "both models need a calibration file in the models directory");

    std::optional<JointCorrespondence> corr;
    if (correspondence_doc_) {
        try {
            corr = load_correspondence(*correspondence_doc_, m_it->second->model, s_it->second->model);
        } catch (const ValidationError&) {
        }
    }
    std::optional<FingertipMapConfig> fingertip;
    if (fingertip_config_) {
        try {
            fingertip_config_->validate(m_it->second->model, s_it->second->model);
            fingertip = fingertip_config_;
        } catch (const ValidationError&) {
        }
    }
    auto setup = std::make_shared<const MappingSetup>(MappingSetup{m_it->second->model, s_it->second->model,
                                                                   *m_it->second->mapping, *s_it->second->mapping,
                                                                   std::move(corr), std::move(fingertip)});
    try {
        setup->require(method);
    } catch (const ValidationError& e) {
        return error(409, e.what());
    }

    auto session = std::make_shared<Session>();
    session->setup = setup;
    session->method = method;
    session->last_master = setup->master.origin_pose();
    session->last_slave = setup->slave.origin_pose();
    session->last_used = now();

    evict_idle();
    std::string id;
    {
        std::lock_guard lock(sessions_mutex_);
        do {
            char buf[17];
            std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(id_rng_()));
            id = buf;
        } while (sessions_.count(id));
        sessions_.emplace(id, std::move(session));
    }
    return {200, {{"id", id}, {"method", to_string(method)}}};
}

HttpResponse Service::post_pose(std::string_view id, const json& body) {
    auto session = find_session(id);
    if (!session) return error(404, "unknown session '" + std::string(id) + "'");
    std::lock_guard lock(session->mutex);
    session->last_used = now();
    const MappingSetup& setup = *session->setup;

    std::string problem;
    const auto q_m = parse_pose(body, setup.master.joint_count(), problem);
    if (!q_m) return error(422, problem);

    try {
        FingertipMapResult details;
        const Pose q_s = map_with(session->method, setup, *q_m, session->last_slave, &details);
        const SubspacePoint t = project_to_subspace(*q_m, setup.master_mapping);
        session->last_master = *q_m;
        session->last_slave = q_s;
        return {200,
                {{"method", to_string(session->method)},
                 {"slave", detail::to_json(q_s)},
                 {"t", to_json(t)},
                 {"fingertips", {{"master", tip_map(setup.master, *q_m)}, {"slave", tip_map(setup.slave, q_s)}}},
                 {"convergence", session->method == Method::Fingertip ? convergence_json(details) : json()}}};
    } catch (const ValidationError& e) {
        return error(409, e.what());
    }
}

HttpResponse Service::post_method(std::string_view id, const json& body) {
    auto session = find_session(id);
    if (!session) return error(404, "unknown session '" + std::string(id) + "'");
    const json* m = body.is_object() ? detail::optional(body, "method") : nullptr;
    const auto method = (m && m->is_string()) ? parse_method(m->get<std::string>()) : std::nullopt;
    if (!method) return error(422, "method: expected \"subspace\", \"joint\" or \"fingertip\"");

    std::lock_guard lock(session->mutex);
    session->last_used = now();
    try {
        session->setup->require(*method);
    } catch (const ValidationError& e) {
        return error(409, e.what());
    }
    session->method = *method;
    return {200, {{"method", to_string(*method)}, {"acknowledged", true}}};
}

HttpResponse Service::calibrate(const json& body) const {
    if (!body.is_object()) return error(422, "expected {\"model\", \"calibration\"}");
    try {
        const json& model_ref = detail::require(body, "model");
        std::optional<HandModel> inline_model;
        const HandModel* model = nullptr;
        if (model_ref.is_string()) {
            const auto it = models_.find(model_ref.get<std::string>());
            if (it == models_.end()) return error(422, "unknown model '" + model_ref.get<std::string>() + "'");
            model = &it->second->model;
        } else {
            inline_model = load_model(model_ref);
            model = &*inline_model;
        }
        CalibrationSet set;
        if (const json* cal = detail::optional(body, "calibration")) {
            set = load_calibration_set(*cal);
        } else {
            if (!std::filesystem::exists(dir_.calibration(model->name())))
                return error(422, "calibration: required when the model has no calibration file");
            set = load_calibration_file(dir_.calibration(model->name()));
        }
        CalibrationResult result = telemap::calibrate(*model, set);
        return {200, {{"mapping", to_json(result.mapping)}, {"report", to_json(result.report)}}};
    } catch (const ValidationError& e) {
        return error(422, e.what());
    }
}

HttpResponse Service::handle(std::string_view method, std::string_view path, std::string_view body_text) {
    json body;
    if (method == "POST") {
        body = json::parse(body_text, nullptr, false);
        if (body.is_discarded()) return error(400, "request body is not valid JSON");
    }

    if (path == "/models") {
        if (method != "GET") return error(405, "use GET /models");
        return models();
    }
    if (path == "/session") {
        if (method != "POST") return error(405, "use POST /session");
        return create_session(body);
    }
    if (path == "/calibrate") {
        if (method != "POST") return error(405, "use POST /calibrate");
        return calibrate(body);
    }
    static constexpr std::string_view kPrefix = "/session/";
    if (path.starts_with(kPrefix)) {
        const auto rest = path.substr(kPrefix.size());
        const auto slash = rest.find('/');
        if (slash != std::string_view::npos) {
            const auto id = rest.substr(0, slash);
            const auto action = rest.substr(slash + 1);
            if (action == "pose" || action == "method") {
                if (method != "POST") return error(405, "use POST");
                return action == "pose" ? post_pose(id, body) : post_method(id, body);
            }
        }
    }
    return error(404, "no such endpoint: " + std::string(path));
}

void bind_routes(httplib::Server& server, Service& service) {
    auto forward = [&service](const httplib::Request& req, httplib::Response& res) {
        const HttpResponse r = service.handle(req.method, req.path, req.body);
        res.status = r.status;
        res.set_content(r.body.dump(), "application/json");
    };
    server.Get(".*", forward);
    server.Post(".*", forward);
    server.Options(".*", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                                {"Access-Control-Allow-Headers", "Content-Type"}});
}

bool serve(Service& service, const std::string& host, int port) {
    httplib::Server server;
    bind_routes(server, service);
    return server.listen(host, port);
}

}  // namespace telemap
