#include "telemap/replay.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <numeric>

#include "json_fields.hpp"
#include "telemap/error.hpp"

namespace telemap {

using nlohmann::json;

std::string_view to_string(Method method) {
    switch (method) {
        case Method::Subspace: return "subspace";
        case Method::Joint: return "joint";
        case Method::Fingertip: return "fingertip";
    }
    return "subspace";
}

std::optional<Method> parse_method(std::string_view text) {
    for (Method m : kAllMethods)
        if (to_string(m) == text) return m;
    return std::nullopt;
}

void MappingSetup::validate() const {
    auto check = [](const HandModel& model, const SubspaceMapping& mapping, const char* role) {
        if (mapping.joint_count() != static_cast<Eigen::Index>(model.joint_count()))
            throw ValidationError(std::string(role) + " mapping has " + std::to_string(mapping.joint_count()) +
                                  " joints but model '" + model.name() + "' has " +
                                  std::to_string(model.joint_count()));
    };
    check(master, master_mapping, "master");
    check(slave, slave_mapping, "slave");
    if (correspondence) {
        for (const auto& p : correspondence->pairs())
            if (p.master_joint >= master.joint_count() || p.slave_joint >= slave.joint_count())
                throw ValidationError("joint correspondence references a joint outside the loaded models");
    }
    if (fingertip) fingertip->validate(master, slave);
}

void MappingSetup::require(Method method) const {
    if (method == Method::Joint && !correspondence)
        throw ValidationError("joint mapping needs a joint correspondence for " + master.name() + " -> " +
                              slave.name());
    if (method == Method::Fingertip && !fingertip)
        throw ValidationError("fingertip mapping needs a fingertip config for " + master.name() + " -> " +
                              slave.name());
}

std::vector<std::string> ModelsDirectory::model_names() const {
    static constexpr std::string_view kSuffix = ".model.json";
    std::vector<std::string> names;
    std::error_code ec;
    for (const auto& entry : std::filesystem::directory_iterator(root, ec)) {
        const auto file = entry.path().filename().string();
        if (file.size() > kSuffix.size() && file.ends_with(kSuffix))
            names.push_back(file.substr(0, file.size() - kSuffix.size()));
    }
    if (ec) throw IoError(root.string() + ": cannot list directory (" + ec.message() + ")");
    std::sort(names.begin(), names.end());
    return names;
}

MappingSetup load_setup(const ModelsDirectory& dir, std::string_view master_name, std::string_view slave_name) {
    HandModel master = load_model_file(dir.model(master_name));
    HandModel slave = load_model_file(dir.model(slave_name));
    SubspaceMapping master_mapping = calibrate(master, load_calibration_file(dir.calibration(master_name))).mapping;
    SubspaceMapping slave_mapping = calibrate(slave, load_calibration_file(dir.calibration(slave_name))).mapping;

    std::optional<JointCorrespondence> corr;
    if (std::filesystem::exists(dir.correspondence())) {
        try {
            corr = load_correspondence_file(dir.correspondence(), master, slave);
        } catch (const ValidationError&) {
            corr.reset();  // written for a different model pair
        }
    }
    std::optional<FingertipMapConfig> fingertip;
    if (std::filesystem::exists(dir.fingertip_config())) {
        FingertipMapConfig cfg = load_fingertip_config_file(dir.fingertip_config());
        try {
            cfg.validate(master, slave);
            fingertip = std::move(cfg);
        } catch (const ValidationError&) {
        }
    }
    MappingSetup setup{std::move(master), std::move(slave), std::move(master_mapping), std::move(slave_mapping),
                       std::move(corr), std::move(fingertip)};
    setup.validate();
    return setup;
}

Pose load_named_pose(const std::filesystem::path& path, const HandModel& model, std::string_view name) {
    return detail::load_from_file(path, [&](const json& doc) {
        const auto model_name = detail::text(detail::require(doc, "model_name"), "model_name");
        if (model_name != model.name())
            detail::fail("model_name", "poses are for '" + model_name + "', expected '" + model.name() + "'");
        const json& poses = detail::require(doc, "poses");
        const std::string path_key = "poses." + std::string(name);
        Pose q = detail::vector(detail::require(poses, name, "poses"), path_key);
        model.check_pose(q, path_key);
        return q;
    });
}

Pose map_with(Method method, const MappingSetup& setup, const Pose& q_m, const Pose& seed,
              FingertipMapResult* fingertip_details) {
    setup.master.check_pose(q_m, "master pose");
    setup.require(method);
    switch (method) {
        case Method::Subspace: {
            Pose q_s = map_pose(q_m, setup.master_mapping, setup.slave_mapping);
            clamp_pose_in_place(setup.slave, q_s);
            return q_s;
        }
        case Method::Joint: return joint_map(q_m, *setup.correspondence, setup.slave);
        case Method::Fingertip: {
            FingertipMapResult r = fingertip_map(q_m, setup.master, setup.slave, *setup.fingertip, seed);
            Pose q_s = r.pose;
            if (fingertip_details) *fingertip_details = std::move(r);
            return q_s;
        }
    }
    throw ValidationError("unknown mapping method");
}

namespace {

LatencyStats summarize(std::vector<double> latencies) {
    LatencyStats s;
    if (latencies.empty()) return s;
    for (double l : latencies) {
        const double us = l * 1e6;
        std::size_t bucket = 0;
        while (bucket < kLatencyBucketsUs.size() && us > kLatencyBucketsUs[bucket]) ++bucket;
        ++s.histogram[bucket];
    }
    s.mean = std::accumulate(latencies.begin(), latencies.end(), 0.0) / static_cast<double>(latencies.size());
    std::sort(latencies.begin(), latencies.end());
    const auto at = [&](double q) {
        const auto idx = static_cast<std::size_t>(q * static_cast<double>(latencies.size() - 1) + 0.5);
        return latencies[std::min(idx, latencies.size() - 1)];
    };
    s.median = at(0.5);
    s.p99 = at(0.99);
    s.max = latencies.back();
    return s;
}

}  // namespace

ReplayResult replay(const Trajectory& traj, Method method, const MappingSetup& setup) {
    setup.require(method);
    const auto n_master = static_cast<Eigen::Index>(setup.master.joint_count());
    const auto n_slave = static_cast<Eigen::Index>(setup.slave.joint_count());
    if (traj.joint_names().size() != setup.master.joint_count())
        throw ValidationError("trajectory has " + std::to_string(traj.joint_names().size()) +
                              " joint columns but master model '" + setup.master.name() + "' has " +
                              std::to_string(n_master));

    // Output buffers are sized up front so the subspace loop does not allocate.
    std::vector<TrajectorySample> out(traj.size());
    for (std::size_t i = 0; i < traj.size(); ++i) {
        out[i].time = traj.samples()[i].time;
        out[i].pose.resize(n_slave);
    }
    std::vector<double> latencies(traj.size());
    std::size_t ik_failures = 0;

    using clock = std::chrono::steady_clock;
    Pose seed = setup.slave.origin_pose();
    for (std::size_t i = 0; i < traj.size(); ++i) {
        const Pose& q_m = traj.samples()[i].pose;
        Pose& q_s = out[i].pose;
        const auto start = clock::now();
        switch (method) {
            case Method::Subspace:
                map_pose_into(q_m, setup.master_mapping, setup.slave_mapping, q_s);
                clamp_pose_in_place(setup.slave, q_s);
                break;
            case Method::Joint: q_s = joint_map(q_m, *setup.correspondence, setup.slave); break;
            case Method::Fingertip: {
                FingertipMapResult r = fingertip_map(q_m, setup.master, setup.slave, *setup.fingertip, seed);
                if (!r.converged()) ++ik_failures;
                q_s = std::move(r.pose);
                seed = q_s;
                break;
            }
        }
        latencies[i] = std::chrono::duration<double>(clock::now() - start).count();
    }

    MethodReport report;
    report.method = method;
    report.samples = traj.size();
    report.ik_failures = ik_failures;
    report.latency = summarize(std::move(latencies));

    if (setup.fingertip && !setup.fingertip->finger_pairs.empty() && !traj.empty()) {
        double sum = 0.0;
        std::size_t count = 0;
        for (std::size_t i = 0; i < traj.size(); ++i) {
            for (const auto& pair : setup.fingertip->finger_pairs) {
                const Eigen::Vector3d target = fingertip_target(
                    fingertip_position(setup.master.finger(pair.master), traj.samples()[i].pose), *setup.fingertip);
                sum += (fingertip_position(setup.slave.finger(pair.slave), out[i].pose) - target).norm();
                ++count;
            }
        }
        report.mean_fingertip_error = sum / static_cast<double>(count);
    }
    for (std::size_t i = 1; i < out.size(); ++i) {
        const double dt = out[i].time - out[i - 1].time;
        const double dq = (out[i].pose - out[i - 1].pose).cwiseAbs().maxCoeff();
        report.max_joint_velocity = std::max(report.max_joint_velocity, dq / dt);
    }
    for (const auto& s : out) {
        const Pose back = project_from_subspace(project_to_subspace(s.pose, setup.slave_mapping), setup.slave_mapping);
        report.roundtrip_residual = std::max(report.roundtrip_residual, (back - s.pose).cwiseAbs().maxCoeff());
    }

    return {Trajectory::for_model(setup.slave, std::move(out)), report};
}

ComparisonReport compare(const Trajectory& traj, const MappingSetup& setup) {
    ComparisonReport report;
    report.samples = traj.size();
    for (Method m : kAllMethods) {
        setup.require(m);
        report.methods.push_back(replay(traj, m, setup).report);
    }
    return report;
}

json to_json(const MethodReport& r) {
    json hist = json::array();
    for (std::size_t i = 0; i < r.latency.histogram.size(); ++i) {
        hist.push_back({{"le_us", i < kLatencyBucketsUs.size() ? json(kLatencyBucketsUs[i]) : json()},
                        {"count", r.latency.histogram[i]}});
    }
    return {{"method", to_string(r.method)},
            {"samples", r.samples},
            {"mean_fingertip_error_m", r.mean_fingertip_error ? json(*r.mean_fingertip_error) : json()},
            {"max_joint_velocity_rad_s", r.max_joint_velocity},
            {"subspace_roundtrip_residual", r.roundtrip_residual},
            {"ik_failures", r.ik_failures},
            {"latency_s",
             {{"median", r.latency.median},
              {"p99", r.latency.p99},
              {"max", r.latency.max},
              {"mean", r.latency.mean},
              {"histogram", hist}}}};
}

json to_json(const ComparisonReport& report) {
    json methods = json::array();
    for (const auto& m : report.methods) methods.push_back(to_json(m));
    return {{"samples", report.samples}, {"methods", methods}};
}

std::string format_table(const ComparisonReport& report) {
    std::string out;
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-32s", "metric");
    out += buf;
    for (const auto& m : report.methods) {
        std::snprintf(buf, sizeof buf, "%16s", std::string(to_string(m.method)).c_str());
        out += buf;
    }
    out += '\n';
    auto row = [&](const char* label, auto value) {
        std::snprintf(buf, sizeof buf, "%-32s", label);
        out += buf;
        for (const auto& m : report.methods) {
            const std::optional<double> v = value(m);
            if (v) std::snprintf(buf, sizeof buf, "%16.6g", *v);
            else std::snprintf(buf, sizeof buf, "%16s", "n/a");
            out += buf;
        }
        out += '\n';
    };
    row("mean fingertip error [m]", [](const MethodReport& m) { return m.mean_fingertip_error; });
    row("max joint velocity [rad/s]",
        [](const MethodReport& m) { return std::optional<double>(m.max_joint_velocity); });
    row("subspace round-trip residual", [](const MethodReport& m) { return std::optional<double>(m.roundtrip_residual); });
    row("ik failures [samples]",
        [](const MethodReport& m) { return std::optional<double>(static_cast<double>(m.ik_failures)); });
    row("latency median [us]", [](const MethodReport& m) { return std::optional<double>(m.latency.median * 1e6); });
    row("latency p99 [us]", [](const MethodReport& m) { return std::optional<double>(m.latency.p99 * 1e6); });
    std::snprintf(buf, sizeof buf, "samples: %zu\n", report.samples);
    out += buf;
    return out;
}

}  // namespace telemap
