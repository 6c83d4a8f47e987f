#include "telemap/fingertip_mapping.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <Eigen/LU>

#include "json_fields.hpp"
#include "telemap/error.hpp"

namespace telemap {

using nlohmann::json;

void FingertipMapConfig::validate(const HandModel& master, const HandModel& slave) const {
    if (!std::isfinite(scale) || scale <= 0.0) throw ValidationError("fingertip config: scale must be positive");
    const auto& r = hand_frame_rotation;
    if (!r.allFinite() || (r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-9 ||
        std::abs(r.determinant() - 1.0) > 1e-9)
        throw ValidationError("fingertip config: rotation must be orthonormal with determinant +1");
    std::set<std::string> slaves;
    for (std::size_t i = 0; i < finger_pairs.size(); ++i) {
        const auto& p = finger_pairs[i];
        const std::string path = detail::element("pairs", i);
        if (!master.find_finger(p.master))
            throw ValidationError(path + ": master model '" + master.name() + "' has no finger '" + p.master + "'");
        if (!slave.find_finger(p.slave))
            throw ValidationError(path + ": slave model '" + slave.name() + "' has no finger '" + p.slave + "'");
        if (!slaves.insert(p.slave).second)
            throw ValidationError(path + ": slave finger '" + p.slave + "' is targeted more than once");
    }
    ik.validate();
}

FingertipMapConfig load_fingertip_config(const json& doc) {
    FingertipMapConfig cfg;
    if (const json* v = detail::optional(doc, "scale")) cfg.scale = detail::number(*v, "scale");
    if (const json* v = detail::optional(doc, "rotation")) {
        if (!v->is_array() || v->size() != 3) detail::fail("rotation", "expected a row-major 3x3 array");
        for (std::size_t i = 0; i < 3; ++i)
            cfg.hand_frame_rotation.row(static_cast<Eigen::Index>(i)) =
                detail::vector3((*v)[i], detail::element("rotation", i)).transpose();
    }
    const json& pairs = detail::array(detail::require(doc, "pairs"), "pairs");
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const std::string path = detail::element("pairs", i);
        const json& p = pairs[i];
        if (p.is_array() && p.size() == 2) {
            cfg.finger_pairs.push_back({detail::text(p[0], path + "[0]"), detail::text(p[1], path + "[1]")});
        } else if (p.is_object()) {
            cfg.finger_pairs.push_back({detail::text(detail::require(p, "master", path), path + ".master"),
                                        detail::text(detail::require(p, "slave", path), path + ".slave")});
        } else {
            detail::fail(path, "expected [master_finger, slave_finger] or {master, slave}");
        }
    }
    if (const json* v = detail::optional(doc, "ik")) cfg.ik = load_ik_settings(*v, "ik");
    return cfg;
}

FingertipMapConfig load_fingertip_config_file(const std::filesystem::path& path) {
    return detail::load_from_file(path, [](const json& doc) { return load_fingertip_config(doc); });
}

json to_json(const FingertipMapConfig& cfg) {
    json rows = json::array();
    for (int i = 0; i < 3; ++i)
        rows.push_back({cfg.hand_frame_rotation(i, 0), cfg.hand_frame_rotation(i, 1), cfg.hand_frame_rotation(i, 2)});
    json pairs = json::array();
    for (const auto& p : cfg.finger_pairs) pairs.push_back({p.master, p.slave});
    return {{"scale", cfg.scale}, {"rotation", rows}, {"pairs", pairs}, {"ik", to_json(cfg.ik)}};
}

Eigen::Vector3d fingertip_target(const Eigen::Vector3d& master_tip, const FingertipMapConfig& config) {
    return config.hand_frame_rotation * (config.scale * master_tip);
}

bool FingertipMapResult::converged() const {
    return std::all_of(fingers.begin(), fingers.end(), [](const FingerTrack& f) { return f.ik.converged; });
}

double FingertipMapResult::max_error() const {
    double worst = 0.0;
    for (const auto& f : fingers) worst = std::max(worst, f.ik.final_error);
    return worst;
}

FingertipMapResult fingertip_map(const Pose& q_m, const HandModel& master, const HandModel& slave,
                                 const FingertipMapConfig& config, const Pose& slave_seed) {
    master.check_pose(q_m, "master pose");
    slave.check_pose(slave_seed, "slave seed");
    config.validate(master, slave);

    FingertipMapResult result;
    result.pose = slave_seed;
    clamp_pose_in_place(slave, result.pose);
    for (const auto& pair : config.finger_pairs) {
        const FingerChain& m_chain = master.finger(pair.master);
        const FingerChain& s_chain = slave.finger(pair.slave);

        const Eigen::Vector3d target = fingertip_target(fingertip_position(m_chain, q_m), config);
        // The chain's FK already starts from its base transform, so the
        // solver takes the hand-frame target; the local form is reported.
        const Eigen::Vector3d local = s_chain.base_orientation.transpose() * (target - s_chain.base_position);

        // Chains never share joints, so solving them one after another on
        // the same pose is order independent.
        IkResult ik = ik_solve(slave, pair.slave, target, result.pose, config.ik);
        result.pose = std::move(ik.pose);
        result.fingers.push_back({pair.master, pair.slave, target, local, ik.report});
    }
    return result;
}

}  // namespace telemap
