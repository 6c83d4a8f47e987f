#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "telemap/hand_model.hpp"
#include "telemap/inverse_kinematics.hpp"

namespace telemap {

struct FingerPair {
    std::string master;
    std::string slave;
};

struct FingertipMapConfig {
    double scale = 1.5;  ///< human-to-robot finger size ratio
    Eigen::Matrix3d hand_frame_rotation = Eigen::Matrix3d::Identity();  ///< master hand frame -> slave hand frame
    std::vector<FingerPair> finger_pairs;
    IkSettings ik;

    /// Rotation must be proper within 1e-9, scale positive, chains must exist
    /// on both models and no slave chain may be targeted twice.
    void validate(const HandModel& master, const HandModel& slave) const;
};

FingertipMapConfig load_fingertip_config(const nlohmann::json& document);
FingertipMapConfig load_fingertip_config_file(const std::filesystem::path& path);
nlohmann::json to_json(const FingertipMapConfig& config);

/// Slave-hand-frame target for a master fingertip: rotation * (scale * p).
Eigen::Vector3d fingertip_target(const Eigen::Vector3d& master_tip, const FingertipMapConfig& config);

struct FingerTrack {
    std::string master;
    std::string slave;
    Eigen::Vector3d target;         ///< slave hand frame
    Eigen::Vector3d target_local;   ///< same target in the slave finger's base frame
    IkReport ik;
};

struct FingertipMapResult {
    Pose pose;
    std::vector<FingerTrack> fingers;

    bool converged() const;
    double max_error() const;
};

/// Master FK, scale, rotate into the slave hand frame, then per-finger IK on
/// the slave starting from slave_seed. Slave joints outside every paired
/// chain keep their seed values.
FingertipMapResult fingertip_map(const Pose& q_m, const HandModel& master, const HandModel& slave,
                                 const FingertipMapConfig& config, const Pose& slave_seed);

}  // namespace telemap
