#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

namespace telemap {

/// Joint-space configuration of a hand, radians, one entry per joint in the
/// owning model's joint order.
using Pose = Eigen::VectorXd;

/// Teleoperation-subspace axis a joint contributes to. Each joint picks at
/// most one (winner-take-all).
enum class Axis { Alpha = 0, Sigma = 1, Epsilon = 2, Unassigned = 3 };

inline constexpr Axis kSubspaceAxes[] = {Axis::Alpha, Axis::Sigma, Axis::Epsilon};

std::string_view to_string(Axis axis);
/// Accepts "alpha", "sigma", "epsilon" and "none".
std::optional<Axis> parse_axis(std::string_view text);

struct JointDescriptor {
    std::string name;
    double min_angle = 0.0;
    double max_angle = 0.0;
    Axis axis = Axis::Unassigned;
};

/// One finger as a rigid base transform, an optional adduction revolute
/// about the finger frame's z axis, then a planar serial flexion chain.
///
/// In the finger frame the straight finger points along +x and every
/// flexion joint rotates about +y, so positive flexion moves the tip
/// towards -z.
struct FingerChain {
    std::string name;
    Eigen::Vector3d base_position = Eigen::Vector3d::Zero();
    Eigen::Matrix3d base_orientation = Eigen::Matrix3d::Identity();
    std::vector<std::size_t> joint_indices;  ///< flexion joints, base to tip
    std::vector<double> link_lengths;        ///< one per flexion joint
    std::optional<std::size_t> adduction_joint_index;

    double reach() const;
    /// Joints that move this fingertip: adduction (if any) first, then flexion.
    std::vector<std::size_t> moving_joints() const;
};

/// Immutable, validated kinematic and semantic description of one hand.
class HandModel {
public:
    /// Throws ValidationError on any broken invariant.
    HandModel(std::string name, std::vector<JointDescriptor> joints, std::vector<FingerChain> fingers,
              Pose origin_pose);

    const std::string& name() const { return name_; }
    const std::vector<JointDescriptor>& joints() const { return joints_; }
    const std::vector<FingerChain>& fingers() const { return fingers_; }
    const Pose& origin_pose() const { return origin_; }
    std::size_t joint_count() const { return joints_.size(); }

    const JointDescriptor& joint(std::size_t index) const { return joints_.at(index); }
    std::optional<std::size_t> find_joint(std::string_view name) const;
    const FingerChain* find_finger(std::string_view name) const;
    /// Throws ValidationError for unknown names.
    const FingerChain& finger(std::string_view name) const;

    /// Throws ValidationError unless pose.size() == joint_count() and all entries are finite.
    void check_pose(const Pose& pose, std::string_view what = "pose") const;
    bool within_limits(const Pose& pose) const;

private:
    std::string name_;
    std::vector<JointDescriptor> joints_;
    std::vector<FingerChain> fingers_;
    Pose origin_;
};

HandModel load_model(const nlohmann::json& document);
HandModel load_model_file(const std::filesystem::path& path);
/// Writes the same schema load_model reads; joints are referenced by name.
nlohmann::json to_json(const HandModel& model);

/// Fingertip position of one chain in the hand frame. No length checks.
Eigen::Vector3d fingertip_position(const FingerChain& chain, const Eigen::Ref<const Eigen::VectorXd>& pose);

/// Positional Jacobian of the fingertip with respect to chain.moving_joints().
Eigen::Matrix3Xd fingertip_jacobian(const FingerChain& chain, const Eigen::Ref<const Eigen::VectorXd>& pose);

Eigen::Vector3d forward_kinematics(const HandModel& model, const Pose& pose, std::string_view finger);

Pose clamp_pose(const HandModel& model, const Pose& pose);
/// In-place variant for hot loops; pose must already have the model's length.
void clamp_pose_in_place(const HandModel& model, Eigen::Ref<Eigen::VectorXd> pose);

}  // namespace telemap
