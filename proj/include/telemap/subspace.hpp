#pragma once

#include <filesystem>
#include <string>

#include <Eigen/Core>
#include <json.hpp>

#include "telemap/hand_model.hpp"

namespace telemap {

/// Coordinates in the shared three-dimensional teleoperation subspace:
/// finger spread (alpha), grasp aperture (sigma) and finger curl (epsilon).
struct SubspacePoint {
    double alpha = 0.0;
    double sigma = 0.0;
    double epsilon = 0.0;

    Eigen::Vector3d vector() const { return {alpha, sigma, epsilon}; }
    static SubspacePoint from_vector(const Eigen::Vector3d& v) { return {v[0], v[1], v[2]}; }
    double operator[](Axis axis) const;

    friend bool operator==(const SubspacePoint&, const SubspacePoint&) = default;
};

/// N x 3 matrix whose columns are the normalized basis vectors for alpha,
/// sigma and epsilon. Columns are either zero or unit length and have
/// pairwise disjoint supports, so the nonzero columns are orthonormal.
class ProjectionMatrix {
public:
    /// Throws ValidationError if the columns are not unit-or-zero with disjoint supports.
    explicit ProjectionMatrix(Eigen::MatrixX3d columns);

    const Eigen::MatrixX3d& matrix() const { return columns_; }
    Eigen::Index rows() const { return columns_.rows(); }
    bool column_is_zero(Axis axis) const;
    bool is_zero() const { return columns_.isZero(0.0); }

private:
    Eigen::MatrixX3d columns_;
};

/// Per-axis scale delta and its inverse delta_star. Componentwise either both
/// are zero (inert axis) or delta * delta_star == 1 exactly in double
/// precision.
class ScalingFactors {
public:
    /// Throws ValidationError if the pair violates the invariant.
    ScalingFactors(const Eigen::Vector3d& delta, const Eigen::Vector3d& delta_star);

    /// delta = 1 / range (0 for a zero range); delta_star derived from delta.
    static ScalingFactors from_ranges(const Eigen::Vector3d& ranges);
    /// delta_star derived from delta.
    static ScalingFactors from_delta(const Eigen::Vector3d& delta);
    static ScalingFactors unit() { return from_delta(Eigen::Vector3d::Ones()); }

    const Eigen::Vector3d& delta() const { return delta_; }
    const Eigen::Vector3d& delta_star() const { return delta_star_; }
    bool inert(Axis axis) const { return delta_[static_cast<int>(axis)] == 0.0; }

private:
    Eigen::Vector3d delta_;
    Eigen::Vector3d delta_star_;
};

/// Everything needed to move one hand in and out of the subspace.
class SubspaceMapping {
public:
    SubspaceMapping(std::string model_name, Pose origin, ProjectionMatrix matrix, ScalingFactors scaling);

    const std::string& model_name() const { return model_name_; }
    const Pose& origin() const { return origin_; }
    const ProjectionMatrix& matrix() const { return matrix_; }
    const ScalingFactors& scaling() const { return scaling_; }
    Eigen::Index joint_count() const { return origin_.size(); }

private:
    std::string model_name_;
    Pose origin_;
    ProjectionMatrix matrix_;
    ScalingFactors scaling_;
};

/// Winner-take-all basis from the model's per-joint axis assignment, each
/// nonzero column scaled to unit Euclidean norm.
ProjectionMatrix build_projection_matrix(const HandModel& model);

/// t = ((q - o) A) (.) delta
SubspacePoint project_to_subspace(const Pose& q, const SubspaceMapping& m);

/// q = ((t (.) delta_star) A^T) + o. Not clamped to joint limits.
Pose project_from_subspace(const SubspacePoint& t, const SubspaceMapping& m);

/// Master joint angles to slave joint angles through the shared subspace.
/// Bit-identical to project_from_subspace(project_to_subspace(q_m, master), slave).
Pose map_pose(const Pose& q_m, const SubspaceMapping& master, const SubspaceMapping& slave);

/// Allocation-free map_pose. Lengths are the caller's responsibility; out
/// must have the slave joint count. Returns the intermediate subspace point.
SubspacePoint map_pose_into(const Eigen::Ref<const Eigen::VectorXd>& q_m, const SubspaceMapping& master,
                            const SubspaceMapping& slave, Eigen::Ref<Eigen::VectorXd> out);

nlohmann::json to_json(const SubspaceMapping& mapping);
nlohmann::json to_json(const SubspacePoint& t);
/// Rejects documents whose delta/delta_star pair breaks the reciprocal invariant.
SubspaceMapping load_mapping(const nlohmann::json& document);
SubspaceMapping load_mapping_file(const std::filesystem::path& path);
void save_mapping_file(const SubspaceMapping& mapping, const std::filesystem::path& path);

}  // namespace telemap
