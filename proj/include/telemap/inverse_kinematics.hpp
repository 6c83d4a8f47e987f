#pragma once

#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "telemap/hand_model.hpp"

namespace telemap {

struct IkSettings {
    double damping = 0.01;             ///< initial lambda in J^T (J J^T + lambda^2 I)^-1
    int max_iterations = 200;          ///< per start
    double position_tolerance = 1e-6;  ///< meters
    double step_limit = 0.2;           ///< max change of any joint per iteration, radians

    /// Throws ValidationError unless every field is positive and finite.
    void validate() const;
};

IkSettings load_ik_settings(const nlohmann::json& document, std::string_view path = "ik");
nlohmann::json to_json(const IkSettings& settings);

struct IkReport {
    bool converged = false;
    int iterations = 0;        ///< solver iterations after the initial check, summed over starts
    double final_error = 0.0;  ///< meters
};

struct IkResult {
    Pose pose;
    IkReport report;
};

/// Damped least squares on the joints of one finger chain; all other joints
/// keep their seed values. Each iteration is step-limited and clamped to the
/// joint limits, and a step that would increase the error is rejected and
/// retried with more damping; accepted steps relax the damping again. If the
/// descent from the seed stalls (a limit or local minimum), it is restarted
/// from a few fixed spreads of the chain's joint ranges and the best result
/// wins. Unreachable targets return the best pose found with converged = false.
IkResult ik_solve(const HandModel& model, std::string_view finger, const Eigen::Vector3d& target, const Pose& seed,
                  const IkSettings& settings = {});

/// Closed-form solutions for chains with exactly two flexion links and an
/// optional adduction joint. Returns every exact solution ignoring joint
/// limits (empty when the target is out of reach), as values for
/// chain.moving_joints(). Used to cross-check the iterative solver.
std::vector<Eigen::VectorXd> analytic_two_link_ik(const FingerChain& chain, const Eigen::Vector3d& target);

}  // namespace telemap
