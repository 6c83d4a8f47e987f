#include "telemap/inverse_kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Cholesky>

#include "json_fields.hpp"
#include "telemap/error.hpp"

namespace telemap {

using nlohmann::json;

void IkSettings::validate() const {
    auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
    if (!positive(damping)) throw ValidationError("ik.damping: expected a positive number");
    if (max_iterations <= 0) throw ValidationError("ik.max_iterations: expected a positive count");
    if (!positive(position_tolerance)) throw ValidationError("ik.position_tolerance: expected a positive number");
    if (!positive(step_limit)) throw ValidationError("ik.step_limit: expected a positive number");
}

IkSettings load_ik_settings(const json& doc, std::string_view path) {
    IkSettings s;
    if (!doc.is_object()) detail::fail(path, "expected an object");
    const std::string p(path);
    if (const json* v = detail::optional(doc, "damping")) s.damping = detail::number(*v, p + ".damping");
    if (const json* v = detail::optional(doc, "max_iterations")) {
        if (!v->is_number_integer()) detail::fail(p + ".max_iterations", "expected an integer");
        s.max_iterations = v->get<int>();
    }
    if (const json* v = detail::optional(doc, "position_tolerance"))
        s.position_tolerance = detail::number(*v, p + ".position_tolerance");
    if (const json* v = detail::optional(doc, "step_limit")) s.step_limit = detail::number(*v, p + ".step_limit");
    s.validate();
    return s;
}

json to_json(const IkSettings& s) {
    return {{"damping", s.damping},
            {"max_iterations", s.max_iterations},
            {"position_tolerance", s.position_tolerance},
            {"step_limit", s.step_limit}};
}

namespace {

// Accepted steps keep halving lambda down to this fraction of the configured
// damping, so convergence near stretched (singular) configurations stays fast.
constexpr double kDampingFloor = 1e-6;
constexpr double kDampingCeiling = 1e6;

struct Descent {
    const HandModel& model;
    const FingerChain& chain;
    const std::vector<std::size_t>& joints;
    const Eigen::Vector3d& target;
    const IkSettings& settings;

    // Damped least squares from q (modified in place); returns the final error.
    double run(Pose& q, int& iterations) const {
        const auto k = static_cast<Eigen::Index>(joints.size());
        Eigen::Vector3d err_vec = target - fingertip_position(chain, q);
        double err = err_vec.norm();
        if (err <= settings.position_tolerance) return err;

        const double lambda_min = settings.damping * kDampingFloor;
        const double lambda_max = settings.damping * kDampingCeiling;
        double lambda = settings.damping;
        Pose candidate = q;
        Eigen::VectorXd step(k);

        for (int it = 0; it < settings.max_iterations; ++it) {
            ++iterations;
            Eigen::Matrix3Xd jac = fingertip_jacobian(chain, q);

            // Joints sitting on a limit and pushed further out are frozen for
            // this step so the remaining joints can still reduce the error.
            for (int pass = 0; pass < 2; ++pass) {
                // J^T (J J^T + l^2 I)^-1 e, evaluated as (J^T J + l^2 I)^-1 J^T e.
                Eigen::MatrixXd jtj = jac.transpose() * jac;
                jtj.diagonal().array() += lambda * lambda;
                step = jtj.ldlt().solve(jac.transpose() * err_vec);
                bool froze = false;
                for (Eigen::Index c = 0; c < k; ++c) {
                    const auto& limits = model.joint(joints[static_cast<std::size_t>(c)]);
                    const double v = q[static_cast<Eigen::Index>(joints[static_cast<std::size_t>(c)])];
                    const bool at_min = v <= limits.min_angle && step[c] < 0.0;
                    const bool at_max = v >= limits.max_angle && step[c] > 0.0;
                    if ((at_min || at_max) && !jac.col(c).isZero(0.0)) {
                        jac.col(c).setZero();
                        froze = true;
                    }
                }
                if (!froze) break;
            }

            const double largest = step.cwiseAbs().maxCoeff();
            if (largest > settings.step_limit) step *= settings.step_limit / largest;

            candidate = q;
            for (Eigen::Index c = 0; c < k; ++c)
                candidate[static_cast<Eigen::Index>(joints[static_cast<std::size_t>(c)])] += step[c];
            clamp_pose_in_place(model, candidate);

            const Eigen::Vector3d cand_vec = target - fingertip_position(chain, candidate);
            const double cand_err = cand_vec.norm();
            if (cand_err < err) {
                q.swap(candidate);
                err_vec = cand_vec;
                err = cand_err;
                lambda = std::max(lambda_min, lambda * 0.5);
                if (err <= settings.position_tolerance) break;
            } else {
                lambda *= 4.0;
                if (lambda > lambda_max) break;  // no descent direction left
            }
        }
        return err;
    }
};

// Restart seeds as fractions of each chain joint's range: centred, both
// alternating patterns, and both ends.
constexpr double kRestartFractions[][2] = {{0.5, 0.5}, {0.1, 0.9}, {0.9, 0.1}, {0.1, 0.1}, {0.9, 0.9}};

}  // namespace

IkResult ik_solve(const HandModel& model, std::string_view finger, const Eigen::Vector3d& target, const Pose& seed,
                  const IkSettings& settings) {
    settings.validate();
    const FingerChain& chain = model.finger(finger);
    model.check_pose(seed, "ik seed");
    if (!target.allFinite()) throw ValidationError("ik target must be finite");

    const auto joints = chain.moving_joints();
    const Descent descent{model, chain, joints, target, settings};

    Pose best = seed;
    clamp_pose_in_place(model, best);
    int iterations = 0;
    double best_err = descent.run(best, iterations);

    for (const auto& fractions : kRestartFractions) {
        if (best_err <= settings.position_tolerance) break;
        Pose q = best;
        for (std::size_t i = 0; i < chain.joint_indices.size(); ++i) {
            const auto& j = model.joint(chain.joint_indices[i]);
            q[static_cast<Eigen::Index>(chain.joint_indices[i])] =
                j.min_angle + fractions[i % 2] * (j.max_angle - j.min_angle);
        }
        if (chain.adduction_joint_index) {
            // Aim the finger plane at the target.
            const Eigen::Vector3d local = chain.base_orientation.transpose() * (target - chain.base_position);
            q[static_cast<Eigen::Index>(*chain.adduction_joint_index)] = std::atan2(local.y(), local.x());
        }
        clamp_pose_in_place(model, q);
        const double err = descent.run(q, iterations);
        if (err < best_err) {
            best_err = err;
            best.swap(q);
        }
    }

    return {std::move(best), {best_err <= settings.position_tolerance, iterations, best_err}};
}

std::vector<Eigen::VectorXd> analytic_two_link_ik(const FingerChain& chain, const Eigen::Vector3d& target) {
    if (chain.joint_indices.size() != 2)
        throw ValidationError("analytic IK needs exactly two flexion joints (finger '" + chain.name + "')");

    const Eigen::Vector3d d = chain.base_orientation.transpose() * (target - chain.base_position);
    const double l1 = chain.link_lengths[0];
    const double l2 = chain.link_lengths[1];

    // (adduction angle, in-plane distal coordinate) candidates
    std::vector<std::pair<double, double>> planes;
    if (chain.adduction_joint_index) {
        const double r = std::hypot(d.x(), d.y());
        const double a = std::atan2(d.y(), d.x());
        planes.emplace_back(a, r);
        planes.emplace_back(a > 0.0 ? a - std::numbers::pi : a + std::numbers::pi, -r);
    } else {
        if (std::abs(d.y()) > 1e-9 * std::max(1.0, d.norm())) return {};
        planes.emplace_back(0.0, d.x());
    }

    std::vector<Eigen::VectorXd> out;
    for (const auto& [ad, u] : planes) {
        const double v = -d.z();
        const double c2 = (u * u + v * v - l1 * l1 - l2 * l2) / (2.0 * l1 * l2);
        if (c2 < -1.0 - 1e-12 || c2 > 1.0 + 1e-12) continue;
        const double base2 = std::acos(std::clamp(c2, -1.0, 1.0));
        for (double t2 : {base2, -base2}) {
            const double t1 = std::atan2(v, u) - std::atan2(l2 * std::sin(t2), l1 + l2 * std::cos(t2));
            Eigen::VectorXd sol(chain.adduction_joint_index ? 3 : 2);
            Eigen::Index i = 0;
            if (chain.adduction_joint_index) sol[i++] = ad;
            sol[i++] = std::remainder(t1, 2.0 * std::numbers::pi);
            sol[i++] = t2;
            out.push_back(sol);
            if (base2 == 0.0) break;
        }
    }
    return out;
}

}  // namespace telemap
