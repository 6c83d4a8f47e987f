#include "telemap/hand_model.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <Eigen/Geometry>

#include "json_fields.hpp"
#include "telemap/error.hpp"

namespace telemap {

using nlohmann::json;

std::string_view to_string(Axis axis) {
    switch (axis) {
        case Axis::Alpha: return "alpha";
        case Axis::Sigma: return "sigma";
        case Axis::Epsilon: return "epsilon";
        case Axis::Unassigned: return "none";
    }
    return "none";
}

std::optional<Axis> parse_axis(std::string_view text) {
    if (text == "alpha") return Axis::Alpha;
    if (text == "sigma") return Axis::Sigma;
    if (text == "epsilon") return Axis::Epsilon;
    if (text == "none") return Axis::Unassigned;
    return std::nullopt;
}

double FingerChain::reach() const {
    double sum = 0.0;
    for (double l : link_lengths) sum += l;
    return sum;
}

std::vector<std::size_t> FingerChain::moving_joints() const {
    std::vector<std::size_t> out;
    out.reserve(joint_indices.size() + 1);
    if (adduction_joint_index) out.push_back(*adduction_joint_index);
    out.insert(out.end(), joint_indices.begin(), joint_indices.end());
    return out;
}

namespace {

constexpr double kRotationTolerance = 1e-9;

void validate_rotation(const Eigen::Matrix3d& r, const std::string& path) {
    const double ortho = (r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
    if (!(ortho <= kRotationTolerance) || std::abs(r.determinant() - 1.0) > kRotationTolerance)
        detail::fail(path, "expected a proper rotation (orthonormal, determinant +1)");
}

}  // namespace

HandModel::HandModel(std::string name, std::vector<JointDescriptor> joints, std::vector<FingerChain> fingers,
                     Pose origin_pose)
    : name_(std::move(name)), joints_(std::move(joints)), fingers_(std::move(fingers)), origin_(std::move(origin_pose)) {
    if (name_.empty()) detail::fail("name", "expected a non-empty model name");
    if (joints_.empty()) detail::fail("joints", "expected at least one joint");

    std::set<std::string> joint_names;
    for (std::size_t i = 0; i < joints_.size(); ++i) {
        const auto& j = joints_[i];
        const std::string path = detail::element("joints", i);
        if (j.name.empty()) detail::fail(path + ".name", "expected a non-empty joint name");
        if (!joint_names.insert(j.name).second) detail::fail(path + ".name", "duplicate joint name '" + j.name + "'");
        if (!std::isfinite(j.min_angle) || !std::isfinite(j.max_angle))
            detail::fail(path, "joint limits must be finite");
        if (!(j.min_angle < j.max_angle))
            detail::fail(path, "limit inversion: min (" + std::to_string(j.min_angle) + ") must be below max (" +
                                   std::to_string(j.max_angle) + ")");
    }

    std::vector<int> owner(joints_.size(), -1);
    std::set<std::string> finger_names;
    for (std::size_t f = 0; f < fingers_.size(); ++f) {
        const auto& chain = fingers_[f];
        const std::string path = detail::element("fingers", f);
        if (chain.name.empty()) detail::fail(path + ".name", "expected a non-empty finger name");
        if (!finger_names.insert(chain.name).second)
            detail::fail(path + ".name", "duplicate finger name '" + chain.name + "'");
        if (chain.joint_indices.empty()) detail::fail(path + ".joints", "expected at least one flexion joint");
        if (chain.link_lengths.size() != chain.joint_indices.size())
            detail::fail(path + ".link_lengths", "expected one link length per flexion joint (" +
                                                     std::to_string(chain.joint_indices.size()) + ")");
        for (std::size_t k = 0; k < chain.link_lengths.size(); ++k) {
            const double l = chain.link_lengths[k];
            if (!std::isfinite(l) || l < 0.0)
                detail::fail(detail::element(path + ".link_lengths", k), "expected a finite non-negative length");
        }
        if (!chain.base_position.allFinite()) detail::fail(path + ".base_position", "expected finite coordinates");
        validate_rotation(chain.base_orientation, path + ".base_orientation");

        for (std::size_t idx : chain.moving_joints()) {
            if (idx >= joints_.size())
                detail::fail(path + ".joints", "dangling joint index " + std::to_string(idx) + " (model has " +
                                                   std::to_string(joints_.size()) + " joints)");
            if (owner[idx] != -1)
                detail::fail(path + ".joints", "joint '" + joints_[idx].name + "' is already used by finger '" +
                                                   fingers_[static_cast<std::size_t>(owner[idx])].name + "'");
            owner[idx] = static_cast<int>(f);
        }
    }

    if (origin_.size() != static_cast<Eigen::Index>(joints_.size()))
        detail::fail("origin_pose", "expected " + std::to_string(joints_.size()) + " angles, got " +
                                        std::to_string(origin_.size()));
    for (std::size_t i = 0; i < joints_.size(); ++i) {
        const double v = origin_[static_cast<Eigen::Index>(i)];
        if (!std::isfinite(v) || v < joints_[i].min_angle || v > joints_[i].max_angle)
            detail::fail(detail::element("origin_pose", i), "outside the limits of joint '" + joints_[i].name + "'");
    }
}

std::optional<std::size_t> HandModel::find_joint(std::string_view name) const {
    for (std::size_t i = 0; i < joints_.size(); ++i)
        if (joints_[i].name == name) return i;
    return std::nullopt;
}

const FingerChain* HandModel::find_finger(std::string_view name) const {
    for (const auto& f : fingers_)
        if (f.name == name) return &f;
    return nullptr;
}

const FingerChain& HandModel::finger(std::string_view name) const {
    if (const auto* f = find_finger(name)) return *f;
    throw ValidationError("model '" + name_ + "' has no finger named '" + std::string(name) + "'");
}

void HandModel::check_pose(const Pose& pose, std::string_view what) const {
    if (pose.size() != static_cast<Eigen::Index>(joints_.size()))
        throw ValidationError(std::string(what) + ": expected " + std::to_string(joints_.size()) +
                              " joint angles for model '" + name_ + "', got " + std::to_string(pose.size()));
    if (!pose.allFinite()) throw ValidationError(std::string(what) + ": joint angles must be finite");
}

bool HandModel::within_limits(const Pose& pose) const {
    if (pose.size() != static_cast<Eigen::Index>(joints_.size())) return false;
    for (std::size_t i = 0; i < joints_.size(); ++i) {
        const double v = pose[static_cast<Eigen::Index>(i)];
        if (!(v >= joints_[i].min_angle && v <= joints_[i].max_angle)) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

std::size_t resolve_joint(const json& ref, const std::vector<JointDescriptor>& joints, const std::string& path) {
    if (ref.is_string()) {
        const auto name = ref.get<std::string>();
        for (std::size_t i = 0; i < joints.size(); ++i)
            if (joints[i].name == name) return i;
        detail::fail(path, "dangling joint reference '" + name + "'");
    }
    if (ref.is_number_integer()) {
        const auto idx = ref.get<long long>();
        if (idx < 0 || static_cast<std::size_t>(idx) >= joints.size())
            detail::fail(path, "dangling joint index " + std::to_string(idx));
        return static_cast<std::size_t>(idx);
    }
    detail::fail(path, "expected a joint name or index");
}

Eigen::Matrix3d parse_orientation(const json& v, const std::string& path) {
    if (v.is_array() && v.size() == 4 && v[0].is_number()) {
        Eigen::Quaterniond q(detail::number(v[0], path + "[0]"), detail::number(v[1], path + "[1]"),
                             detail::number(v[2], path + "[2]"), detail::number(v[3], path + "[3]"));
        if (std::abs(q.norm() - 1.0) > 1e-6) detail::fail(path, "expected a unit quaternion [w, x, y, z]");
        return q.normalized().toRotationMatrix();
    }
    if (v.is_array() && v.size() == 3) {
        Eigen::Matrix3d r;
        for (int i = 0; i < 3; ++i) {
            const std::string row_path = detail::element(path, static_cast<std::size_t>(i));
            const Eigen::Vector3d row = detail::vector3(v[static_cast<std::size_t>(i)], row_path);
            r.row(i) = row.transpose();
        }
        return r;
    }
    detail::fail(path, "expected a quaternion [w, x, y, z] or a row-major 3x3 rotation");
}

}  // namespace

HandModel load_model(const json& doc) {
    std::string name = detail::text(detail::require(doc, "name"), "name");

    const json& joints_doc = detail::array(detail::require(doc, "joints"), "joints");
    std::vector<JointDescriptor> joints;
    joints.reserve(joints_doc.size());
    for (std::size_t i = 0; i < joints_doc.size(); ++i) {
        const std::string path = detail::element("joints", i);
        const json& j = joints_doc[i];
        JointDescriptor d;
        d.name = detail::text(detail::require(j, "name", path), path + ".name");
        d.min_angle = detail::number(detail::require(j, "min", path), path + ".min");
        d.max_angle = detail::number(detail::require(j, "max", path), path + ".max");
        const auto axis_text = detail::text(detail::require(j, "axis", path), path + ".axis");
        const auto axis = parse_axis(axis_text);
        if (!axis) detail::fail(path + ".axis", "expected one of \"alpha\", \"sigma\", \"epsilon\", \"none\"");
        d.axis = *axis;
        joints.push_back(std::move(d));
    }

    std::vector<FingerChain> fingers;
    if (const json* fingers_doc = detail::optional(doc, "fingers")) {
        detail::array(*fingers_doc, "fingers");
        for (std::size_t f = 0; f < fingers_doc->size(); ++f) {
            const std::string path = detail::element("fingers", f);
            const json& c = (*fingers_doc)[f];
            FingerChain chain;
            chain.name = detail::text(detail::require(c, "name", path), path + ".name");
            chain.base_position =
                detail::vector3(detail::require(c, "base_position", path), path + ".base_position");
            chain.base_orientation =
                parse_orientation(detail::require(c, "base_orientation", path), path + ".base_orientation");
            const json& refs = detail::array(detail::require(c, "joints", path), path + ".joints");
            for (std::size_t k = 0; k < refs.size(); ++k)
                chain.joint_indices.push_back(resolve_joint(refs[k], joints, detail::element(path + ".joints", k)));
            const Eigen::VectorXd lengths =
                detail::vector(detail::require(c, "link_lengths", path), path + ".link_lengths");
            chain.link_lengths.assign(lengths.data(), lengths.data() + lengths.size());
            if (const json* ad = detail::optional(c, "adduction_joint"))
                chain.adduction_joint_index = resolve_joint(*ad, joints, path + ".adduction_joint");

            std::set<std::size_t> distinct(chain.joint_indices.begin(), chain.joint_indices.end());
            if (distinct.size() != chain.joint_indices.size())
                detail::fail(path + ".joints", "joint indices must be distinct");
            if (chain.adduction_joint_index && distinct.count(*chain.adduction_joint_index))
                detail::fail(path + ".adduction_joint", "adduction joint is also listed as a flexion joint");
            fingers.push_back(std::move(chain));
        }
    }

    Pose origin = detail::vector(detail::require(doc, "origin_pose"), "origin_pose");
    return HandModel(std::move(name), std::move(joints), std::move(fingers), std::move(origin));
}

HandModel load_model_file(const std::filesystem::path& path) {
    return detail::load_from_file(path, [](const json& doc) { return load_model(doc); });
}

json to_json(const HandModel& model) {
    json joints = json::array();
    for (const auto& j : model.joints())
        joints.push_back({{"name", j.name}, {"min", j.min_angle}, {"max", j.max_angle}, {"axis", to_string(j.axis)}});

    json fingers = json::array();
    for (const auto& f : model.fingers()) {
        json rows = json::array();
        for (int i = 0; i < 3; ++i)
            rows.push_back({f.base_orientation(i, 0), f.base_orientation(i, 1), f.base_orientation(i, 2)});
        json refs = json::array();
        for (std::size_t idx : f.joint_indices) refs.push_back(model.joint(idx).name);
        fingers.push_back({
            {"name", f.name},
            {"base_position", {f.base_position.x(), f.base_position.y(), f.base_position.z()}},
            {"base_orientation", rows},
            {"joints", refs},
            {"link_lengths", f.link_lengths},
            {"adduction_joint", f.adduction_joint_index ? json(model.joint(*f.adduction_joint_index).name) : json()},
        });
    }
    return {{"name", model.name()},
            {"joints", joints},
            {"fingers", fingers},
            {"origin_pose", detail::to_json(model.origin_pose())}};
}

// ---------------------------------------------------------------------------
// Kinematics

namespace {

Eigen::Matrix3d adduction_rotation(const FingerChain& chain, const Eigen::Ref<const Eigen::VectorXd>& pose) {
    if (!chain.adduction_joint_index) return Eigen::Matrix3d::Identity();
    const double a = pose[static_cast<Eigen::Index>(*chain.adduction_joint_index)];
    return Eigen::AngleAxisd(a, Eigen::Vector3d::UnitZ()).toRotationMatrix();
}

// Planar chain point after the first `links` links, in the finger frame.
Eigen::Vector3d planar_point(const FingerChain& chain, const Eigen::Ref<const Eigen::VectorXd>& pose,
                             std::size_t links) {
    Eigen::Vector3d p = Eigen::Vector3d::Zero();
    double phi = 0.0;
    for (std::size_t k = 0; k < links; ++k) {
        phi += pose[static_cast<Eigen::Index>(chain.joint_indices[k])];
        p += chain.link_lengths[k] * Eigen::Vector3d(std::cos(phi), 0.0, -std::sin(phi));
    }
    return p;
}

}  // namespace

Eigen::Vector3d fingertip_position(const FingerChain& chain, const Eigen::Ref<const Eigen::VectorXd>& pose) {
    return chain.base_position +
           chain.base_orientation * adduction_rotation(chain, pose) *
               planar_point(chain, pose, chain.joint_indices.size());
}

Eigen::Matrix3Xd fingertip_jacobian(const FingerChain& chain, const Eigen::Ref<const Eigen::VectorXd>& pose) {
    const Eigen::Matrix3d frame = chain.base_orientation * adduction_rotation(chain, pose);
    const Eigen::Vector3d tip = chain.base_position + frame * planar_point(chain, pose, chain.joint_indices.size());

    const auto moving = chain.moving_joints();
    Eigen::Matrix3Xd jac(3, static_cast<Eigen::Index>(moving.size()));
    Eigen::Index col = 0;
    if (chain.adduction_joint_index) {
        const Eigen::Vector3d axis = chain.base_orientation.col(2);
        jac.col(col++) = axis.cross(tip - chain.base_position);
    }
    const Eigen::Vector3d flex_axis = frame.col(1);
    for (std::size_t k = 0; k < chain.joint_indices.size(); ++k) {
        const Eigen::Vector3d joint_pos = chain.base_position + frame * planar_point(chain, pose, k);
        jac.col(col++) = flex_axis.cross(tip - joint_pos);
    }
    return jac;
}

Eigen::Vector3d forward_kinematics(const HandModel& model, const Pose& pose, std::string_view finger) {
    const FingerChain& chain = model.finger(finger);
    model.check_pose(pose);
    return fingertip_position(chain, pose);
}

void clamp_pose_in_place(const HandModel& model, Eigen::Ref<Eigen::VectorXd> pose) {
    const auto& joints = model.joints();
    for (std::size_t i = 0; i < joints.size(); ++i) {
        auto& v = pose[static_cast<Eigen::Index>(i)];
        v = std::clamp(v, joints[i].min_angle, joints[i].max_angle);
    }
}

Pose clamp_pose(const HandModel& model, const Pose& pose) {
    model.check_pose(pose);
    Pose out = pose;
    clamp_pose_in_place(model, out);
    return out;
}

}  // namespace telemap
