#include "telemap/calibration.hpp"

#include <algorithm>
#include <cmath>

#include "json_fields.hpp"
#include "telemap/error.hpp"

namespace telemap {

using nlohmann::json;

std::optional<CalibrationLabel> parse_label(std::string_view text) {
    const auto sep = text.rfind('_');
    if (sep == std::string_view::npos) return std::nullopt;
    const auto axis = parse_axis(text.substr(0, sep));
    if (!axis || *axis == Axis::Unassigned) return std::nullopt;
    const auto end = text.substr(sep + 1);
    if (end == "min") return CalibrationLabel{*axis, Extreme::Min};
    if (end == "max") return CalibrationLabel{*axis, Extreme::Max};
    return std::nullopt;
}

std::string to_string(const CalibrationLabel& label) {
    return std::string(to_string(label.axis)) + (label.extreme == Extreme::Min ? "_min" : "_max");
}

CalibrationSet load_calibration_set(const json& doc) {
    CalibrationSet set;
    set.model_name = detail::text(detail::require(doc, "model_name"), "model_name");
    const json& poses = detail::array(detail::require(doc, "poses"), "poses");
    for (std::size_t i = 0; i < poses.size(); ++i) {
        const std::string path = detail::element("poses", i);
        CalibrationPose pose;
        const json& labels = detail::array(detail::require(poses[i], "labels", path), path + ".labels");
        for (std::size_t k = 0; k < labels.size(); ++k) {
            const std::string label_path = detail::element(path + ".labels", k);
            const auto label = parse_label(detail::text(labels[k], label_path));
            if (!label) detail::fail(label_path, "expected <alpha|sigma|epsilon>_<min|max>");
            pose.labels.push_back(*label);
        }
        pose.angles = detail::vector(detail::require(poses[i], "angles", path), path + ".angles");
        set.poses.push_back(std::move(pose));
    }
    if (const json* inert = detail::optional(doc, "inert_axes")) {
        detail::array(*inert, "inert_axes");
        for (std::size_t k = 0; k < inert->size(); ++k) {
            const std::string path = detail::element("inert_axes", k);
            const auto axis = parse_axis(detail::text((*inert)[k], path));
            if (!axis || *axis == Axis::Unassigned) detail::fail(path, "expected \"alpha\", \"sigma\" or \"epsilon\"");
            set.declared_inert[static_cast<std::size_t>(*axis)] = true;
        }
    }
    return set;
}

CalibrationSet load_calibration_file(const std::filesystem::path& path) {
    return detail::load_from_file(path, [](const json& doc) { return load_calibration_set(doc); });
}

json to_json(const CalibrationSet& set) {
    json poses = json::array();
    for (const auto& p : set.poses) {
        json labels = json::array();
        for (const auto& l : p.labels) labels.push_back(to_string(l));
        poses.push_back({{"labels", labels}, {"angles", detail::to_json(p.angles)}});
    }
    json doc = {{"model_name", set.model_name}, {"poses", poses}};
    json inert = json::array();
    for (Axis axis : kSubspaceAxes)
        if (set.declared_inert[static_cast<std::size_t>(axis)]) inert.push_back(to_string(axis));
    if (!inert.empty()) doc["inert_axes"] = inert;
    return doc;
}

json to_json(const CalibrationReport& report) {
    json axes = json::array();
    for (const auto& a : report.axes) {
        axes.push_back({{"axis", to_string(a.axis)},
                        {"inert", a.inert},
                        {"unscaled_min", a.unscaled_min},
                        {"unscaled_max", a.unscaled_max},
                        {"range_abs_sum", a.range},
                        {"range_max_minus_min", a.span},
                        {"delta", a.delta},
                        {"delta_star", a.delta_star},
                        {"pose_count", a.pose_count}});
    }
    return {{"model_name", report.model_name}, {"axes", axes}, {"warnings", report.warnings}};
}

void validate_calibration_set(const HandModel& model, const CalibrationSet& set) {
    if (set.model_name != model.name())
        throw ValidationError("calibration set is for model '" + set.model_name + "', not '" + model.name() + "'");
    for (std::size_t i = 0; i < set.poses.size(); ++i) {
        const std::string path = detail::element("poses", i) + ".angles";
        const Pose& q = set.poses[i].angles;
        model.check_pose(q, path);
        for (std::size_t j = 0; j < model.joint_count(); ++j) {
            const auto& joint = model.joint(j);
            const double v = q[static_cast<Eigen::Index>(j)];
            if (v < joint.min_angle || v > joint.max_angle)
                throw ValidationError(detail::element(path, j) + ": angle " + std::to_string(v) +
                                      " outside the limits of joint '" + joint.name + "' [" +
                                      std::to_string(joint.min_angle) + ", " + std::to_string(joint.max_angle) + "]");
        }
    }
}

ScalingResult compute_scaling(const CalibrationSet& set, const Pose& origin, const ProjectionMatrix& matrix) {
    if (origin.size() != matrix.rows())
        throw ValidationError("compute_scaling: origin length does not match the projection matrix");

    CalibrationReport report;
    report.model_name = set.model_name;
    const auto& a = matrix.matrix();

    std::array<bool, 3> seen_min{}, seen_max{};
    for (std::size_t c = 0; c < 3; ++c) report.axes[c].axis = static_cast<Axis>(c);

    for (std::size_t i = 0; i < set.poses.size(); ++i) {
        const auto& pose = set.poses[i];
        if (pose.angles.size() != origin.size())
            throw ValidationError(detail::element("poses", i) + ".angles: expected " + std::to_string(origin.size()) +
                                  " angles, got " + std::to_string(pose.angles.size()));
        const Eigen::RowVector3d t = (pose.angles - origin).transpose() * a;

        std::array<bool, 3> labelled{};
        for (const auto& label : pose.labels) {
            const auto c = static_cast<std::size_t>(label.axis);
            labelled[c] = true;
            (label.extreme == Extreme::Min ? seen_min : seen_max)[c] = true;
        }
        for (std::size_t c = 0; c < 3; ++c) {
            if (!labelled[c]) continue;
            auto& axis = report.axes[c];
            const double v = t[static_cast<Eigen::Index>(c)];
            if (axis.pose_count == 0) {
                axis.unscaled_min = axis.unscaled_max = v;
            } else {
                axis.unscaled_min = std::min(axis.unscaled_min, v);
                axis.unscaled_max = std::max(axis.unscaled_max, v);
            }
            ++axis.pose_count;
        }
    }

    Eigen::Vector3d ranges = Eigen::Vector3d::Zero();
    for (std::size_t c = 0; c < 3; ++c) {
        auto& axis = report.axes[c];
        const auto name = std::string(to_string(axis.axis));
        if (matrix.column_is_zero(axis.axis)) {
            axis.inert = true;
            report.warnings.push_back(name + ": no joints are assigned to this axis; axis is inert");
            axis.unscaled_min = axis.unscaled_max = 0.0;
            continue;
        }
        if (set.declared_inert[c]) {
            axis.inert = true;
            report.warnings.push_back(name + ": declared inert by the calibration set");
            axis.unscaled_min = axis.unscaled_max = 0.0;
            continue;
        }
        if (!seen_min[c] || !seen_max[c])
            throw ValidationError("calibration set for '" + set.model_name + "' has no pose labelled " + name +
                                  (!seen_min[c] ? "_min" : "_max") + " and the axis is not declared inert");
        axis.range = std::abs(axis.unscaled_max) + std::abs(axis.unscaled_min);
        axis.span = axis.unscaled_max - axis.unscaled_min;
        ranges[static_cast<Eigen::Index>(c)] = axis.range;
        if (axis.range == 0.0) {
            axis.inert = true;
            report.warnings.push_back(name + ": calibration poses do not move this axis (zero range); axis is inert");
        } else if (axis.unscaled_min * axis.unscaled_max > 0.0) {
            report.warnings.push_back(name + ": both extrema lie on the same side of the origin; |max| + |min| (" +
                                      std::to_string(axis.range) + ") differs from max - min (" +
                                      std::to_string(axis.span) + ")");
        }
    }
    if (matrix.is_zero()) report.warnings.push_back("projection matrix is zero; every axis is inert");

    ScalingFactors scaling = ScalingFactors::from_ranges(ranges);
    for (std::size_t c = 0; c < 3; ++c) {
        report.axes[c].delta = scaling.delta()[static_cast<Eigen::Index>(c)];
        report.axes[c].delta_star = scaling.delta_star()[static_cast<Eigen::Index>(c)];
    }
    return {std::move(scaling), std::move(report)};
}

CalibrationResult calibrate(const HandModel& model, const CalibrationSet& set) {
    validate_calibration_set(model, set);
    ProjectionMatrix matrix = build_projection_matrix(model);
    auto [scaling, report] = compute_scaling(set, model.origin_pose(), matrix);
    return {SubspaceMapping(model.name(), model.origin_pose(), std::move(matrix), std::move(scaling)),
            std::move(report)};
}

}  // namespace telemap
