#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "telemap/hand_model.hpp"
#include "telemap/subspace.hpp"

namespace telemap {

enum class Extreme { Min, Max };

/// "alpha_min", "sigma_max", ... : which extreme of which axis a pose demonstrates.
struct CalibrationLabel {
    Axis axis = Axis::Alpha;
    Extreme extreme = Extreme::Min;

    friend bool operator==(const CalibrationLabel&, const CalibrationLabel&) = default;
};

std::optional<CalibrationLabel> parse_label(std::string_view text);
std::string to_string(const CalibrationLabel& label);

struct CalibrationPose {
    std::vector<CalibrationLabel> labels;
    Pose angles;
};

/// User-demonstrated extrema poses for one hand. An axis may be declared
/// inert instead of being demonstrated.
struct CalibrationSet {
    std::string model_name;
    std::vector<CalibrationPose> poses;
    std::array<bool, 3> declared_inert{false, false, false};
};

CalibrationSet load_calibration_set(const nlohmann::json& document);
CalibrationSet load_calibration_file(const std::filesystem::path& path);
nlohmann::json to_json(const CalibrationSet& set);

/// Unscaled projection statistics of one axis over its labelled poses.
struct AxisCalibration {
    Axis axis = Axis::Alpha;
    bool inert = false;
    double unscaled_min = 0.0;
    double unscaled_max = 0.0;
    double range = 0.0;       ///< |max| + |min|, the quantity delta normalizes
    double span = 0.0;        ///< max - min, differs from range when both extrema share a sign
    double delta = 0.0;
    double delta_star = 0.0;
    std::size_t pose_count = 0;
};

struct CalibrationReport {
    std::string model_name;
    std::array<AxisCalibration, 3> axes;
    std::vector<std::string> warnings;
};

nlohmann::json to_json(const CalibrationReport& report);

struct ScalingResult {
    ScalingFactors scaling;
    CalibrationReport report;
};

/// Checks model name, pose lengths and joint limits of every pose.
void validate_calibration_set(const HandModel& model, const CalibrationSet& set);

/// Projects every pose with t = (q - o) A, reduces each axis to min/max over
/// the poses labelled for it, then delta = 1 / (|max| + |min|), or 0 for a
/// zero range. An axis with a zero column in A is inert regardless of labels.
ScalingResult compute_scaling(const CalibrationSet& set, const Pose& origin, const ProjectionMatrix& matrix);

struct CalibrationResult {
    SubspaceMapping mapping;
    CalibrationReport report;
};

/// Bundles the model's origin, its projection matrix and the computed scaling.
CalibrationResult calibrate(const HandModel& model, const CalibrationSet& set);

}  // namespace telemap
