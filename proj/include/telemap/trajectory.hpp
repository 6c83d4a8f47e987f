#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "telemap/hand_model.hpp"

namespace telemap {

struct TrajectorySample {
    double time = 0.0;  ///< seconds
    Pose pose;
};

/// Timestamped poses of one hand. Timestamps strictly increase and every
/// pose has one entry per joint name.
class Trajectory {
public:
    Trajectory() = default;
    /// Throws ValidationError on non-monotone time or length drift.
    Trajectory(std::string model_name, std::vector<std::string> joint_names, std::vector<TrajectorySample> samples);

    const std::string& model_name() const { return model_name_; }
    const std::vector<std::string>& joint_names() const { return joint_names_; }
    const std::vector<TrajectorySample>& samples() const { return samples_; }
    std::size_t size() const { return samples_.size(); }
    bool empty() const { return samples_.empty(); }

    /// Trajectory whose joint names are the model's, checked for length.
    static Trajectory for_model(const HandModel& model, std::vector<TrajectorySample> samples);

    friend bool operator==(const Trajectory& a, const Trajectory& b);

private:
    std::string model_name_;
    std::vector<std::string> joint_names_;
    std::vector<TrajectorySample> samples_;
};

/// Parses "time,<joint names...>" delimited text. Errors name source:line.
Trajectory parse_trajectory(std::string_view text, std::string_view source = "<trajectory>");
std::string format_trajectory(const Trajectory& trajectory);

Trajectory read_trajectory(const std::filesystem::path& path);
/// Also checks that the header's joint names are exactly the model's.
Trajectory read_trajectory(const std::filesystem::path& path, const HandModel& model);
void write_trajectory(const Trajectory& trajectory, const std::filesystem::path& path);

}  // namespace telemap
