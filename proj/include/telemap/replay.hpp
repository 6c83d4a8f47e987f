#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "telemap/calibration.hpp"
#include "telemap/fingertip_mapping.hpp"
#include "telemap/hand_model.hpp"
#include "telemap/joint_mapping.hpp"
#include "telemap/subspace.hpp"
#include "telemap/trajectory.hpp"

namespace telemap {

enum class Method { Subspace, Joint, Fingertip };

inline constexpr Method kAllMethods[] = {Method::Subspace, Method::Joint, Method::Fingertip};

std::string_view to_string(Method method);
std::optional<Method> parse_method(std::string_view text);

/// Master and slave hands with everything the three mapping methods need.
/// The baseline configs are optional; methods that need a missing one are
/// rejected by require().
struct MappingSetup {
    HandModel master;
    HandModel slave;
    SubspaceMapping master_mapping;
    SubspaceMapping slave_mapping;
    std::optional<JointCorrespondence> correspondence;
    std::optional<FingertipMapConfig> fingertip;

    /// Joint counts of mappings agree with their models; configs reference valid joints/chains.
    void validate() const;
    /// Throws ValidationError if `method` cannot run with this setup.
    void require(Method method) const;
};

/// File locations inside a models directory.
struct ModelsDirectory {
    std::filesystem::path root;

    std::filesystem::path model(std::string_view name) const { return root / (std::string(name) + ".model.json"); }
    std::filesystem::path calibration(std::string_view name) const { return root / (std::string(name) + ".cal"); }
    std::filesystem::path correspondence() const { return root / "correspondence.json"; }
    std::filesystem::path fingertip_config() const { return root / "fingertip.json"; }
    std::filesystem::path named_poses() const { return root / "human_poses.json"; }

    /// Names of every "<name>.model.json" in the directory, sorted.
    std::vector<std::string> model_names() const;
};

/// Loads both models, calibrates each from "<name>.cal", and loads the
/// baseline configs when present. Configs that do not fit the chosen pair
/// are left out rather than failing the whole setup.
MappingSetup load_setup(const ModelsDirectory& dir, std::string_view master, std::string_view slave);

/// Named poses file: {"model_name": ..., "poses": {"name": [angles...]}}.
Pose load_named_pose(const std::filesystem::path& path, const HandModel& model, std::string_view name);

/// Maps one master pose with the chosen method and clamps to slave limits.
/// `seed` warm-starts the fingertip IK; ignored by the other methods.
Pose map_with(Method method, const MappingSetup& setup, const Pose& q_m, const Pose& seed,
              FingertipMapResult* fingertip_details = nullptr);

struct LatencyStats {
    double median = 0.0;  ///< seconds
    double p99 = 0.0;
    double max = 0.0;
    double mean = 0.0;
    /// Counts per bucket; bucket i holds latencies <= kLatencyBucketsUs[i] microseconds, the last is unbounded.
    std::array<std::size_t, 10> histogram{};
};

inline constexpr std::array<double, 9> kLatencyBucketsUs{1, 2, 5, 10, 20, 50, 100, 1000, 10000};

struct MethodReport {
    Method method = Method::Subspace;
    std::size_t samples = 0;
    /// Mean distance between each paired slave fingertip and its scaled,
    /// rotated master fingertip. Empty without a fingertip config.
    std::optional<double> mean_fingertip_error;  ///< meters
    double max_joint_velocity = 0.0;             ///< rad/s
    /// Largest |q_s - project_from(project_to(q_s))| over the run, i.e. how
    /// far slave outputs leave the slave's own subspace.
    double roundtrip_residual = 0.0;
    std::size_t ik_failures = 0;  ///< fingertip method: samples with a non-converged finger
    LatencyStats latency;
};

struct ReplayResult {
    Trajectory slave;
    MethodReport report;
};

/// Maps every sample; fingertip IK is seeded with the previous output (the
/// slave origin for the first sample).
ReplayResult replay(const Trajectory& master_trajectory, Method method, const MappingSetup& setup);

struct ComparisonReport {
    std::size_t samples = 0;
    std::vector<MethodReport> methods;
};

ComparisonReport compare(const Trajectory& master_trajectory, const MappingSetup& setup);

nlohmann::json to_json(const MethodReport& report);
nlohmann::json to_json(const ComparisonReport& report);
/// Fixed-width side-by-side table, one column per method.
std::string format_table(const ComparisonReport& report);

}  // namespace telemap
