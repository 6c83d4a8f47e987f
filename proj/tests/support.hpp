#pragma once

#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include <json.hpp>

#include "telemap/hand_model.hpp"
#include "telemap/replay.hpp"

namespace support {

inline const telemap::ModelsDirectory kData{TELEMAP_DATA_DIR};

inline telemap::HandModel robot() { return telemap::load_model_file(kData.model("robot_default")); }
inline telemap::HandModel human() { return telemap::load_model_file(kData.model("human_default")); }

inline telemap::Pose random_pose(const telemap::HandModel& model, std::mt19937_64& rng) {
    telemap::Pose q(static_cast<Eigen::Index>(model.joint_count()));
    for (std::size_t i = 0; i < model.joint_count(); ++i) {
        std::uniform_real_distribution<double> u(model.joint(i).min_angle, model.joint(i).max_angle);
        q[static_cast<Eigen::Index>(i)] = u(rng);
    }
    return q;
}

inline bool bit_equal(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return a.size() == b.size() &&
           std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

inline std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline nlohmann::json read_json(const std::filesystem::path& path) { return nlohmann::json::parse(slurp(path)); }

inline void write(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() / ("telemap_" + tag + "_" + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

// A small two-finger hand used where the shipped models would obscure the point of a test.
inline nlohmann::json toy_model_json() {
    return nlohmann::json::parse(R"({
      "name": "toy",
      "joints": [
        {"name": "a_ad", "min": -0.5, "max": 0.5, "axis": "alpha"},
        {"name": "a_prox", "min": -0.3, "max": 1.6, "axis": "sigma"},
        {"name": "a_dis", "min": -0.2, "max": 1.6, "axis": "epsilon"},
        {"name": "b_prox", "min": -0.3, "max": 1.6, "axis": "sigma"},
        {"name": "b_dis", "min": -0.2, "max": 1.6, "axis": "epsilon"},
        {"name": "spare", "min": -1.0, "max": 1.0, "axis": "none"}
      ],
      "fingers": [
        {"name": "a", "base_position": [0, 0, 0], "base_orientation": [1, 0, 0, 0],
         "joints": ["a_prox", "a_dis"], "link_lengths": [0.05, 0.04], "adduction_joint": "a_ad"},
        {"name": "b", "base_position": [0.02, -0.01, 0.005], "base_orientation": [[0, 0, 1], [0, 1, 0], [-1, 0, 0]],
         "joints": [3, 4], "link_lengths": [0.03, 0.025], "adduction_joint": null}
      ],
      "origin_pose": [0.0, 0.2, 0.3, 0.2, 0.3, 0.0]
    })");
}

}  // namespace support
