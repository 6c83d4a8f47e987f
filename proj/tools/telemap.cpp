// telemap: command-line front end for hand-pose retargeting.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "telemap/calibration.hpp"
#include "telemap/error.hpp"
#include "telemap/replay.hpp"
#include "telemap/service.hpp"
#include "telemap/subspace.hpp"
#include "telemap/trajectory.hpp"

#ifndef TELEMAP_DATA_DIR
#define TELEMAP_DATA_DIR "data"
#endif

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr int kExitValidation = 1;
constexpr int kExitIo = 2;

constexpr const char* kFormats = R"(File formats (JSON unless noted; angles in radians, lengths in meters):
  hand model      {"name", "joints": [{"name","min","max","axis": "alpha"|"sigma"|"epsilon"|"none"}],
                   "fingers": [{"name","base_position":[x,y,z],"base_orientation": 3x3 rows | [w,x,y,z],
                                "joints":[flexion joint names],"link_lengths":[..],"adduction_joint": name|null}],
                   "origin_pose": [..]}
  calibration     {"model_name", "poses": [{"labels": ["sigma_max","alpha_min",..], "angles": [..]}],
                   "inert_axes": ["alpha",..] (optional)}
  mapping         {"model_name", "origin": [..], "matrix": N rows of [alpha,sigma,epsilon],
                   "delta": [3], "delta_star": [3]}
  correspondence  [{"master": name|index, "slave": name|index, "gain", "offset"}]
  fingertip cfg   {"scale", "rotation": 3x3 rows, "pairs": [[master_finger, slave_finger]],
                   "ik": {"damping","max_iterations","position_tolerance","step_limit"}}
  trajectory      CSV text: header "time,<joint names...>", then one sample per row, seconds and radians
A models directory holds <name>.model.json, <name>.cal, correspondence.json and fingertip.json.
Exit codes: 0 success, 1 validation error, 2 I/O error.)";

Eigen::VectorXd parse_pose_arg(const std::string& text) {
    std::vector<double> values;
    std::stringstream ss(text);
    std::string cell;
    std::size_t index = 0;
    while (std::getline(ss, cell, ',')) {
        ++index;
        try {
            std::size_t used = 0;
            const double v = std::stod(cell, &used);
            while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used]))) ++used;
            if (used != cell.size() || !std::isfinite(v)) throw std::invalid_argument(cell);
            values.push_back(v);
        } catch (const std::exception&) {
            throw telemap::ValidationError("--pose: entry " + std::to_string(index) + " ('" + cell +
                                           "') is not a finite number");
        }
    }
    if (values.empty()) throw telemap::ValidationError("--pose: expected comma-separated radians");
    return Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

json vec_json(const Eigen::VectorXd& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
    return out;
}

void write_file(const fs::path& path, const std::string& content) {
    std::FILE* f = std::fopen(path.string().c_str(), "wb");
    if (!f) throw telemap::IoError(path.string() + ": cannot open for writing");
    const bool ok = std::fwrite(content.data(), 1, content.size(), f) == content.size();
    if (std::fclose(f) != 0 || !ok) throw telemap::IoError(path.string() + ": write failed");
}

struct SetupOptions {
    std::string models_dir = TELEMAP_DATA_DIR;
    std::string master = "human_default";
    std::string slave = "robot_default";
    std::string master_model, slave_model, master_cal, slave_cal, correspondence, fingertip;

    void add_to(CLI::App* cmd) {
        cmd->add_option("--models-dir", models_dir, "Directory with default models and configs")->capture_default_str();
        cmd->add_option("--master", master, "Master model name inside --models-dir")->capture_default_str();
        cmd->add_option("--slave", slave, "Slave model name inside --models-dir")->capture_default_str();
        cmd->add_option("--master-model", master_model, "Master hand model file (overrides --master)");
        cmd->add_option("--slave-model", slave_model, "Slave hand model file (overrides --slave)");
        cmd->add_option("--master-cal", master_cal, "Master calibration file");
        cmd->add_option("--slave-cal", slave_cal, "Slave calibration file");
        cmd->add_option("--correspondence", correspondence, "Joint correspondence file");
        cmd->add_option("--fingertip-config", fingertip, "Fingertip mapping config file");
    }

    telemap::MappingSetup load() const {
        const telemap::ModelsDirectory dir{models_dir};
        auto model = [&](const std::string& file, const std::string& name) {
            return telemap::load_model_file(file.empty() ? dir.model(name) : fs::path(file));
        };
        telemap::HandModel m = model(master_model, master);
        telemap::HandModel s = model(slave_model, slave);
        auto mapping = [&](const telemap::HandModel& hand, const std::string& file) {
            const fs::path path = file.empty() ? dir.calibration(hand.name()) : fs::path(file);
            return telemap::calibrate(hand, telemap::load_calibration_file(path)).mapping;
        };
        telemap::SubspaceMapping mm = mapping(m, master_cal);
        telemap::SubspaceMapping sm = mapping(s, slave_cal);

        std::optional<telemap::JointCorrespondence> corr;
        const fs::path corr_path = correspondence.empty() ? dir.correspondence() : fs::path(correspondence);
        if (!correspondence.empty() || fs::exists(corr_path))
            corr = telemap::load_correspondence_file(corr_path, m, s);
        std::optional<telemap::FingertipMapConfig> ft;
        const fs::path ft_path = fingertip.empty() ? dir.fingertip_config() : fs::path(fingertip);
        if (!fingertip.empty() || fs::exists(ft_path)) ft = telemap::load_fingertip_config_file(ft_path);

        telemap::MappingSetup setup{std::move(m), std::move(s), std::move(mm), std::move(sm), std::move(corr),
                                    std::move(ft)};
        setup.validate();
        return setup;
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"telemap: retarget hand poses between dissimilar hands through a shared 3-D teleoperation subspace"};
    app.footer(kFormats);
    app.require_subcommand(1);

    // calibrate
    auto* cal = app.add_subcommand("calibrate", "Compute a subspace mapping from extrema poses");
    std::string cal_model, cal_poses, cal_out, cal_report;
    cal->add_option("--model", cal_model, "Hand model file")->required();
    cal->add_option("--poses", cal_poses, "Calibration file")->required();
    cal->add_option("--out", cal_out, "Mapping file to write")->required();
    cal->add_option("--report", cal_report, "Optional calibration report file (JSON)");

    // map
    auto* map = app.add_subcommand("map", "Map one master pose to the slave");
    std::string map_master, map_slave, map_pose_text, map_slave_model;
    map->add_option("--master-mapping", map_master, "Master mapping file")->required();
    map->add_option("--slave-mapping", map_slave, "Slave mapping file")->required();
    map->add_option("--pose", map_pose_text, "Master pose, comma-separated radians")->required();
    map->add_option("--slave-model", map_slave_model, "Slave model file; clamps the result to its limits");

    // replay
    auto* rep = app.add_subcommand("replay", "Map every sample of a master trajectory");
    SetupOptions rep_setup;
    std::string rep_traj, rep_method = "subspace", rep_out, rep_report;
    rep->add_option("--trajectory", rep_traj, "Master trajectory (CSV)")->required();
    rep->add_option("--method", rep_method, "subspace | joint | fingertip")
        ->check(CLI::IsMember({"subspace", "joint", "fingertip"}))
        ->capture_default_str();
    rep->add_option("--out", rep_out, "Slave trajectory to write (CSV)")->required();
    rep->add_option("--report", rep_report, "Report file to write (JSON)")->required();
    rep_setup.add_to(rep);

    // compare
    auto* cmp = app.add_subcommand("compare", "Replay a trajectory with all three methods and compare");
    SetupOptions cmp_setup;
    std::string cmp_traj, cmp_report;
    cmp->add_option("--trajectory", cmp_traj, "Master trajectory (CSV)")->required();
    cmp->add_option("--report", cmp_report, "Optional report file (JSON)");
    cmp_setup.add_to(cmp);

    // serve
    auto* srv = app.add_subcommand("serve", "Run the HTTP mapping service");
    int port = 8090;
    std::string host = "127.0.0.1", models_dir = TELEMAP_DATA_DIR;
    srv->add_option("--port", port, "TCP port")->capture_default_str();
    srv->add_option("--host", host, "Bind address")->capture_default_str();
    srv->add_option("--models-dir", models_dir, "Models directory")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitValidation;
    }

    try {
        if (*cal) {
            const auto model = telemap::load_model_file(cal_model);
            const auto set = telemap::load_calibration_file(cal_poses);
            const auto result = telemap::calibrate(model, set);
            telemap::save_mapping_file(result.mapping, cal_out);
            const std::string report = telemap::to_json(result.report).dump(2) + "\n";
            if (!cal_report.empty()) write_file(cal_report, report);
            std::cout << report;
            for (const auto& w : result.report.warnings) std::cerr << "warning: " << w << "\n";
        } else if (*map) {
            const auto master = telemap::load_mapping_file(map_master);
            const auto slave = telemap::load_mapping_file(map_slave);
            const Eigen::VectorXd q_m = parse_pose_arg(map_pose_text);
            const auto t = telemap::project_to_subspace(q_m, master);
            Eigen::VectorXd q_s = telemap::map_pose(q_m, master, slave);
            if (!map_slave_model.empty()) {
                const auto model = telemap::load_model_file(map_slave_model);
                if (model.name() != slave.model_name())
                    throw telemap::ValidationError("--slave-model '" + model.name() + "' does not match slave mapping '" +
                                                   slave.model_name() + "'");
                q_s = telemap::clamp_pose(model, q_s);
            }
            std::cout << json{{"model_name", slave.model_name()}, {"slave_pose", vec_json(q_s)},
                              {"t", telemap::to_json(t)}}
                             .dump(2)
                      << "\n";
        } else if (*rep) {
            const auto setup = rep_setup.load();
            const auto traj = telemap::read_trajectory(rep_traj, setup.master);
            const auto result = telemap::replay(traj, *telemap::parse_method(rep_method), setup);
            telemap::write_trajectory(result.slave, rep_out);
            write_file(rep_report, telemap::to_json(result.report).dump(2) + "\n");
            telemap::ComparisonReport single{traj.size(), {result.report}};
            std::cout << telemap::format_table(single);
        } else if (*cmp) {
            const auto setup = cmp_setup.load();
            const auto traj = telemap::read_trajectory(cmp_traj, setup.master);
            const auto report = telemap::compare(traj, setup);
            if (!cmp_report.empty()) write_file(cmp_report, telemap::to_json(report).dump(2) + "\n");
            std::cout << telemap::format_table(report);
        } else if (*srv) {
            telemap::Service service(telemap::ServiceConfig{models_dir, std::chrono::minutes(30), {}});
            std::cerr << "telemap: serving " << models_dir << " on http://" << host << ":" << port << "\n";
            if (!telemap::serve(service, host, port)) {
                std::cerr << "error: cannot listen on " << host << ":" << port << "\n";
                return kExitIo;
            }
        }
    } catch (const telemap::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const telemap::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    }
    return 0;
}
