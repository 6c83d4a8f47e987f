#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "support.hpp"
#include "telemap/error.hpp"
#include "telemap/hand_model.hpp"

using namespace telemap;
using nlohmann::json;

namespace {

HandModel single_finger(std::vector<double> links, Eigen::Vector3d base = Eigen::Vector3d::Zero()) {
    std::vector<JointDescriptor> joints;
    FingerChain chain;
    chain.name = "finger";
    chain.base_position = base;
    for (std::size_t i = 0; i < links.size(); ++i) {
        joints.push_back({"j" + std::to_string(i), -4.0, 4.0, Axis::Sigma});
        chain.joint_indices.push_back(i);
    }
    chain.link_lengths = std::move(links);
    return HandModel("single", joints, {chain}, Pose::Zero(static_cast<Eigen::Index>(joints.size())));
}

std::string error_of(const json& doc) {
    try {
        load_model(doc);
    } catch (const ValidationError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST_CASE("shipped robot model has the eight joints in chain order") {
    const HandModel m = support::robot();
    REQUIRE(m.joint_count() == 8);
    const char* names[] = {"f0_prox", "f0_dis", "f1_ad", "f1_prox", "f1_dis", "f2_ad", "f2_prox", "f2_dis"};
    for (std::size_t i = 0; i < 8; ++i) CHECK(m.joint(i).name == names[i]);
    CHECK(m.fingers().size() == 3);
    CHECK_FALSE(m.finger("f0").adduction_joint_index.has_value());
    CHECK(m.finger("f1").adduction_joint_index == 2u);
    CHECK(m.within_limits(m.origin_pose()));
}

TEST_CASE("shipped human model has sixteen joints and five fingers") {
    const HandModel m = support::human();
    CHECK(m.joint_count() == 16);
    CHECK(m.fingers().size() == 5);
    for (const char* joint : {"thumb_rotation", "thumb_adduction", "thumb_mcp", "thumb_ip", "index_mcp", "index_pip",
                              "middle_index_abduction", "middle_mcp", "middle_pip"})
        CHECK(m.find_joint(joint).has_value());
    CHECK(m.joint(*m.find_joint("palm_arch")).axis == Axis::Unassigned);
}

TEST_CASE("straight finger lies along +x at the summed link length") {
    const HandModel m = single_finger({0.05, 0.04});
    const Eigen::Vector3d tip = forward_kinematics(m, Pose::Zero(2), "finger");
    CHECK(tip.x() == doctest::Approx(0.09).epsilon(1e-15));
    CHECK(tip.y() == 0.0);
    CHECK(std::abs(tip.z()) <= 1e-15);
}

TEST_CASE("proximal quarter turn swings the straight finger onto -z") {
    const HandModel m = single_finger({0.05, 0.04});
    Pose q(2);
    q << std::numbers::pi / 2, 0.0;
    const Eigen::Vector3d tip = forward_kinematics(m, q, "finger");
    CHECK(std::abs(tip.x()) <= 1e-15);
    CHECK(tip.y() == 0.0);
    CHECK(tip.z() == doctest::Approx(-0.09).epsilon(1e-15));
}

TEST_CASE("robot f1 at origin matches a hand-derived chain evaluation") {
    // Base (0.066, 0.033, 0); finger frame x maps to hand +z, finger z to hand +x.
    const HandModel m = support::robot();
    const double u = 0.0865 * std::cos(0.2) + 0.068 * std::cos(0.5);
    const double v = 0.0865 * std::sin(0.2) + 0.068 * std::sin(0.5);
    const Eigen::Vector3d tip = forward_kinematics(m, m.origin_pose(), "f1");
    CHECK(tip.x() == doctest::Approx(0.066 - v).epsilon(1e-14));
    CHECK(tip.y() == doctest::Approx(0.033).epsilon(1e-14));
    CHECK(tip.z() == doctest::Approx(u).epsilon(1e-14));
}

TEST_CASE("fingertip positions agree with the scalar reference on random poses") {
    std::mt19937_64 rng(1);
    for (const HandModel& m : {support::robot(), support::human()}) {
        for (int k = 0; k < 200; ++k) {
            const Pose q = support::random_pose(m, rng);
            for (const auto& chain : m.fingers()) {
                oracle::Finger f;
                for (int r = 0; r < 3; ++r) {
                    f.base[r] = chain.base_position[r];
                    for (int c = 0; c < 3; ++c) f.rot[r][c] = chain.base_orientation(r, c);
                }
                f.links = chain.link_lengths;
                oracle::Vec flex;
                for (std::size_t j : chain.joint_indices) flex.push_back(q[static_cast<Eigen::Index>(j)]);
                const double ad = chain.adduction_joint_index ? q[static_cast<Eigen::Index>(*chain.adduction_joint_index)] : 0.0;
                const auto expect = oracle::tip(f, ad, flex);
                const Eigen::Vector3d got = fingertip_position(chain, q);
                for (int r = 0; r < 3; ++r) CHECK(got[r] == doctest::Approx(expect[r]).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("translating a finger base translates its fingertip") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-0.2, 0.2);
    HandModel base = support::robot();
    for (int k = 0; k < 100; ++k) {
        const Eigen::Vector3d shift(u(rng), u(rng), u(rng));
        const Pose q = support::random_pose(base, rng);
        for (const auto& chain : base.fingers()) {
            FingerChain moved = chain;
            moved.base_position += shift;
            const Eigen::Vector3d d = fingertip_position(moved, q) - fingertip_position(chain, q) - shift;
            CHECK(d.cwiseAbs().maxCoeff() <= 1e-15);
        }
    }
}

TEST_CASE("fingertip never leaves the reach sphere") {
    std::mt19937_64 rng(3);
    for (const HandModel& m : {support::robot(), support::human()}) {
        for (int k = 0; k < 500; ++k) {
            const Pose q = support::random_pose(m, rng);
            for (const auto& chain : m.fingers())
                CHECK((fingertip_position(chain, q) - chain.base_position).norm() <= chain.reach() + 1e-15);
        }
    }
}

TEST_CASE("jacobian matches central differences") {
    std::mt19937_64 rng(4);
    const HandModel m = support::robot();
    const double h = 1e-6;
    for (int k = 0; k < 50; ++k) {
        const Pose q = support::random_pose(m, rng);
        for (const auto& chain : m.fingers()) {
            const Eigen::Matrix3Xd jac = fingertip_jacobian(chain, q);
            const auto moving = chain.moving_joints();
            REQUIRE(jac.cols() == static_cast<Eigen::Index>(moving.size()));
            for (std::size_t c = 0; c < moving.size(); ++c) {
                Pose plus = q, minus = q;
                plus[static_cast<Eigen::Index>(moving[c])] += h;
                minus[static_cast<Eigen::Index>(moving[c])] -= h;
                const Eigen::Vector3d fd = (fingertip_position(chain, plus) - fingertip_position(chain, minus)) / (2 * h);
                CHECK((fd - jac.col(static_cast<Eigen::Index>(c))).norm() <= 1e-8);
            }
        }
    }
}

TEST_CASE("clamp_pose") {
    const HandModel m = support::robot();
    SUBCASE("identity inside the limits") { CHECK(support::bit_equal(clamp_pose(m, m.origin_pose()), m.origin_pose())); }
    SUBCASE("below min goes to min") {
        Pose q = m.origin_pose();
        q[0] = -3.0;
        CHECK(clamp_pose(m, q)[0] == m.joint(0).min_angle);
    }
    SUBCASE("large angles saturate at max") {
        const Pose q = Pose::Constant(8, 10.0);
        const Pose c = clamp_pose(m, q);
        for (std::size_t i = 0; i < 8; ++i) CHECK(c[static_cast<Eigen::Index>(i)] == m.joint(i).max_angle);
    }
    SUBCASE("idempotent") {
        std::mt19937_64 rng(5);
        std::uniform_real_distribution<double> u(-5.0, 5.0);
        for (int k = 0; k < 200; ++k) {
            Pose q(8);
            for (int i = 0; i < 8; ++i) q[i] = u(rng);
            const Pose once = clamp_pose(m, q);
            CHECK(m.within_limits(once));
            CHECK(support::bit_equal(clamp_pose(m, once), once));
        }
    }
    SUBCASE("length mismatch") { CHECK_THROWS_AS(clamp_pose(m, Pose::Zero(7)), ValidationError); }
}

TEST_CASE("serialize then load is a fixed point") {
    for (const json& doc : {support::read_json(support::kData.model("robot_default")),
                            support::read_json(support::kData.model("human_default")), support::toy_model_json()}) {
        const HandModel first = load_model(doc);
        const json once = to_json(first);
        const json twice = to_json(load_model(once));
        CHECK(once == twice);
        CHECK(once.dump() == twice.dump());
    }
}

TEST_CASE("quaternion and matrix orientations load to the same rotation") {
    json doc = support::toy_model_json();
    doc["fingers"][1]["base_orientation"] = {std::sqrt(0.5), 0.0, std::sqrt(0.5), 0.0};  // +90 deg about y
    const HandModel m = load_model(doc);
    const Eigen::Matrix3d expect = (Eigen::Matrix3d() << 0, 0, 1, 0, 1, 0, -1, 0, 0).finished();
    CHECK((m.finger("b").base_orientation - expect).cwiseAbs().maxCoeff() <= 1e-15);
    CHECK(m.finger("b").joint_indices == std::vector<std::size_t>{3, 4});
}

TEST_CASE("model validation errors name the field") {
    SUBCASE("equal limits") {
        json doc = support::toy_model_json();
        doc["joints"][1]["max"] = doc["joints"][1]["min"];
        CHECK(error_of(doc).find("joints[1]: limit inversion") != std::string::npos);
    }
    SUBCASE("dangling joint name") {
        json doc = support::toy_model_json();
        doc["fingers"][0]["joints"][1] = "nope";
        CHECK(error_of(doc).find("dangling joint reference 'nope'") != std::string::npos);
    }
    SUBCASE("dangling joint index") {
        json doc = support::toy_model_json();
        doc["fingers"][1]["joints"][0] = 17;
        CHECK(error_of(doc).find("dangling joint index 17") != std::string::npos);
    }
    SUBCASE("joint shared by two fingers") {
        json doc = support::toy_model_json();
        doc["fingers"][1]["joints"][0] = "a_prox";
        CHECK(error_of(doc).find("already used by finger 'a'") != std::string::npos);
    }
    SUBCASE("origin outside limits") {
        json doc = support::toy_model_json();
        doc["origin_pose"][2] = 3.0;
        CHECK(error_of(doc).find("origin_pose[2]: outside the limits") != std::string::npos);
    }
    SUBCASE("origin length") {
        json doc = support::toy_model_json();
        doc["origin_pose"].erase(0);
        CHECK(error_of(doc).find("origin_pose: expected 6 angles") != std::string::npos);
    }
    SUBCASE("missing field") {
        json doc = support::toy_model_json();
        doc["joints"][0].erase("min");
        CHECK(error_of(doc).find("joints[0].min: required field is missing") != std::string::npos);
    }
    SUBCASE("unknown axis") {
        json doc = support::toy_model_json();
        doc["joints"][0]["axis"] = "beta";
        CHECK(error_of(doc).find("joints[0].axis") != std::string::npos);
    }
    SUBCASE("link count") {
        json doc = support::toy_model_json();
        doc["fingers"][0]["link_lengths"] = {0.05};
        CHECK(error_of(doc).find("fingers[0].link_lengths") != std::string::npos);
    }
    SUBCASE("reflection is not a rotation") {
        json doc = support::toy_model_json();
        doc["fingers"][1]["base_orientation"] = {{1, 0, 0}, {0, 1, 0}, {0, 0, -1}};
        CHECK(error_of(doc).find("proper rotation") != std::string::npos);
    }
    SUBCASE("non-unit quaternion") {
        json doc = support::toy_model_json();
        doc["fingers"][0]["base_orientation"] = {1, 1, 0, 0};
        CHECK(error_of(doc).find("unit quaternion") != std::string::npos);
    }
    SUBCASE("duplicate joint name") {
        json doc = support::toy_model_json();
        doc["joints"][5]["name"] = "a_ad";
        CHECK(error_of(doc).find("duplicate joint name") != std::string::npos);
    }
}

TEST_CASE("kinematics preconditions") {
    const HandModel m = support::robot();
    CHECK_THROWS_AS(forward_kinematics(m, m.origin_pose(), "f9"), ValidationError);
    CHECK_THROWS_AS(forward_kinematics(m, Pose::Zero(3), "f0"), ValidationError);
    Pose bad = m.origin_pose();
    bad[1] = std::nan("");
    CHECK_THROWS_AS(forward_kinematics(m, bad, "f0"), ValidationError);
}

TEST_CASE("model files") {
    support::TempDir dir("model");
    CHECK_THROWS_AS(load_model_file(dir / "missing.json"), IoError);
    support::write(dir / "broken.json", "{\n  \"name\": \"x\",\n  \"joints\": [\n");
    try {
        load_model_file(dir / "broken.json");
        FAIL("expected a parse error");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("broken.json:") != std::string::npos);
    }
    json doc = support::toy_model_json();
    doc["joints"][0]["min"] = "low";
    support::write(dir / "typed.json", doc.dump());
    try {
        load_model_file(dir / "typed.json");
        FAIL("expected a validation error");
    } catch (const ValidationError& e) {
        const std::string what = e.what();
        CHECK(what.find("typed.json") != std::string::npos);
        CHECK(what.find("joints[0].min: expected a number") != std::string::npos);
    }
}
