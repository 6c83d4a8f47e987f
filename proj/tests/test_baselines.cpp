#include <doctest.h>

#include <cmath>
#include <random>

#include "support.hpp"
#include "telemap/error.hpp"
#include "telemap/fingertip_mapping.hpp"
#include "telemap/inverse_kinematics.hpp"
#include "telemap/joint_mapping.hpp"

using namespace telemap;
using nlohmann::json;

namespace {

Pose chain_values(const FingerChain& chain, const Pose& q) {
    const auto moving = chain.moving_joints();
    Pose out(static_cast<Eigen::Index>(moving.size()));
    for (std::size_t i = 0; i < moving.size(); ++i) out[static_cast<Eigen::Index>(i)] = q[static_cast<Eigen::Index>(moving[i])];
    return out;
}

Pose random_chain_pose(const HandModel& model, const FingerChain& chain, std::mt19937_64& rng) {
    Pose q = model.origin_pose();
    for (std::size_t j : chain.moving_joints()) {
        std::uniform_real_distribution<double> u(model.joint(j).min_angle, model.joint(j).max_angle);
        q[static_cast<Eigen::Index>(j)] = u(rng);
    }
    return q;
}

}  // namespace

// ---------------------------------------------------------------------------
// joint mapping

TEST_CASE("identity correspondence copies the pose") {
    const HandModel robot = support::robot();
    const JointCorrespondence id = JointCorrespondence::identity(robot);
    std::mt19937_64 rng(41);
    for (int k = 0; k < 200; ++k) {
        const Pose q = support::random_pose(robot, rng);
        CHECK(support::bit_equal(joint_map(q, id, robot), q));
    }
}

TEST_CASE("shipped correspondence") {
    const HandModel human = support::human();
    const HandModel robot = support::robot();
    const JointCorrespondence corr = load_correspondence_file(support::kData.correspondence(), human, robot);

    SUBCASE("thumb adductor drives the robot thumb proximal joint") {
        bool found = false;
        for (const auto& p : corr.pairs())
            if (p.slave_joint == *robot.find_joint("f0_prox")) {
                CHECK(p.master_joint == *human.find_joint("thumb_adduction"));
                found = true;
            }
        CHECK(found);
    }
    SUBCASE("master origin lands on the slave origin") {
        const Pose out = joint_map(human.origin_pose(), corr, robot);
        for (Eigen::Index j = 0; j < out.size(); ++j)
            CHECK(out[j] == doctest::Approx(robot.origin_pose()[j]).epsilon(1e-12));
        // Direct evaluation of gain * master + offset.
        for (const auto& p : corr.pairs())
            CHECK(p.gain * human.origin_pose()[static_cast<Eigen::Index>(p.master_joint)] + p.offset ==
                  doctest::Approx(robot.origin_pose()[static_cast<Eigen::Index>(p.slave_joint)]).epsilon(1e-12));
    }
    SUBCASE("affine and monotone in each master joint until the limit") {
        for (const auto& p : corr.pairs()) {
            Pose q = human.origin_pose();
            double prev = -INFINITY;
            for (double v = human.joint(p.master_joint).min_angle; v <= human.joint(p.master_joint).max_angle; v += 0.05) {
                q[static_cast<Eigen::Index>(p.master_joint)] = v;
                const double out = joint_map(q, corr, robot)[static_cast<Eigen::Index>(p.slave_joint)];
                const auto& lim = robot.joint(p.slave_joint);
                CHECK(out == doctest::Approx(std::clamp(p.gain * v + p.offset, lim.min_angle, lim.max_angle)).epsilon(1e-15));
                CHECK(out >= prev);
                prev = out;
            }
        }
    }
    SUBCASE("serialization round trip") {
        const json doc = to_json(corr, human, robot);
        const JointCorrespondence back = load_correspondence(doc, human, robot);
        REQUIRE(back.pairs().size() == corr.pairs().size());
        CHECK(to_json(back, human, robot) == doc);
        CHECK(doc[0]["master"].is_string());
    }
}

TEST_CASE("unpaired slave joints rest at the slave origin and outputs are clamped") {
    const HandModel human = support::human();
    const HandModel robot = support::robot();
    const JointCorrespondence corr({{*human.find_joint("index_mcp"), *robot.find_joint("f1_prox"), 10.0, 0.0}});
    Pose q = human.origin_pose();
    q[*human.find_joint("index_mcp")] = 1.0;
    const Pose out = joint_map(q, corr, robot);
    CHECK(out[*robot.find_joint("f1_prox")] == robot.joint(*robot.find_joint("f1_prox")).max_angle);
    for (Eigen::Index j = 0; j < 8; ++j)
        if (j != static_cast<Eigen::Index>(*robot.find_joint("f1_prox"))) CHECK(out[j] == robot.origin_pose()[j]);
}

TEST_CASE("correspondence errors") {
    const HandModel human = support::human();
    const HandModel robot = support::robot();
    CHECK_THROWS_AS(JointCorrespondence({{0, 1, 1.0, 0.0}, {2, 1, 1.0, 0.0}}), ValidationError);
    CHECK_THROWS_AS(JointCorrespondence({{0, 1, NAN, 0.0}}), ValidationError);
    CHECK_THROWS_WITH_AS(load_correspondence(json::parse(R"([{"master": "elbow", "slave": 0, "gain": 1, "offset": 0}])"),
                                             human, robot),
                         doctest::Contains("no joint named 'elbow'"), ValidationError);
    CHECK_THROWS_WITH_AS(load_correspondence(json::parse(R"([{"master": 0, "slave": 8, "gain": 1, "offset": 0}])"),
                                             human, robot),
                         doctest::Contains("out of range"), ValidationError);
    const JointCorrespondence far({{20, 0, 1.0, 0.0}});
    CHECK_THROWS_AS(joint_map(human.origin_pose(), far, robot), ValidationError);
}

// ---------------------------------------------------------------------------
// inverse kinematics

TEST_CASE("target already reached returns the seed untouched") {
    const HandModel robot = support::robot();
    std::mt19937_64 rng(42);
    for (int k = 0; k < 20; ++k) {
        const Pose seed = support::random_pose(robot, rng);
        for (const auto& chain : robot.fingers()) {
            const IkResult r = ik_solve(robot, chain.name, fingertip_position(chain, seed), seed);
            CHECK(r.report.converged);
            CHECK(r.report.iterations == 0);
            CHECK(support::bit_equal(r.pose, seed));
        }
    }
}

TEST_CASE("reachable targets converge and leave other fingers alone") {
    const HandModel robot = support::robot();
    std::mt19937_64 rng(43);
    for (const auto& chain : robot.fingers()) {
        for (int k = 0; k < 50; ++k) {
            const Pose goal = random_chain_pose(robot, chain, rng);
            const Pose seed = support::random_pose(robot, rng);
            const IkResult r = ik_solve(robot, chain.name, fingertip_position(chain, goal), seed);
            CHECK(r.report.converged);
            CHECK((fingertip_position(chain, r.pose) - fingertip_position(chain, goal)).norm() <= 1e-6);
            CHECK(r.report.final_error == doctest::Approx((fingertip_position(chain, r.pose) - fingertip_position(chain, goal)).norm()));
            CHECK(robot.within_limits(r.pose));
            const auto moving = chain.moving_joints();
            for (std::size_t j = 0; j < robot.joint_count(); ++j)
                if (std::find(moving.begin(), moving.end(), j) == moving.end())
                    CHECK(r.pose[static_cast<Eigen::Index>(j)] == seed[static_cast<Eigen::Index>(j)]);
        }
    }
}

TEST_CASE("solutions coincide with a closed-form branch") {
    const HandModel robot = support::robot();
    std::mt19937_64 rng(44);
    for (const auto& chain : robot.fingers()) {
        for (int k = 0; k < 50; ++k) {
            const Pose goal = random_chain_pose(robot, chain, rng);
            const Eigen::Vector3d target = fingertip_position(chain, goal);
            const auto branches = analytic_two_link_ik(chain, target);
            REQUIRE_FALSE(branches.empty());
            for (const auto& b : branches) {
                Pose q = robot.origin_pose();
                const auto moving = chain.moving_joints();
                for (std::size_t i = 0; i < moving.size(); ++i) q[static_cast<Eigen::Index>(moving[i])] = b[static_cast<Eigen::Index>(i)];
                CHECK((fingertip_position(chain, q) - target).norm() <= 1e-12);
            }
            const IkResult r = ik_solve(robot, chain.name, target, robot.origin_pose());
            const Pose got = chain_values(chain, r.pose);
            double nearest = INFINITY;
            for (const auto& b : branches) nearest = std::min(nearest, (b - got).cwiseAbs().maxCoeff());
            CHECK(nearest <= 0.01);
        }
    }
}

TEST_CASE("closed form handles the edge cases") {
    const HandModel robot = support::robot();
    const FingerChain& f0 = robot.finger("f0");
    CHECK(analytic_two_link_ik(f0, f0.base_position + Eigen::Vector3d(0.0, 0.0, 0.5)).empty());
    // The thumb has no adduction: a target off its flexion plane has no exact solution.
    CHECK(analytic_two_link_ik(f0, fingertip_position(f0, robot.origin_pose()) + Eigen::Vector3d(0.0, 0.01, 0.0)).empty());
    const HandModel human = support::human();
    CHECK_THROWS_AS(analytic_two_link_ik(human.finger("thumb"), Eigen::Vector3d::Zero()), ValidationError);
}

TEST_CASE("unreachable targets stop on the reach sphere") {
    const HandModel robot = support::robot();
    const FingerChain& f1 = robot.finger("f1");
    Pose straight = robot.origin_pose();
    straight[*robot.find_joint("f1_prox")] = 0.4;
    straight[*robot.find_joint("f1_dis")] = 0.0;
    const Eigen::Vector3d dir = (fingertip_position(f1, straight) - f1.base_position).normalized();
    for (double factor : {1.05, 1.3, 3.0}) {
        const double dist = factor * f1.reach();
        const IkResult r = ik_solve(robot, "f1", f1.base_position + dist * dir, robot.origin_pose());
        CHECK_FALSE(r.report.converged);
        CHECK(std::abs(r.report.final_error - (dist - f1.reach())) <= 1e-3);
        CHECK((fingertip_position(f1, r.pose) - f1.base_position).norm() == doctest::Approx(f1.reach()).epsilon(1e-3));
    }
}

TEST_CASE("solver never leaves the limits nor ends worse than its seed") {
    const HandModel robot = support::robot();
    std::mt19937_64 rng(45);
    std::uniform_real_distribution<double> u(-0.3, 0.3);
    for (int k = 0; k < 200; ++k) {
        const Pose seed = support::random_pose(robot, rng);
        for (const auto& chain : robot.fingers()) {
            const Eigen::Vector3d target(u(rng), u(rng), u(rng));
            const IkResult r = ik_solve(robot, chain.name, target, seed);
            CHECK(robot.within_limits(r.pose));
            CHECK(r.report.final_error <= (fingertip_position(chain, seed) - target).norm());
            CHECK(r.pose.allFinite());
        }
    }
}

TEST_CASE("ik settings") {
    IkSettings s;
    CHECK_NOTHROW(s.validate());
    s.damping = 0.0;
    CHECK_THROWS_AS(s.validate(), ValidationError);
    CHECK(to_json(load_ik_settings(to_json(IkSettings{}))) == to_json(IkSettings{}));
    CHECK_THROWS_WITH_AS(load_ik_settings(json{{"max_iterations", 2.5}}), doctest::Contains("ik.max_iterations"),
                         ValidationError);
    CHECK_THROWS_WITH_AS(load_ik_settings(json{{"step_limit", -1}}), doctest::Contains("ik.step_limit"), ValidationError);
    const HandModel robot = support::robot();
    CHECK_THROWS_AS(ik_solve(robot, "f7", Eigen::Vector3d::Zero(), robot.origin_pose()), ValidationError);
    CHECK_THROWS_AS(ik_solve(robot, "f1", Eigen::Vector3d(NAN, 0, 0), robot.origin_pose()), ValidationError);
    CHECK_THROWS_AS(ik_solve(robot, "f1", Eigen::Vector3d::Zero(), Pose::Zero(3)), ValidationError);
}

// ---------------------------------------------------------------------------
// fingertip mapping

TEST_CASE("fingertip target scales then rotates") {
    FingertipMapConfig cfg;
    const Eigen::Vector3d t = fingertip_target(Eigen::Vector3d(0.04, 0.0, 0.02), cfg);
    CHECK(t.x() == doctest::Approx(0.06).epsilon(1e-15));
    CHECK(t.y() == 0.0);
    CHECK(t.z() == doctest::Approx(0.03).epsilon(1e-15));
    cfg.hand_frame_rotation << 0, 1, 0, 0, 0, 1, 1, 0, 0;
    const Eigen::Vector3d r = fingertip_target(Eigen::Vector3d(0.04, 0.0, 0.02), cfg);
    CHECK(r.x() == 0.0);
    CHECK(r.y() == doctest::Approx(0.03).epsilon(1e-15));
    CHECK(r.z() == doctest::Approx(0.06).epsilon(1e-15));
}

TEST_CASE("self-retargeting reproduces every fingertip") {
    const HandModel robot = support::robot();
    FingertipMapConfig cfg;
    cfg.scale = 1.0;
    for (const auto& f : robot.fingers()) cfg.finger_pairs.push_back({f.name, f.name});
    std::mt19937_64 rng(46);
    for (int k = 0; k < 100; ++k) {
        const Pose q = k == 0 ? robot.origin_pose() : support::random_pose(robot, rng);
        const FingertipMapResult r = fingertip_map(q, robot, robot, cfg, robot.origin_pose());
        CHECK(r.converged());
        for (const auto& f : robot.fingers())
            CHECK((fingertip_position(f, r.pose) - fingertip_position(f, q)).norm() <= 1e-6);
        for (const auto& track : r.fingers) {
            const FingerChain& chain = robot.finger(track.slave);
            CHECK((chain.base_orientation * track.target_local + chain.base_position - track.target).norm() <= 1e-15);
        }
    }
}

TEST_CASE("shipped pinch keeps the thumb-index gap at one and a half times") {
    const MappingSetup setup = load_setup(support::kData, "human_default", "robot_default");
    const Pose pinch = load_named_pose(support::kData.named_poses(), setup.master, "pinch");
    const double human_gap =
        (forward_kinematics(setup.master, pinch, "thumb") - forward_kinematics(setup.master, pinch, "index")).norm();
    const FingertipMapResult r = fingertip_map(pinch, setup.master, setup.slave, *setup.fingertip, setup.slave.origin_pose());
    CHECK(r.converged());
    const double robot_gap =
        (forward_kinematics(setup.slave, r.pose, "f0") - forward_kinematics(setup.slave, r.pose, "f1")).norm();
    CHECK(std::abs(robot_gap - 1.5 * human_gap) <= 2e-3);
}

TEST_CASE("joints outside the paired chains keep their seed values") {
    const HandModel robot = support::robot();
    FingertipMapConfig cfg;
    cfg.scale = 1.0;
    cfg.finger_pairs = {{"f1", "f1"}};
    std::mt19937_64 rng(47);
    const Pose seed = support::random_pose(robot, rng);
    const Pose q = support::random_pose(robot, rng);
    const FingertipMapResult r = fingertip_map(q, robot, robot, cfg, seed);
    for (const char* name : {"f0_prox", "f0_dis", "f2_ad", "f2_prox", "f2_dis"})
        CHECK(r.pose[*robot.find_joint(name)] == seed[*robot.find_joint(name)]);
}

TEST_CASE("fingertip config validation and documents") {
    const HandModel human = support::human();
    const HandModel robot = support::robot();
    const FingertipMapConfig shipped = load_fingertip_config_file(support::kData.fingertip_config());
    CHECK(shipped.scale == 1.5);
    CHECK(shipped.finger_pairs.size() == 3);
    CHECK_NOTHROW(shipped.validate(human, robot));
    CHECK(to_json(load_fingertip_config(to_json(shipped))) == to_json(shipped));

    json doc = to_json(shipped);
    doc["pairs"] = json::parse(R"([{"master": "thumb", "slave": "f0"}, ["index", "f1"]])");
    CHECK(load_fingertip_config(doc).finger_pairs.size() == 2);

    FingertipMapConfig bad = shipped;
    bad.hand_frame_rotation(0, 0) = 2.0;
    CHECK_THROWS_WITH_AS(bad.validate(human, robot), doctest::Contains("rotation"), ValidationError);
    bad = shipped;
    bad.hand_frame_rotation = -Eigen::Matrix3d::Identity();
    CHECK_THROWS_AS(bad.validate(human, robot), ValidationError);
    bad = shipped;
    bad.scale = 0.0;
    CHECK_THROWS_AS(bad.validate(human, robot), ValidationError);
    bad = shipped;
    bad.finger_pairs.push_back({"ring", "f0"});
    CHECK_THROWS_WITH_AS(bad.validate(human, robot), doctest::Contains("more than once"), ValidationError);
    bad = shipped;
    bad.finger_pairs[0].slave = "f5";
    CHECK_THROWS_WITH_AS(bad.validate(human, robot), doctest::Contains("no finger 'f5'"), ValidationError);
    CHECK_THROWS_AS(fingertip_map(human.origin_pose(), human, robot, bad, robot.origin_pose()), ValidationError);
}
