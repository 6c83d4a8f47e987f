#include "telemap/joint_mapping.hpp"

#include <cmath>
#include <set>

#include "json_fields.hpp"
#include "telemap/error.hpp"

namespace telemap {

using nlohmann::json;

JointCorrespondence::JointCorrespondence(std::vector<JointPair> pairs) : pairs_(std::move(pairs)) {
    std::set<std::size_t> slaves;
    for (std::size_t i = 0; i < pairs_.size(); ++i) {
        const auto& p = pairs_[i];
        if (!slaves.insert(p.slave_joint).second)
            throw ValidationError(detail::element("correspondence", i) + ".slave: slave joint " +
                                  std::to_string(p.slave_joint) + " is driven more than once");
        if (!std::isfinite(p.gain) || !std::isfinite(p.offset))
            throw ValidationError(detail::element("correspondence", i) + ": gain and offset must be finite");
    }
}

JointCorrespondence JointCorrespondence::identity(const HandModel& model) {
    std::vector<JointPair> pairs;
    for (std::size_t j = 0; j < model.joint_count(); ++j) pairs.push_back({j, j, 1.0, 0.0});
    return JointCorrespondence(std::move(pairs));
}

namespace {

std::size_t resolve(const json& ref, const HandModel& model, const std::string& path) {
    if (ref.is_string()) {
        const auto name = ref.get<std::string>();
        if (auto idx = model.find_joint(name)) return *idx;
        detail::fail(path, "model '" + model.name() + "' has no joint named '" + name + "'");
    }
    if (ref.is_number_integer()) {
        const auto idx = ref.get<long long>();
        if (idx < 0 || static_cast<std::size_t>(idx) >= model.joint_count())
            detail::fail(path, "joint index " + std::to_string(idx) + " out of range for model '" + model.name() +
                                   "' (" + std::to_string(model.joint_count()) + " joints)");
        return static_cast<std::size_t>(idx);
    }
    detail::fail(path, "expected a joint name or index");
}

}  // namespace

JointCorrespondence load_correspondence(const json& doc, const HandModel& master, const HandModel& slave) {
    detail::array(doc, "correspondence");
    std::vector<JointPair> pairs;
    for (std::size_t i = 0; i < doc.size(); ++i) {
        const std::string path = detail::element("correspondence", i);
        const json& e = doc[i];
        JointPair p;
        p.master_joint = resolve(detail::require(e, "master", path), master, path + ".master");
        p.slave_joint = resolve(detail::require(e, "slave", path), slave, path + ".slave");
        p.gain = detail::number(detail::require(e, "gain", path), path + ".gain");
        p.offset = detail::number(detail::require(e, "offset", path), path + ".offset");
        pairs.push_back(p);
    }
    return JointCorrespondence(std::move(pairs));
}

JointCorrespondence load_correspondence_file(const std::filesystem::path& path, const HandModel& master,
                                             const HandModel& slave) {
    return detail::load_from_file(path, [&](const json& doc) { return load_correspondence(doc, master, slave); });
}

json to_json(const JointCorrespondence& corr, const HandModel& master, const HandModel& slave) {
    json out = json::array();
    for (const auto& p : corr.pairs())
        out.push_back({{"master", master.joint(p.master_joint).name},
                       {"slave", slave.joint(p.slave_joint).name},
                       {"gain", p.gain},
                       {"offset", p.offset}});
    return out;
}

Pose joint_map(const Pose& q_m, const JointCorrespondence& corr, const HandModel& slave) {
    if (!q_m.allFinite()) throw ValidationError("joint_map: master joint angles must be finite");
    Pose q_s = slave.origin_pose();
    for (const auto& p : corr.pairs()) {
        if (p.master_joint >= static_cast<std::size_t>(q_m.size()))
            throw ValidationError("joint_map: master joint index " + std::to_string(p.master_joint) +
                                  " out of range for a pose of length " + std::to_string(q_m.size()));
        if (p.slave_joint >= slave.joint_count())
            throw ValidationError("joint_map: slave joint index " + std::to_string(p.slave_joint) +
                                  " out of range for model '" + slave.name() + "'");
        q_s[static_cast<Eigen::Index>(p.slave_joint)] = p.gain * q_m[static_cast<Eigen::Index>(p.master_joint)] + p.offset;
    }
    clamp_pose_in_place(slave, q_s);
    return q_s;
}

}  // namespace telemap
