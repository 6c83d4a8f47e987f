#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

#include <json.hpp>

#include "telemap/hand_model.hpp"

namespace telemap {

/// slave[slave_joint] = gain * master[master_joint] + offset
struct JointPair {
    std::size_t master_joint = 0;
    std::size_t slave_joint = 0;
    double gain = 1.0;
    double offset = 0.0;
};

/// Joint-to-joint correspondence between a master and a slave hand. Each
/// slave joint is driven by at most one master joint; one master joint may
/// drive several slave joints.
class JointCorrespondence {
public:
    JointCorrespondence() = default;
    /// Throws ValidationError on duplicate slave indices or non-finite gain/offset.
    explicit JointCorrespondence(std::vector<JointPair> pairs);

    const std::vector<JointPair>& pairs() const { return pairs_; }

    /// Identity correspondence between two copies of the same model.
    static JointCorrespondence identity(const HandModel& model);

private:
    std::vector<JointPair> pairs_;
};

/// Entries reference joints by name or index; names resolve against the models.
JointCorrespondence load_correspondence(const nlohmann::json& document, const HandModel& master,
                                        const HandModel& slave);
JointCorrespondence load_correspondence_file(const std::filesystem::path& path, const HandModel& master,
                                             const HandModel& slave);
nlohmann::json to_json(const JointCorrespondence& corr, const HandModel& master, const HandModel& slave);

/// Starts from the slave origin, applies every pair, clamps to slave limits.
Pose joint_map(const Pose& q_m, const JointCorrespondence& corr, const HandModel& slave);

}  // namespace telemap
