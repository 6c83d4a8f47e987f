#include "telemap/subspace.hpp"

#include <array>
#include <cmath>
#include <limits>

#include "json_fields.hpp"
#include "telemap/error.hpp"

namespace telemap {

using nlohmann::json;

double SubspacePoint::operator[](Axis axis) const {
    switch (axis) {
        case Axis::Alpha: return alpha;
        case Axis::Sigma: return sigma;
        case Axis::Epsilon: return epsilon;
        case Axis::Unassigned: break;
    }
    throw ValidationError("subspace point has no unassigned coordinate");
}

// ---------------------------------------------------------------------------

ProjectionMatrix::ProjectionMatrix(Eigen::MatrixX3d columns) : columns_(std::move(columns)) {
    if (!columns_.allFinite()) throw ValidationError("projection matrix: entries must be finite");
    for (int c = 0; c < 3; ++c) {
        const double norm = columns_.col(c).norm();
        if (norm != 0.0 && std::abs(norm - 1.0) > 1e-12)
            throw ValidationError("projection matrix: column " + std::string(to_string(static_cast<Axis>(c))) +
                                  " must have unit norm or be zero");
    }
    for (Eigen::Index r = 0; r < columns_.rows(); ++r) {
        int nonzero = 0;
        for (int c = 0; c < 3; ++c) nonzero += columns_(r, c) != 0.0;
        if (nonzero > 1)
            throw ValidationError("projection matrix: row " + std::to_string(r) +
                                  " contributes to more than one axis (supports must be disjoint)");
    }
}

bool ProjectionMatrix::column_is_zero(Axis axis) const {
    return columns_.col(static_cast<int>(axis)).isZero(0.0);
}

// ---------------------------------------------------------------------------

namespace {

double step_ulps(double x, int k) {
    const double dir = k > 0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
    for (int i = 0; i < std::abs(k); ++i) x = std::nextafter(x, dir);
    return x;
}

// Returns (delta, delta_star) with delta * delta_star == 1 exactly. The
// rounded reciprocal alone misses about one case in fifty, so search a few
// ulps around it, and around delta itself if needed.
std::pair<double, double> exact_reciprocal_pair(double delta) {
    static constexpr std::array<int, 9> kDeltaSteps{0, 1, -1, 2, -2, 3, -3, 4, -4};
    static constexpr std::array<int, 5> kStarSteps{0, 1, -1, 2, -2};
    for (int kd : kDeltaSteps) {
        const double d = step_ulps(delta, kd);
        const double guess = 1.0 / d;
        for (int ks : kStarSteps) {
            const double s = step_ulps(guess, ks);
            if (d * s == 1.0) return {d, s};
        }
    }
    throw ValidationError("scaling factor " + std::to_string(delta) + " has no exact reciprocal pair");
}

}  // namespace

ScalingFactors::ScalingFactors(const Eigen::Vector3d& delta, const Eigen::Vector3d& delta_star)
    : delta_(delta), delta_star_(delta_star) {
    for (int i = 0; i < 3; ++i) {
        const double d = delta_[i];
        const double s = delta_star_[i];
        const bool ok = std::isfinite(d) && std::isfinite(s) && ((d == 0.0 && s == 0.0) || (d * s == 1.0));
        if (!ok)
            throw ValidationError("scaling factors for axis " + std::string(to_string(static_cast<Axis>(i))) +
                                  ": delta * delta_star must be exactly 1, or both must be 0");
    }
}

ScalingFactors ScalingFactors::from_delta(const Eigen::Vector3d& delta) {
    Eigen::Vector3d d = Eigen::Vector3d::Zero();
    Eigen::Vector3d s = Eigen::Vector3d::Zero();
    for (int i = 0; i < 3; ++i) {
        if (!std::isfinite(delta[i])) throw ValidationError("scaling factor must be finite");
        if (delta[i] != 0.0) std::tie(d[i], s[i]) = exact_reciprocal_pair(delta[i]);
    }
    return ScalingFactors(d, s);
}

ScalingFactors ScalingFactors::from_ranges(const Eigen::Vector3d& ranges) {
    Eigen::Vector3d delta = Eigen::Vector3d::Zero();
    for (int i = 0; i < 3; ++i) {
        if (!std::isfinite(ranges[i]) || ranges[i] < 0.0)
            throw ValidationError("axis range must be finite and non-negative");
        if (ranges[i] != 0.0) delta[i] = 1.0 / ranges[i];
    }
    return from_delta(delta);
}

// ---------------------------------------------------------------------------

SubspaceMapping::SubspaceMapping(std::string model_name, Pose origin, ProjectionMatrix matrix, ScalingFactors scaling)
    : model_name_(std::move(model_name)),
      origin_(std::move(origin)),
      matrix_(std::move(matrix)),
      scaling_(std::move(scaling)) {
    if (origin_.size() != matrix_.rows())
        throw ValidationError("subspace mapping: origin has " + std::to_string(origin_.size()) +
                              " entries but the projection matrix has " + std::to_string(matrix_.rows()) + " rows");
    if (origin_.size() == 0) throw ValidationError("subspace mapping: empty origin");
    if (!origin_.allFinite()) throw ValidationError("subspace mapping: origin must be finite");
}

ProjectionMatrix build_projection_matrix(const HandModel& model) {
    Eigen::MatrixX3d a = Eigen::MatrixX3d::Zero(static_cast<Eigen::Index>(model.joint_count()), 3);
    for (std::size_t j = 0; j < model.joint_count(); ++j) {
        const Axis axis = model.joint(j).axis;
        if (axis != Axis::Unassigned) a(static_cast<Eigen::Index>(j), static_cast<int>(axis)) = 1.0;
    }
    for (int c = 0; c < 3; ++c) {
        const double norm = a.col(c).norm();
        if (norm > 0.0) a.col(c) /= norm;
    }
    return ProjectionMatrix(std::move(a));
}

// ---------------------------------------------------------------------------
// The three entry points below share these kernels so that the composed map
// performs exactly the same floating-point operations in the same order.

namespace {

inline void to_subspace_kernel(const Eigen::Ref<const Eigen::VectorXd>& q, const SubspaceMapping& m, double t[3]) {
    const auto& a = m.matrix().matrix();
    const auto& o = m.origin();
    const auto& delta = m.scaling().delta();
    const Eigen::Index n = o.size();
    for (int c = 0; c < 3; ++c) {
        double acc = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) acc += (q[j] - o[j]) * a(j, c);
        t[c] = acc * delta[c];
    }
}

inline void from_subspace_kernel(const double t[3], const SubspaceMapping& m, Eigen::Ref<Eigen::VectorXd> q) {
    const auto& a = m.matrix().matrix();
    const auto& o = m.origin();
    const auto& delta_star = m.scaling().delta_star();
    const double scaled[3] = {t[0] * delta_star[0], t[1] * delta_star[1], t[2] * delta_star[2]};
    const Eigen::Index n = o.size();
    for (Eigen::Index j = 0; j < n; ++j) {
        double acc = 0.0;
        for (int c = 0; c < 3; ++c) acc += scaled[c] * a(j, c);
        q[j] = acc + o[j];
    }
}

void check_length(const Pose& q, const SubspaceMapping& m, const char* what) {
    if (q.size() != m.joint_count())
        throw ValidationError(std::string(what) + ": expected " + std::to_string(m.joint_count()) +
                              " joint angles for model '" + m.model_name() + "', got " + std::to_string(q.size()));
}

}  // namespace

SubspacePoint project_to_subspace(const Pose& q, const SubspaceMapping& m) {
    check_length(q, m, "project_to_subspace");
    double t[3];
    to_subspace_kernel(q, m, t);
    return {t[0], t[1], t[2]};
}

Pose project_from_subspace(const SubspacePoint& t, const SubspaceMapping& m) {
    if (!std::isfinite(t.alpha) || !std::isfinite(t.sigma) || !std::isfinite(t.epsilon))
        throw ValidationError("project_from_subspace: subspace point must be finite");
    const double coords[3] = {t.alpha, t.sigma, t.epsilon};
    Pose q(m.joint_count());
    from_subspace_kernel(coords, m, q);
    return q;
}

SubspacePoint map_pose_into(const Eigen::Ref<const Eigen::VectorXd>& q_m, const SubspaceMapping& master,
                            const SubspaceMapping& slave, Eigen::Ref<Eigen::VectorXd> out) {
    double t[3];
    to_subspace_kernel(q_m, master, t);
    from_subspace_kernel(t, slave, out);
    return {t[0], t[1], t[2]};
}

Pose map_pose(const Pose& q_m, const SubspaceMapping& master, const SubspaceMapping& slave) {
    check_length(q_m, master, "map_pose");
    Pose out(slave.joint_count());
    map_pose_into(q_m, master, slave, out);
    return out;
}

// ---------------------------------------------------------------------------

json to_json(const SubspacePoint& t) {
    return {{"alpha", t.alpha}, {"sigma", t.sigma}, {"epsilon", t.epsilon}};
}

json to_json(const SubspaceMapping& mapping) {
    const auto& a = mapping.matrix().matrix();
    json rows = json::array();
    for (Eigen::Index r = 0; r < a.rows(); ++r) rows.push_back({a(r, 0), a(r, 1), a(r, 2)});
    return {{"model_name", mapping.model_name()},
            {"origin", detail::to_json(mapping.origin())},
            {"matrix", rows},
            {"delta", detail::to_json(mapping.scaling().delta())},
            {"delta_star", detail::to_json(mapping.scaling().delta_star())}};
}

SubspaceMapping load_mapping(const json& doc) {
    std::string name = detail::text(detail::require(doc, "model_name"), "model_name");
    Pose origin = detail::vector(detail::require(doc, "origin"), "origin");
    const json& rows = detail::array(detail::require(doc, "matrix"), "matrix");
    if (rows.size() != static_cast<std::size_t>(origin.size()))
        detail::fail("matrix", "expected " + std::to_string(origin.size()) + " rows (one per origin entry), got " +
                                   std::to_string(rows.size()));
    Eigen::MatrixX3d a(origin.size(), 3);
    for (std::size_t r = 0; r < rows.size(); ++r)
        a.row(static_cast<Eigen::Index>(r)) = detail::vector3(rows[r], detail::element("matrix", r)).transpose();

    const Eigen::Vector3d delta = detail::vector3(detail::require(doc, "delta"), "delta");
    const Eigen::Vector3d delta_star = detail::vector3(detail::require(doc, "delta_star"), "delta_star");
    return SubspaceMapping(std::move(name), std::move(origin), ProjectionMatrix(std::move(a)),
                           ScalingFactors(delta, delta_star));
}

SubspaceMapping load_mapping_file(const std::filesystem::path& path) {
    return detail::load_from_file(path, [](const json& doc) { return load_mapping(doc); });
}

void save_mapping_file(const SubspaceMapping& mapping, const std::filesystem::path& path) {
    detail::write_text_file(path, to_json(mapping).dump(2) + "\n");
}

}  // namespace telemap
