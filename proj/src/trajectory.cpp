#include "telemap/trajectory.hpp"

#include <charconv>
#include <cmath>

#include "json_fields.hpp"
#include "telemap/error.hpp"

namespace telemap {

Trajectory::Trajectory(std::string model_name, std::vector<std::string> joint_names,
                       std::vector<TrajectorySample> samples)
    : model_name_(std::move(model_name)), joint_names_(std::move(joint_names)), samples_(std::move(samples)) {
    if (joint_names_.empty()) throw ValidationError("trajectory: no joint columns");
    const auto n = static_cast<Eigen::Index>(joint_names_.size());
    for (std::size_t i = 0; i < samples_.size(); ++i) {
        const auto& s = samples_[i];
        if (!std::isfinite(s.time)) throw ValidationError("trajectory sample " + std::to_string(i) + ": non-finite time");
        if (s.pose.size() != n)
            throw ValidationError("trajectory sample " + std::to_string(i) + ": expected " + std::to_string(n) +
                                  " joint angles, got " + std::to_string(s.pose.size()));
        if (!s.pose.allFinite())
            throw ValidationError("trajectory sample " + std::to_string(i) + ": non-finite joint angle");
        if (i > 0 && !(s.time > samples_[i - 1].time))
            throw ValidationError("trajectory sample " + std::to_string(i) + ": time " + std::to_string(s.time) +
                                  " does not increase (previous " + std::to_string(samples_[i - 1].time) + ")");
    }
}

Trajectory Trajectory::for_model(const HandModel& model, std::vector<TrajectorySample> samples) {
    std::vector<std::string> names;
    for (const auto& j : model.joints()) names.push_back(j.name);
    return Trajectory(model.name(), std::move(names), std::move(samples));
}

bool operator==(const Trajectory& a, const Trajectory& b) {
    if (a.joint_names_ != b.joint_names_ || a.samples_.size() != b.samples_.size()) return false;
    for (std::size_t i = 0; i < a.samples_.size(); ++i)
        if (a.samples_[i].time != b.samples_[i].time || a.samples_[i].pose != b.samples_[i].pose) return false;
    return true;
}

namespace {

std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

bool parse_double(std::string_view s, double& out) {
    s = trim(s);
    if (s.empty()) return false;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    return res.ec == std::errc() && res.ptr == s.data() + s.size() && std::isfinite(out);
}

void append_double(std::string& out, double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, res.ptr);
}

}  // namespace

Trajectory parse_trajectory(std::string_view text, std::string_view source) {
    const std::string src(source);
    std::vector<std::string> names;
    std::vector<TrajectorySample> samples;
    std::size_t line_no = 0;
    bool header_seen = false;

    std::size_t start = 0;
    while (start <= text.size()) {
        const auto end = text.find('\n', start);
        const std::string_view raw =
            text.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
        start = end == std::string_view::npos ? text.size() + 1 : end + 1;
        ++line_no;
        const std::string_view line = trim(raw);
        if (line.empty() || line.front() == '#') continue;
        const std::string where = src + ":" + std::to_string(line_no) + ": ";

        const auto cells = split(line, ',');
        if (!header_seen) {
            if (trim(cells.front()) != "time") throw ValidationError(where + "header must start with 'time'");
            for (std::size_t i = 1; i < cells.size(); ++i) {
                const auto name = trim(cells[i]);
                if (name.empty()) throw ValidationError(where + "empty joint name in header column " + std::to_string(i + 1));
                names.emplace_back(name);
            }
            if (names.empty()) throw ValidationError(where + "header has no joint columns");
            header_seen = true;
            continue;
        }
        if (cells.size() != names.size() + 1)
            throw ValidationError(where + "expected " + std::to_string(names.size() + 1) + " columns, got " +
                                  std::to_string(cells.size()));
        TrajectorySample s;
        if (!parse_double(cells[0], s.time)) throw ValidationError(where + "column 1 (time): expected a finite number");
        s.pose.resize(static_cast<Eigen::Index>(names.size()));
        for (std::size_t i = 0; i < names.size(); ++i) {
            if (!parse_double(cells[i + 1], s.pose[static_cast<Eigen::Index>(i)]))
                throw ValidationError(where + "column " + std::to_string(i + 2) + " (" + names[i] +
                                      "): expected a finite number");
        }
        if (!samples.empty() && !(s.time > samples.back().time))
            throw ValidationError(where + "time " + std::string(trim(cells[0])) +
                                  " is not greater than the previous sample's");
        samples.push_back(std::move(s));
    }
    if (!header_seen) throw ValidationError(src + ": missing header row 'time,<joint names...>'");
    return Trajectory({}, std::move(names), std::move(samples));
}

std::string format_trajectory(const Trajectory& t) {
    std::string out = "time";
    for (const auto& n : t.joint_names()) out += "," + n;
    out += '\n';
    for (const auto& s : t.samples()) {
        append_double(out, s.time);
        for (Eigen::Index i = 0; i < s.pose.size(); ++i) {
            out += ',';
            append_double(out, s.pose[i]);
        }
        out += '\n';
    }
    return out;
}

Trajectory read_trajectory(const std::filesystem::path& path) {
    return parse_trajectory(detail::read_text_file(path), path.string());
}

Trajectory read_trajectory(const std::filesystem::path& path, const HandModel& model) {
    Trajectory t = read_trajectory(path);
    std::vector<std::string> expected;
    for (const auto& j : model.joints()) expected.push_back(j.name);
    if (t.joint_names() != expected)
        throw ValidationError(path.string() + ":1: header joint names do not match model '" + model.name() + "' (" +
                              std::to_string(expected.size()) + " joints in model order)");
    std::vector<TrajectorySample> samples = t.samples();
    return Trajectory(model.name(), std::move(expected), std::move(samples));
}

void write_trajectory(const Trajectory& trajectory, const std::filesystem::path& path) {
    detail::write_text_file(path, format_trajectory(trajectory));
}

}  // namespace telemap
