#pragma once

// Field accessors for the JSON document loaders. Every failure names the
// offending field path and what was expected there.

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

#include <Eigen/Core>
#include <json.hpp>

#include "telemap/error.hpp"

namespace telemap::detail {

using nlohmann::json;

inline std::string field(std::string_view parent, std::string_view key) {
    if (parent.empty()) return std::string(key);
    return std::string(parent) + "." + std::string(key);
}

inline std::string element(std::string_view parent, std::size_t i) {
    return std::string(parent) + "[" + std::to_string(i) + "]";
}

[[noreturn]] inline void fail(std::string_view path, std::string_view expectation) {
    throw ValidationError(std::string(path) + ": " + std::string(expectation));
}

inline const json& require(const json& obj, std::string_view key, std::string_view parent = {}) {
    if (!obj.is_object()) fail(parent.empty() ? "document" : parent, "expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) fail(field(parent, key), "required field is missing");
    return *it;
}

inline const json* optional(const json& obj, std::string_view key) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return nullptr;
    return &*it;
}

inline double number(const json& v, std::string_view path) {
    if (!v.is_number()) fail(path, "expected a number");
    double x = v.get<double>();
    if (!std::isfinite(x)) fail(path, "expected a finite number");
    return x;
}

inline std::string text(const json& v, std::string_view path) {
    if (!v.is_string()) fail(path, "expected a string");
    return v.get<std::string>();
}

inline const json& array(const json& v, std::string_view path) {
    if (!v.is_array()) fail(path, "expected an array");
    return v;
}

inline Eigen::VectorXd vector(const json& v, std::string_view path) {
    array(v, path);
    Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<Eigen::Index>(i)] = number(v[i], element(path, i));
    return out;
}

inline Eigen::Vector3d vector3(const json& v, std::string_view path) {
    if (!v.is_array() || v.size() != 3) fail(path, "expected an array of 3 numbers");
    return vector(v, path);
}

inline json to_json(const Eigen::Ref<const Eigen::VectorXd>& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
    return out;
}

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path.string() + ": cannot open for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoError(path.string() + ": read failed");
    return ss.str();
}

inline void write_text_file(const std::filesystem::path& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(path.string() + ": cannot open for writing");
    out << content;
    if (!out) throw IoError(path.string() + ": write failed");
}

/// Parses a JSON file; syntax errors report file and line.
inline json parse_json_file(const std::filesystem::path& path) {
    const std::string content = read_text_file(path);
    try {
        return json::parse(content);
    } catch (const json::parse_error& e) {
        std::size_t line = 1;
        for (std::size_t i = 0; i < e.byte && i < content.size(); ++i)
            if (content[i] == '\n') ++line;
        throw ValidationError(path.string() + ":" + std::to_string(line) + ": malformed JSON (" + e.what() + ")");
    }
}

/// Runs a document loader, prefixing any validation error with the file name.
template <typename Loader>
auto load_from_file(const std::filesystem::path& path, Loader&& loader) {
    json doc = parse_json_file(path);
    try {
        return loader(doc);
    } catch (const ValidationError& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

}  // namespace telemap::detail
