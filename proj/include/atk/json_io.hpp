#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "atk/mesh.hpp"

namespace atk {

using Json = nlohmann::json;
using OrderedJson = nlohmann::ordered_json;

/// Parses a JSON document, reporting syntax errors as FormatError with the
/// byte offset.
Json parse_json(const std::string& text, const std::string& source);
Json load_json(const std::filesystem::path& path);

Json vec3_to_json(const Vec3& v);
Vec3 vec3_from_json(const Json& j, const std::string& what);

/// {"rotation": [w, x, y, z], "translation": [x, y, z]}; either key may be
/// omitted for identity.
Json pose_to_json(const Pose& p);
Pose pose_from_json(const Json& j, const std::string& what);

/// Mesh reference: {"file": path} or a primitive
/// {"box": {"size": [..], "center": [..]}},
/// {"cylinder": {"radius": r, "height": h, "segments": n, "center": [..]}},
/// {"sphere": {"radius": r, "rings": n, "segments": m, "center": [..]}}.
TriMesh mesh_from_json(const Json& j, const std::filesystem::path& base_dir, const std::string& what);

[[noreturn]] void throw_missing(const std::string& key, const std::string& what);
[[noreturn]] void throw_mistyped(const std::string& key, const std::string& what, const std::string& detail);

/// Reference to a child node; ConfigError when missing.
const Json& node(const Json& j, const std::string& key, const std::string& what);

/// Typed field access that reports missing or mistyped keys as ConfigError.
template <typename T>
T required(const Json& j, const std::string& key, const std::string& what) {
  if (!j.is_object() || !j.contains(key)) throw_missing(key, what);
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw_mistyped(key, what, e.what());
  }
}
template <typename T>
T optional_field(const Json& j, const std::string& key, T fallback, const std::string& what) {
  if (!j.is_object() || !j.contains(key) || j.at(key).is_null()) return fallback;
  return required<T>(j, key, what);
}

/// Checks {"format": format, "version": version}; VersionError on a
/// version mismatch, FormatError on a wrong format tag.
void check_header(const Json& j, const std::string& format, int version, const std::string& source);

}  // namespace atk
