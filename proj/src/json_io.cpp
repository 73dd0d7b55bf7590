#include "atk/json_io.hpp"

#include "atk/error.hpp"
#include "atk/mesh_io.hpp"

namespace atk {

void throw_missing(const std::string& key, const std::string& what) {
  throw ConfigError(what + ": missing field '" + key + "'");
}

void throw_mistyped(const std::string& key, const std::string& what, const std::string& detail) {
  throw ConfigError(what + ": field '" + key + "' has the wrong type (" + detail + ")");
}

const Json& node(const Json& j, const std::string& key, const std::string& what) {
  if (!j.is_object() || !j.contains(key)) throw_missing(key, what);
  return j.at(key);
}

Json parse_json(const std::string& text, const std::string& source) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(source, FormatError::Unit::Byte, e.byte, "malformed JSON");
  }
}

Json load_json(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return parse_json(std::string(bytes.begin(), bytes.end()), path.string());
}

Json vec3_to_json(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }

Vec3 vec3_from_json(const Json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 3) throw ConfigError(what + ": expected a 3-vector");
  Vec3 v;
  for (int i = 0; i < 3; ++i) {
    if (!j[i].is_number()) throw ConfigError(what + ": expected a 3-vector of numbers");
    v[i] = j[i].get<double>();
  }
  return v;
}

Json pose_to_json(const Pose& p) {
  const auto& q = p.rotation();
  return Json{{"rotation", {q.w(), q.x(), q.y(), q.z()}}, {"translation", vec3_to_json(p.translation())}};
}

Pose pose_from_json(const Json& j, const std::string& what) {
  if (!j.is_object()) throw ConfigError(what + ": expected a pose object");
  Quat q = Quat::Identity();
  if (j.contains("rotation")) {
    const auto& r = j.at("rotation");
    if (!r.is_array() || r.size() != 4) throw ConfigError(what + ": rotation must be [w, x, y, z]");
    q = Quat(r[0].get<double>(), r[1].get<double>(), r[2].get<double>(), r[3].get<double>());
    if (q.norm() < 1e-12) throw ConfigError(what + ": zero quaternion");
  }
  Vec3 t = Vec3::Zero();
  if (j.contains("translation")) t = vec3_from_json(j.at("translation"), what + ".translation");
  return Pose(q, t);
}

TriMesh mesh_from_json(const Json& j, const std::filesystem::path& base_dir, const std::string& what) {
  if (!j.is_object()) throw ConfigError(what + ": expected a mesh reference object");
  if (j.contains("file")) {
    std::filesystem::path p = required<std::string>(j, "file", what);
    if (p.is_relative()) p = base_dir / p;
    if (!std::filesystem::exists(p)) throw ConfigError(what + ": mesh file not found: " + p.string());
    return read_mesh(p);
  }
  auto center = [&](const Json& spec) {
    return spec.contains("center") ? vec3_from_json(spec.at("center"), what + ".center") : Vec3(Vec3::Zero());
  };
  try {
    if (j.contains("box")) {
      const auto& b = j.at("box");
      return make_box(vec3_from_json(b.at("size"), what + ".size"), center(b));
    }
    if (j.contains("cylinder")) {
      const auto& c = j.at("cylinder");
      return make_cylinder(required<double>(c, "radius", what), required<double>(c, "height", what),
                           optional_field<int>(c, "segments", 24, what), center(c));
    }
    if (j.contains("sphere")) {
      const auto& s = j.at("sphere");
      return make_uv_sphere(required<double>(s, "radius", what), optional_field<int>(s, "rings", 8, what),
                            optional_field<int>(s, "segments", 12, what), center(s));
    }
  } catch (const InvalidInput& e) {
    throw ConfigError(what + ": " + e.what());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(what + ": " + e.what());
  }
  throw ConfigError(what + ": mesh reference needs 'file', 'box', 'cylinder' or 'sphere'");
}

void check_header(const Json& j, const std::string& format, int version, const std::string& source) {
  if (!j.is_object() || !j.contains("format") || j.at("format") != format) {
    throw FormatError(source, FormatError::Unit::Byte, 0, "expected format '" + format + "'");
  }
  if (!j.contains("version") || !j.at("version").is_number_integer() || j.at("version").get<int>() != version) {
    throw VersionError(source + ": unsupported " + format + " version " +
                       (j.contains("version") ? j.at("version").dump() : std::string("<missing>")) +
                       " (expected " + std::to_string(version) + ")");
  }
}

}  // namespace atk
