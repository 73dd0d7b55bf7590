#include "atk/template_store.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "atk/error.hpp"
#include "atk/json_io.hpp"
#include "atk/mesh_io.hpp"
#include "atk/synthesis.hpp"

namespace atk {

TemplateSet normalize_and_color(TemplateSet set) {
  if (set.templates.empty()) throw InvalidInput("cannot normalize an empty template set");
  double lo = set.templates.front().d_h, hi = lo;
  for (const auto& t : set.templates) {
    lo = std::min(lo, t.d_h);
    hi = std::max(hi, t.d_h);
  }
  for (auto& t : set.templates) {
    const double s = hi > lo ? (t.d_h - lo) / (hi - lo) : 0.0;
    t.score_norm = s;
    t.color = Color(1.0 - s, 0.0, s);
  }
  return set;
}

std::vector<AffordanceTemplate> ranked(const TemplateSet& set) {
  auto out = set.templates;
  std::stable_sort(out.begin(), out.end(), [](const AffordanceTemplate& a, const AffordanceTemplate& b) {
    const double ka = a.score_norm.value_or(a.d_h), kb = b.score_norm.value_or(b.d_h);
    return ka != kb ? ka < kb : a.id < b.id;
  });
  return out;
}

// ---------------------------------------------------------------- documents

namespace {

OrderedJson vec_json(const Vec3& v) { return OrderedJson::array({v.x(), v.y(), v.z()}); }

OrderedJson pose_json(const Pose& p) {
  const auto& q = p.rotation();
  OrderedJson j;
  j["rotation"] = {q.w(), q.x(), q.y(), q.z()};
  j["translation"] = vec_json(p.translation());
  return j;
}

}  // namespace

std::string serialize_templates(const TemplateSet& set) {
  OrderedJson doc;
  doc["format"] = kTemplateFormat;
  doc["version"] = kTemplateVersion;
  doc["object"] = {{"path", set.object.path}, {"sha256", set.object.sha256}};
  doc["object_pose"] = pose_json(set.object_pose);
  doc["center_of_mass"] = vec_json(set.center_of_mass);
  doc["generation"] = {{"samples", set.generation.samples},
                       {"seed", set.generation.seed},
                       {"step", set.generation.step},
                       {"contact_threshold", set.generation.contact_threshold},
                       {"standoff", set.generation.standoff},
                       {"spin", set.generation.spin}};
  OrderedJson list = OrderedJson::array();
  for (const auto& t : set.templates) {
    OrderedJson j;
    j["id"] = t.id;
    j["base"] = pose_json(t.base);
    OrderedJson config = OrderedJson::object();
    for (const auto& [name, angle] : t.config) config[name] = angle;
    j["config"] = config;
    OrderedJson contacts = OrderedJson::array();
    for (const auto& c : t.contacts) contacts.push_back({{"link", c.link}, {"point", vec_json(c.point)}});
    j["contacts"] = contacts;
    OrderedJson hull = OrderedJson::array();
    for (const auto& v : t.hull_vertices) hull.push_back(vec_json(v));
    j["hull_vertices"] = hull;
    j["d_h"] = t.d_h;
    j["score_norm"] = t.score_norm ? OrderedJson(*t.score_norm) : OrderedJson(nullptr);
    j["color"] = t.color ? vec_json(*t.color) : OrderedJson(nullptr);
    list.push_back(j);
  }
  doc["templates"] = list;
  return doc.dump(2) + "\n";
}

TemplateSet deserialize_templates(const std::string& text, const std::string& source) {
  const Json doc = parse_json(text, source);
  check_header(doc, kTemplateFormat, kTemplateVersion, source);
  auto malformed = [&](const std::string& msg) { return FormatError(source, FormatError::Unit::Byte, 0, msg); };
  try {
    TemplateSet set;
    set.object.path = doc.at("object").at("path").get<std::string>();
    set.object.sha256 = doc.at("object").at("sha256").get<std::string>();
    set.object_pose = pose_from_json(doc.at("object_pose"), source);
    set.center_of_mass = vec3_from_json(doc.at("center_of_mass"), source);
    const auto& gen = doc.at("generation");
    set.generation.samples = gen.at("samples").get<int>();
    set.generation.seed = gen.at("seed").get<std::uint64_t>();
    set.generation.step = gen.at("step").get<double>();
    set.generation.contact_threshold = gen.at("contact_threshold").get<double>();
    set.generation.standoff = gen.at("standoff").get<double>();
    set.generation.spin = gen.at("spin").get<int>();
    std::set<std::string> ids;
    for (const auto& j : doc.at("templates")) {
      AffordanceTemplate t;
      t.id = j.at("id").get<std::string>();
      if (!ids.insert(t.id).second) throw malformed("duplicate template id '" + t.id + "'");
      t.base = pose_from_json(j.at("base"), source);
      for (const auto& [name, angle] : j.at("config").items()) t.config[name] = angle.get<double>();
      for (const auto& c : j.at("contacts"))
        t.contacts.push_back({c.at("link").get<std::string>(), vec3_from_json(c.at("point"), source)});
      for (const auto& v : j.at("hull_vertices")) t.hull_vertices.push_back(vec3_from_json(v, source));
      t.d_h = j.at("d_h").get<double>();
      if (!(t.d_h >= 0)) throw malformed("template '" + t.id + "' has a negative d_h");
      if (!j.at("score_norm").is_null()) t.score_norm = j.at("score_norm").get<double>();
      if (!j.at("color").is_null()) t.color = vec3_from_json(j.at("color"), source);
      if (!t.contacts.empty() && std::abs(evaluate_grasp(t.contacts, set.center_of_mass).d_h - t.d_h) > 1e-9)
        throw malformed("template '" + t.id + "' d_h does not match its contacts");
      if (t.score_norm.has_value() != t.color.has_value())
        throw malformed("template '" + t.id + "' must carry both score and color or neither");
      set.templates.push_back(std::move(t));
    }
    return set;
  } catch (const nlohmann::json::exception& e) {
    throw malformed(e.what());
  } catch (const ConfigError& e) {
    throw malformed(e.what());
  }
}

void save_templates(const TemplateSet& set, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_templates(set));
}

std::filesystem::path resolve_object_path(const TemplateSet& set, const std::filesystem::path& template_file) {
  std::filesystem::path p = set.object.path;
  if (p.is_relative()) p = template_file.parent_path() / p;
  return p;
}

TemplateSet load_templates(const std::filesystem::path& path, const LoadOptions& options) {
  const auto bytes = read_file_bytes(path);
  TemplateSet set = deserialize_templates(std::string(bytes.begin(), bytes.end()), path.string());
  if (options.strict) {
    const auto mesh_path = resolve_object_path(set, path);
    if (!std::filesystem::exists(mesh_path)) throw IoError("referenced object mesh missing: " + mesh_path.string());
    const auto actual = sha256_file(mesh_path);
    if (actual != set.object.sha256) {
      throw HashMismatch("object mesh " + mesh_path.string() + " changed since the templates were generated (sha256 " +
                         actual + ", expected " + set.object.sha256 + ")");
    }
  }
  return set;
}

TemplateSet map_templates(const TemplateSet& set, const Pose& base_sim, const Pose& base_vis) {
  const Pose map = frame_map(base_sim, base_vis);
  TemplateSet out = set;
  out.object_pose = apply_map(map, set.object_pose);
  out.center_of_mass = map.apply(set.center_of_mass);
  for (auto& t : out.templates) {
    t.base = apply_map(map, t.base);
    for (auto& c : t.contacts) c.point = map.apply(c.point);
    for (auto& v : t.hull_vertices) v = map.apply(v);
  }
  return out;
}

TriMesh template_hand_mesh(const AffordanceTemplate& t, const HandModel& model) {
  const auto poses = forward_kinematics(model, t.config, t.base);
  const Color tint = t.color.value_or(Color(1, 1, 1));
  std::vector<TriMesh> parts;
  for (std::size_t l = 0; l < model.links().size(); ++l) {
    parts.push_back(model.links()[l].mesh->transformed(poses[l]).with_uniform_color(tint));
  }
  return merge_meshes(parts);
}

std::vector<ExportedFile> export_scene(const TemplateSet& input, const HandModel& model, const TriMesh& object,
                                       const std::filesystem::path& out_dir) {
  bool colored = !input.templates.empty();
  for (const auto& t : input.templates) colored = colored && t.color.has_value();
  const TemplateSet set = colored || input.templates.empty() ? input : normalize_and_color(input);

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

  const TriMesh gray_object = object.transformed(set.object_pose).with_uniform_color(kObjectGray);
  std::vector<ExportedFile> files;
  OrderedJson index;
  index["format"] = "atk-scene-index";
  index["version"] = 1;
  index["object"] = {{"path", set.object.path}, {"sha256", set.object.sha256}};
  OrderedJson entries = OrderedJson::array();
  for (const auto& t : set.templates) {
    const TriMesh scene = merge_meshes({gray_object, template_hand_mesh(t, model)});
    const std::string name = t.id + ".ply";
    write_ply(scene, out_dir / name);
    files.push_back({t.id, out_dir / name, scene.vertices().size()});
    entries.push_back({{"id", t.id},
                       {"file", name},
                       {"d_h", t.d_h},
                       {"score_norm", *t.score_norm},
                       {"color", vec_json(*t.color)}});
  }
  index["templates"] = entries;
  write_file_atomic(out_dir / "index.json", index.dump(2) + "\n");
  return files;
}

}  // namespace atk
