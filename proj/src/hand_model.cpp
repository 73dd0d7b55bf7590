#include "atk/hand_model.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>

#include "atk/error.hpp"
#include "atk/json_io.hpp"
#include "atk/mesh_io.hpp"

namespace atk {

namespace {

constexpr std::array<std::string_view, 5> kFingerNames = {"thumb", "index", "middle", "ring", "pinky"};
constexpr std::array<std::string_view, kChannelCount> kChannelNames = {
    "thumb_flexion", "index_flexion", "middle_flexion", "ring_flexion",
    "pinky_flexion", "thumb_yaw",     "thumb_roll"};

}  // namespace

std::string_view finger_name(Finger f) { return kFingerNames[static_cast<int>(f)]; }

std::optional<Finger> finger_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kFingerNames.size(); ++i)
    if (kFingerNames[i] == name) return static_cast<Finger>(i);
  return std::nullopt;
}

std::string_view channel_name(Channel c) { return kChannelNames[static_cast<int>(c)]; }

std::optional<Channel> channel_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kChannelNames.size(); ++i)
    if (kChannelNames[i] == name) return static_cast<Channel>(i);
  return std::nullopt;
}

HandModel::HandModel(std::vector<Link> links, std::vector<Joint> joints, std::vector<FingerChain> fingers,
                     std::array<ActuationChannel, kChannelCount> channels, Vec3 palm_normal)
    : links_(std::move(links)),
      joints_(std::move(joints)),
      fingers_(std::move(fingers)),
      channels_(std::move(channels)),
      palm_normal_(palm_normal.normalized()) {
  if (links_.empty()) throw InvalidConfig("hand has no palm link");
  const int nl = static_cast<int>(links_.size());
  const int nj = static_cast<int>(joints_.size());
  std::set<std::string> names;
  for (const auto& l : links_) {
    if (!names.insert(l.name).second) throw InvalidConfig("duplicate link name " + l.name);
    if (!l.mesh || l.mesh->empty()) throw InvalidConfig("link " + l.name + " has no mesh");
  }
  names.clear();
  std::vector<int> parent_joint(nl, -1);
  for (int j = 0; j < nj; ++j) {
    auto& jt = joints_[j];
    if (!names.insert(jt.name).second) throw InvalidConfig("duplicate joint name " + jt.name);
    if (jt.parent < 0 || jt.parent >= nl || jt.child <= 0 || jt.child >= nl)
      throw InvalidConfig("joint " + jt.name + " has invalid parent/child links");
    if (parent_joint[jt.child] != -1) throw InvalidConfig("link " + links_[jt.child].name + " has two parent joints");
    if (jt.axis.norm() < 1e-12) throw InvalidConfig("joint " + jt.name + " has a zero axis");
    if (jt.lower > jt.upper) throw InvalidConfig("joint " + jt.name + " has inverted limits");
    jt.axis.normalize();
    parent_joint[jt.child] = j;
  }
  for (int l = 1; l < nl; ++l)
    if (parent_joint[l] == -1) throw InvalidConfig("link " + links_[l].name + " is not attached to the tree");

  // Parent-before-child ordering; fails on cycles.
  std::vector<int> depth(nl, -1);
  depth[0] = 0;
  std::function<int(int, int)> link_depth = [&](int l, int guard) -> int {
    if (depth[l] >= 0) return depth[l];
    if (guard > nl) throw InvalidConfig("kinematic graph has a cycle");
    return depth[l] = link_depth(joints_[parent_joint[l]].parent, guard + 1) + 1;
  };
  for (int l = 0; l < nl; ++l) link_depth(l, 0);
  topo_.resize(nj);
  for (int j = 0; j < nj; ++j) topo_[j] = j;
  std::stable_sort(topo_.begin(), topo_.end(),
                   [&](int a, int b) { return depth[joints_[a].child] < depth[joints_[b].child]; });

  if (fingers_.size() != kFingers.size()) throw InvalidConfig("hand must define exactly five fingers");
  std::sort(fingers_.begin(), fingers_.end(),
            [](const FingerChain& a, const FingerChain& b) { return a.finger < b.finger; });
  for (std::size_t i = 0; i < fingers_.size(); ++i) {
    auto& chain = fingers_[i];
    if (chain.finger != kFingers[i]) throw InvalidConfig("each finger must be defined exactly once");
    if (chain.joints.empty()) throw InvalidConfig("finger " + std::string(finger_name(chain.finger)) + " has no joints");
    chain.links.clear();
    int expected_parent = 0;
    for (int j : chain.joints) {
      if (j < 0 || j >= nj) throw InvalidConfig("finger chain references an unknown joint");
      if (joints_[j].parent != expected_parent)
        throw InvalidConfig("finger " + std::string(finger_name(chain.finger)) + " is not a contiguous chain from the palm");
      expected_parent = joints_[j].child;
      chain.links.push_back(joints_[j].child);
    }
  }

  driver_.assign(nj, std::nullopt);
  for (std::size_t c = 0; c < kChannelCount; ++c) {
    const auto& ch = channels_[c];
    if (ch.id != kChannels[c]) throw InvalidConfig("channels must be listed in control-vector order");
    if (ch.pulse_min > ch.pulse_max) throw InvalidConfig("channel " + std::string(channel_name(ch.id)) + " has an inverted pulse range");
    for (const auto& cp : ch.couplings) {
      if (cp.joint < 0 || cp.joint >= nj) throw InvalidConfig("channel couples an unknown joint");
      if (!(cp.ratio > 0.0)) throw InvalidConfig("coupling ratios must be positive");
      if (driver_[cp.joint]) throw InvalidConfig("joint " + joints_[cp.joint].name + " is driven by two channels");
      driver_[cp.joint] = ch.id;
    }
  }
  for (Finger f : kFingers) {
    if (channels_[static_cast<int>(flexion_channel(f))].couplings.empty())
      throw InvalidConfig("flexion channel for " + std::string(finger_name(f)) + " drives no joints");
  }
}

std::optional<int> HandModel::link_index(std::string_view name) const {
  for (std::size_t i = 0; i < links_.size(); ++i)
    if (links_[i].name == name) return static_cast<int>(i);
  return std::nullopt;
}

std::optional<int> HandModel::joint_index(std::string_view name) const {
  for (std::size_t i = 0; i < joints_.size(); ++i)
    if (joints_[i].name == name) return static_cast<int>(i);
  return std::nullopt;
}

void HandModel::validate(const JointConfig& config) const {
  for (const auto& [name, angle] : config) {
    const auto j = joint_index(name);
    if (!j) throw InvalidConfig("unknown joint '" + name + "'");
    const auto& jt = joints_[*j];
    if (!std::isfinite(angle) || angle < jt.lower || angle > jt.upper) {
      throw InvalidConfig("joint '" + name + "' angle " + std::to_string(angle) + " outside [" +
                          std::to_string(jt.lower) + ", " + std::to_string(jt.upper) + "]");
    }
  }
}

JointConfig HandModel::zero_config() const {
  JointConfig c;
  for (const auto& j : joints_) c[j.name] = std::clamp(0.0, j.lower, j.upper);
  return c;
}

LinkPoses forward_kinematics(const HandModel& model, const JointConfig& config, const Pose& base) {
  model.validate(config);
  const auto& joints = model.joints();
  std::vector<double> angles(joints.size(), 0.0);
  for (const auto& [name, angle] : config) angles[*model.joint_index(name)] = angle;
  LinkPoses poses(model.links().size());
  poses[0] = base;
  for (int j : model.topological_joints()) {
    const auto& jt = joints[j];
    poses[jt.child] = poses[jt.parent] * jt.origin * Pose::from_axis_angle(jt.axis, angles[j]);
  }
  return poses;
}

double coupled_angle(const HandModel& model, const Coupling& c, double pulse_offset) {
  const auto& jt = model.joints()[c.joint];
  return std::clamp(c.ratio * pulse_offset, jt.lower, jt.upper);
}

JointConfig actuate(const HandModel& model, const ControlVector& u) {
  JointConfig config = model.zero_config();
  for (std::size_t c = 0; c < kChannelCount; ++c) {
    const auto& ch = model.channels()[c];
    if (u[c] < ch.pulse_min || u[c] > ch.pulse_max) {
      throw InvalidPulse("pulse " + std::to_string(u[c]) + " for channel " + std::string(channel_name(ch.id)) +
                         " outside [" + std::to_string(ch.pulse_min) + ", " + std::to_string(ch.pulse_max) + "]");
    }
    for (const auto& cp : ch.couplings) {
      config[model.joints()[cp.joint].name] = coupled_angle(model, cp, static_cast<double>(u[c] - ch.pulse_min));
    }
  }
  return config;
}

std::vector<Vec3> link_centers(const HandModel& model, const LinkPoses& poses) {
  std::vector<Vec3> centers;
  centers.reserve(model.links().size());
  for (std::size_t i = 0; i < model.links().size(); ++i) {
    centers.push_back(poses[i].apply(model.links()[i].mesh->vertex_centroid()));
  }
  return centers;
}

std::map<std::string, Vec3> link_centers_by_name(const HandModel& model, const LinkPoses& poses) {
  const auto centers = link_centers(model, poses);
  std::map<std::string, Vec3> out;
  for (std::size_t i = 0; i < centers.size(); ++i) out[model.links()[i].name] = centers[i];
  return out;
}

// ---------------------------------------------------------------- loader

HandModel parse_hand(const std::string& text, const std::filesystem::path& base_dir, const std::string& source) {
  const Json doc = parse_json(text, source);
  check_header(doc, "atk-hand", 1, source);

  std::vector<Link> links;
  const auto& palm = doc.at("palm");
  links.push_back({optional_field<std::string>(palm, "name", "palm", source),
                   std::make_shared<TriMesh>(mesh_from_json(palm.at("mesh"), base_dir, source + ": palm mesh"))});
  const Vec3 palm_normal =
      palm.contains("normal") ? vec3_from_json(palm.at("normal"), source + ": palm normal") : Vec3(Vec3::UnitZ());
  for (const auto& l : node(doc, "links", source)) {
    const auto name = required<std::string>(l, "name", source + ": link");
    links.push_back({name, std::make_shared<TriMesh>(mesh_from_json(node(l, "mesh", source), base_dir,
                                                                    source + ": link " + name))});
  }
  auto find_link = [&](const std::string& name) {
    for (std::size_t i = 0; i < links.size(); ++i)
      if (links[i].name == name) return static_cast<int>(i);
    throw ConfigError(source + ": unknown link '" + name + "'");
  };

  std::vector<Joint> joints;
  for (const auto& j : node(doc, "joints", source)) {
    Joint jt;
    jt.name = required<std::string>(j, "name", source + ": joint");
    const std::string what = source + ": joint " + jt.name;
    jt.parent = find_link(required<std::string>(j, "parent", what));
    jt.child = find_link(required<std::string>(j, "child", what));
    jt.axis = vec3_from_json(node(j, "axis", what), what + " axis");
    jt.origin = j.contains("origin") ? pose_from_json(j.at("origin"), what + " origin") : Pose();
    const auto limits = required<std::vector<double>>(j, "limits", what);
    if (limits.size() != 2) throw ConfigError(what + ": limits must be [lower, upper]");
    jt.lower = limits[0];
    jt.upper = limits[1];
    joints.push_back(jt);
  }
  auto find_joint = [&](const std::string& name) {
    for (std::size_t i = 0; i < joints.size(); ++i)
      if (joints[i].name == name) return static_cast<int>(i);
    throw ConfigError(source + ": unknown joint '" + name + "'");
  };

  std::vector<FingerChain> fingers;
  for (const auto& [name, chain] : node(doc, "fingers", source).items()) {
    const auto f = finger_from_name(name);
    if (!f) throw ConfigError(source + ": unknown finger '" + name + "'");
    FingerChain fc;
    fc.finger = *f;
    for (const auto& jn : chain) fc.joints.push_back(find_joint(jn.get<std::string>()));
    fingers.push_back(fc);
  }

  std::array<ActuationChannel, kChannelCount> channels;
  std::array<bool, kChannelCount> seen{};
  for (const auto& c : node(doc, "channels", source)) {
    const auto name = required<std::string>(c, "name", source + ": channel");
    const auto id = channel_from_name(name);
    if (!id) throw ConfigError(source + ": unknown channel '" + name + "'");
    const int idx = static_cast<int>(*id);
    if (seen[idx]) throw ConfigError(source + ": channel '" + name + "' defined twice");
    seen[idx] = true;
    auto& ch = channels[idx];
    ch.id = *id;
    const auto range = required<std::vector<int>>(c, "pulse_range", source + ": channel " + name);
    if (range.size() != 2) throw ConfigError(source + ": channel " + name + " pulse_range must be [min, max]");
    ch.pulse_min = range[0];
    ch.pulse_max = range[1];
    for (const auto& cp : node(c, "couplings", source + ": channel " + name)) {
      ch.couplings.push_back({find_joint(required<std::string>(cp, "joint", source)),
                              required<double>(cp, "ratio", source)});
    }
  }
  for (std::size_t i = 0; i < kChannelCount; ++i) {
    if (!seen[i]) throw ConfigError(source + ": missing channel '" + std::string(kChannelNames[i]) + "'");
  }
  try {
    return HandModel(std::move(links), std::move(joints), std::move(fingers), channels, palm_normal);
  } catch (const InvalidConfig& e) {
    throw ConfigError(source + ": " + e.what());
  }
}

HandModel load_hand(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ConfigError("hand description not found: " + path.string());
  const auto bytes = read_file_bytes(path);
  try {
    return parse_hand(std::string(bytes.begin(), bytes.end()), path.parent_path(), path.string());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

}  // namespace atk
