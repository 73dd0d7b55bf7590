#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "atk/hand_model.hpp"

namespace atk {

struct ContactPoint {
  std::string link;
  Vec3 point;  // link geometric center

  bool operator==(const ContactPoint&) const = default;
};

/// One caged grasp candidate.
struct AffordanceTemplate {
  std::string id;
  Pose base;
  JointConfig config;
  std::vector<ContactPoint> contacts;
  std::vector<Vec3> hull_vertices;
  double d_h = 0.0;
  std::optional<double> score_norm;
  std::optional<Color> color;
};

struct ObjectRef {
  std::string path;    // as stored; relative paths resolve against the template file
  std::string sha256;  // of the mesh file bytes
};

/// Parameters the set was generated with, kept for provenance.
struct GenerationInfo {
  int samples = 0;
  std::uint64_t seed = 0;
  double step = 0.0;
  double contact_threshold = 0.0;
  double standoff = 0.0;
  int spin = 1;
};

struct TemplateSet {
  ObjectRef object;
  Pose object_pose;            // object mesh frame in the set's frame
  Vec3 center_of_mass = Vec3::Zero();
  GenerationInfo generation;
  std::vector<AffordanceTemplate> templates;
};

}  // namespace atk
