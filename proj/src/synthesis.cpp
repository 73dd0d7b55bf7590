#include "atk/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "atk/error.hpp"
#include "atk/parallel.hpp"
#include "atk/random.hpp"

namespace atk {

namespace {

// Unit vector orthogonal to n, derived from the world axis least aligned with it.
Vec3 reference_tangent(const Vec3& n) {
  const Vec3 a = n.cwiseAbs();
  Vec3 axis = Vec3::UnitX();
  if (a.y() < a[0] && a.y() <= a.z()) axis = Vec3::UnitY();
  else if (a.z() < a[0] && a.z() < a.y()) axis = Vec3::UnitZ();
  return (axis - axis.dot(n) * n).normalized();
}

Mat3 frame_from(const Vec3& tangent, const Vec3& normal) {
  Mat3 m;
  m.col(0) = tangent;
  m.col(1) = normal.cross(tangent);
  m.col(2) = normal;
  return m;
}

}  // namespace

std::vector<Pose> sample_palm_poses(const SamplingRegion& region, int n, std::uint64_t seed,
                                    const Vec3& palm_normal) {
  if (!region.target || region.target->empty()) throw InvalidRegion("sampling region has no target mesh");
  if (region.spin < 1) throw InvalidRegion("spin must be at least 1");
  if (region.standoff < 0) throw InvalidRegion("standoff must be non-negative");
  const TriMesh& mesh = *region.target;
  std::vector<int> patch;
  if (region.patch) {
    patch = *region.patch;
    for (int t : patch) {
      if (t < 0 || t >= static_cast<int>(mesh.triangles().size()))
        throw InvalidRegion("patch triangle " + std::to_string(t) + " out of range");
    }
  } else {
    for (int t = 0; t < static_cast<int>(mesh.triangles().size()); ++t) patch.push_back(t);
  }
  if (patch.empty()) throw InvalidRegion("allowed patch is empty");
  if (n <= 0) return {};

  std::vector<double> cumulative;
  double total = 0.0;
  for (int t : patch) cumulative.push_back(total += mesh.triangle_area(t));

  const Vec3 ln = palm_normal.normalized();
  const Mat3 local = frame_from(reference_tangent(ln), ln);

  Rng rng(seed);
  std::vector<Pose> poses;
  poses.reserve(n);
  Vec3 point, normal;
  for (int i = 0; i < n; ++i) {
    const int roll = i % region.spin;
    if (roll == 0) {
      const double pick = rng.uniform() * total;
      const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), pick);
      const int tri = patch[std::min<std::size_t>(it - cumulative.begin(), patch.size() - 1)];
      double u = rng.uniform(), v = rng.uniform();
      if (u + v > 1.0) u = 1.0 - u, v = 1.0 - v;
      const auto [a, b, c] = mesh.triangle(tri);
      point = region.target_pose.apply(a + u * (b - a) + v * (c - a));
      normal = region.target_pose.apply_rotation(mesh.triangle_normal(tri));
    }
    const Vec3 inward = -normal;
    const double angle = 2.0 * std::numbers::pi * roll / region.spin;
    const Vec3 tangent = Eigen::AngleAxisd(angle, inward) * reference_tangent(inward);
    const Mat3 world = frame_from(tangent, inward);
    poses.push_back(Pose::from_matrix(world * local.transpose(), point + region.standoff * normal));
  }
  return poses;
}

std::string_view stop_reason_name(StopReason r) {
  switch (r) {
    case StopReason::ObjectCollision: return "object-collision";
    case StopReason::EnvironmentCollision: return "environment-collision";
    case StopReason::FingerCollision: return "finger-collision";
    case StopReason::JointLimit: return "joint-limit";
  }
  return "unknown";
}

HandBodies::HandBodies(const HandModel& model) {
  for (const auto& l : model.links()) bodies_.emplace_back(l.mesh, Pose());
}

namespace {

struct FingerTravel {
  double lead_ratio = 0.0;
  double start = 0.0;  // lead flexion at the start pulse
  double end = 0.0;    // lead flexion where travel stops
};

FingerTravel finger_travel(const HandModel& model, Finger f, int start_pulse) {
  const auto& ch = model.channel(flexion_channel(f));
  FingerTravel t;
  for (const auto& c : ch.couplings) t.lead_ratio = std::max(t.lead_ratio, c.ratio);
  t.start = t.lead_ratio * (start_pulse - ch.pulse_min);
  const double range_end = t.lead_ratio * (ch.pulse_max - ch.pulse_min);
  // Beyond this every coupled joint is pinned at its upper limit.
  double saturate = 0.0;
  for (const auto& c : ch.couplings) {
    saturate = std::max(saturate, model.joints()[c.joint].upper / c.ratio * t.lead_ratio);
  }
  t.end = std::max(t.start, std::min(range_end, saturate));
  return t;
}

void set_flexion(const HandModel& model, Finger f, double lead_ratio, double flexion, JointConfig& config) {
  for (const auto& c : model.channel(flexion_channel(f)).couplings) {
    config[model.joints()[c.joint].name] = coupled_angle(model, c, flexion / lead_ratio);
  }
}

std::optional<StopReason> finger_blocked(const HandModel& model, const HandBodies& bodies, const LinkPoses& poses,
                                         Finger f, const CollisionBody& object,
                                         const std::vector<CollisionBody>& environment) {
  const auto& links = model.finger(f).links;
  for (int l : links) {
    if (bodies_intersect(bodies.link(l).posed(poses[l]), object)) return StopReason::ObjectCollision;
  }
  for (int l : links) {
    const auto body = bodies.link(l).posed(poses[l]);
    for (const auto& env : environment)
      if (bodies_intersect(body, env)) return StopReason::EnvironmentCollision;
  }
  for (Finger other : kFingers) {
    if (other == f) continue;
    for (int o : model.finger(other).links) {
      const auto other_body = bodies.link(o).posed(poses[o]);
      for (int l : links) {
        if (bodies_intersect(bodies.link(l).posed(poses[l]), other_body)) return StopReason::FingerCollision;
      }
    }
  }
  return std::nullopt;
}

}  // namespace

GraspState close_fingers(const HandModel& model, const HandBodies& bodies, const Pose& base,
                         const CollisionBody& object, const std::vector<CollisionBody>& environment,
                         const ClosingOptions& options) {
  if (!(options.step > 0.0)) throw InvalidInput("closing step must be positive");
  ControlVector start;
  for (std::size_t c = 0; c < kChannelCount; ++c) start[c] = model.channels()[c].pulse_min;
  if (options.start_pulses) start = *options.start_pulses;

  GraspState state;
  state.base = base;
  state.config = actuate(model, start);

  const auto palm = bodies.link(0).posed(base);
  for (const auto& env : environment) {
    if (bodies_intersect(palm, env)) throw InvalidStart("palm intersects the environment at the start pose");
  }

  for (Finger f : kFingers) {
    const auto fi = static_cast<std::size_t>(f);
    const FingerTravel travel = finger_travel(model, f, start[static_cast<int>(flexion_channel(f))]);
    double flexion = travel.start;
    auto blocked_at = [&](double s) {
      JointConfig trial = state.config;
      set_flexion(model, f, travel.lead_ratio, s, trial);
      const auto poses = forward_kinematics(model, trial, base);
      return finger_blocked(model, bodies, poses, f, object, environment);
    };
    std::optional<StopReason> reason = blocked_at(flexion);
    for (long k = 1; !reason; ++k) {
      if (flexion >= travel.end) {
        reason = StopReason::JointLimit;
        break;
      }
      const double next = std::min(travel.start + static_cast<double>(k) * options.step, travel.end);
      reason = blocked_at(next);
      if (!reason) flexion = next;
    }
    set_flexion(model, f, travel.lead_ratio, flexion, state.config);
    state.stop[fi] = *reason;
    state.flexion[fi] = flexion;
  }

  const auto poses = forward_kinematics(model, state.config, base);
  state.contacts.resize(model.links().size());
  for (std::size_t l = 0; l < model.links().size(); ++l) {
    const double d = body_distance(bodies.link(l).posed(poses[l]), object);
    state.contacts[l] = {d <= options.contact_threshold, d};
  }
  return state;
}

GraspState close_fingers(const HandModel& model, const Pose& base, const CollisionBody& object,
                         const std::vector<CollisionBody>& environment, const ClosingOptions& options) {
  const HandBodies bodies(model);
  return close_fingers(model, bodies, base, object, environment, options);
}

std::vector<ContactPoint> contact_set(const HandModel& model, const LinkPoses& poses, const HandBodies& bodies,
                                      const CollisionBody& object, double threshold) {
  const auto centers = link_centers(model, poses);
  std::vector<ContactPoint> out;
  out.push_back({model.palm().name, centers[0]});
  for (std::size_t l = 1; l < model.links().size(); ++l) {
    if (std::isinf(threshold) && threshold > 0) {
      out.push_back({model.links()[l].name, centers[l]});
      continue;
    }
    if (body_distance(bodies.link(l).posed(poses[l]), object, threshold) <= threshold) {
      out.push_back({model.links()[l].name, centers[l]});
    }
  }
  return out;
}

std::vector<ContactPoint> contact_set(const HandModel& model, const GraspState& state, const CollisionBody& object,
                                      double threshold) {
  const HandBodies bodies(model);
  return contact_set(model, forward_kinematics(model, state.config, state.base), bodies, object, threshold);
}

GraspEvaluation evaluate_grasp(const std::vector<Vec3>& contacts, const Vec3& g) {
  if (contacts.empty()) throw InvalidInput("grasp evaluation needs at least one contact");
  GraspEvaluation e;
  e.hull = convex_hull(contacts);
  e.caged = contains(e.hull, g);
  e.d_h = hull_distance_metric(e.hull, g);
  return e;
}

GraspEvaluation evaluate_grasp(const std::vector<ContactPoint>& contacts, const Vec3& g) {
  std::vector<Vec3> pts;
  pts.reserve(contacts.size());
  for (const auto& c : contacts) pts.push_back(c.point);
  return evaluate_grasp(pts, g);
}

bool state_penetrates(const HandModel& model, const HandBodies& bodies, const LinkPoses& poses,
                      const CollisionBody& object, const std::vector<CollisionBody>& environment) {
  for (std::size_t l = 0; l < model.links().size(); ++l) {
    const auto body = bodies.link(l).posed(poses[l]);
    if (bodies_intersect(body, object)) return true;
    for (const auto& env : environment)
      if (bodies_intersect(body, env)) return true;
  }
  return false;
}

Vec3 object_center_of_mass(const SamplingRegion& region) {
  if (!region.target) throw InvalidRegion("sampling region has no target mesh");
  return region.target_pose.apply(region.target->volume_centroid());
}

std::vector<AffordanceTemplate> synthesize(const HandModel& model, const SamplingRegion& region,
                                           const SynthesisParams& params) {
  if (params.samples <= 0) return {};
  if (!region.target || !region.target->watertight()) throw InvalidRegion("synthesis requires a watertight target mesh");
  const auto poses = sample_palm_poses(region, params.samples, params.seed, model.palm_normal());
  const Vec3 g = object_center_of_mass(region);
  const HandBodies bodies(model);
  const CollisionBody object(region.target, region.target_pose);
  ClosingOptions opts;
  opts.step = params.step;
  opts.contact_threshold = params.contact_threshold;
  opts.start_pulses = params.start_pulses;

  std::vector<std::optional<AffordanceTemplate>> slots(poses.size());
  parallel_for(poses.size(), params.jobs, [&](std::size_t i) {
    GraspState state;
    try {
      state = close_fingers(model, bodies, poses[i], object, region.environment, opts);
    } catch (const InvalidStart&) {
      return;
    }
    const auto link_poses = forward_kinematics(model, state.config, state.base);
    if (state_penetrates(model, bodies, link_poses, object, region.environment)) return;
    auto contacts = contact_set(model, link_poses, bodies, object, params.contact_threshold);
    const auto eval = evaluate_grasp(contacts, g);
    if (!eval.caged) return;
    AffordanceTemplate t;
    t.id = fmt::format("s{:05d}", i);
    t.base = state.base;
    t.config = state.config;
    t.contacts = std::move(contacts);
    t.hull_vertices = eval.hull.vertices;
    t.d_h = eval.d_h;
    slots[i] = std::move(t);
  });

  std::vector<AffordanceTemplate> out;
  for (auto& s : slots)
    if (s) out.push_back(std::move(*s));
  std::stable_sort(out.begin(), out.end(), [](const AffordanceTemplate& a, const AffordanceTemplate& b) {
    return a.d_h != b.d_h ? a.d_h < b.d_h : a.id < b.id;
  });
  return out;
}

}  // namespace atk
