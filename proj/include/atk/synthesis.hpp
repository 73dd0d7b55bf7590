#pragma once

// Enveloping grasp synthesis.
//
// Palm placements are sampled on the object surface; from each placement
// every finger closes in turn (thumb first) in small flexion increments
// until one of its links touches the object, the environment or another
// finger, or its channel runs out of travel. Closing is quasi-static and
// purely kinematic: the last collision-free increment is kept, so no state
// ever penetrates. Links within the contact threshold of the object, plus
// the palm, contribute their geometric centers to the grasp hull; a grasp
// is kept when the object's center of mass lies inside that hull and is
// scored by the hull-centroid offset d_h.

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "atk/affordance.hpp"
#include "atk/collision.hpp"
#include "atk/convex_hull.hpp"
#include "atk/hand_model.hpp"

namespace atk {

struct SamplingRegion {
  std::shared_ptr<const TriMesh> target;
  Pose target_pose;
  std::optional<std::vector<int>> patch;  // allowed triangles; nullopt = whole surface
  double standoff = 0.001;                // palm offset along the surface normal, meters
  int spin = 1;                           // discrete rolls about the contact normal
  std::vector<CollisionBody> environment;
};

/// n palm poses on the allowed patch. Points are area-uniform over the
/// patch; each drawn point is used for `spin` consecutive poses rolled by
/// 2πk/spin about the normal. The palm normal (model frame) is mapped onto
/// the inward surface normal. Throws InvalidRegion.
std::vector<Pose> sample_palm_poses(const SamplingRegion& region, int n, std::uint64_t seed,
                                    const Vec3& palm_normal = Vec3::UnitZ());

enum class StopReason { ObjectCollision, EnvironmentCollision, FingerCollision, JointLimit };
std::string_view stop_reason_name(StopReason r);

struct LinkContact {
  bool in_contact = false;
  double distance = 0.0;  // to the object surface
};

struct GraspState {
  Pose base;
  JointConfig config;
  std::vector<LinkContact> contacts;  // indexed like HandModel::links()
  std::array<StopReason, 5> stop{};   // per finger, thumb first
  std::array<double, 5> flexion{};    // lead-joint flexion reached, radians
};

/// Collision bodies for every hand link, built once per model.
class HandBodies {
 public:
  explicit HandBodies(const HandModel& model);
  const CollisionBody& link(std::size_t i) const { return bodies_[i]; }
  std::size_t size() const { return bodies_.size(); }

 private:
  std::vector<CollisionBody> bodies_;
};

struct ClosingOptions {
  double step = 0.005;               // radians of lead-joint flexion per increment
  double contact_threshold = 0.002;  // meters
  /// Start pulses; channels left unset start at their minimum. Thumb yaw
  /// and roll stay at their start values while the fingers close.
  std::optional<ControlVector> start_pulses;
};

/// Throws InvalidStart when the palm intersects the environment at `base`
/// and InvalidInput for a non-positive step.
GraspState close_fingers(const HandModel& model, const Pose& base, const CollisionBody& object,
                         const std::vector<CollisionBody>& environment, const ClosingOptions& options = {});
GraspState close_fingers(const HandModel& model, const HandBodies& bodies, const Pose& base,
                         const CollisionBody& object, const std::vector<CollisionBody>& environment,
                         const ClosingOptions& options = {});

/// Palm center plus the centers of every link within `threshold` of the object.
std::vector<ContactPoint> contact_set(const HandModel& model, const LinkPoses& poses,
                                      const HandBodies& bodies, const CollisionBody& object,
                                      double threshold);
std::vector<ContactPoint> contact_set(const HandModel& model, const GraspState& state,
                                      const CollisionBody& object, double threshold);

struct GraspEvaluation {
  bool caged = false;
  double d_h = 0.0;
  ConvexHull hull;
};

/// Caging test and centering metric over the contact centers. Throws
/// InvalidInput for an empty contact list.
GraspEvaluation evaluate_grasp(const std::vector<Vec3>& contacts, const Vec3& g);
GraspEvaluation evaluate_grasp(const std::vector<ContactPoint>& contacts, const Vec3& g);

/// True when any link intersects the object or an environment body.
bool state_penetrates(const HandModel& model, const HandBodies& bodies, const LinkPoses& poses,
                      const CollisionBody& object, const std::vector<CollisionBody>& environment);

struct SynthesisParams {
  int samples = 200;
  std::uint64_t seed = 1;
  double step = 0.005;
  double contact_threshold = 0.002;
  std::optional<ControlVector> start_pulses;
  unsigned jobs = 1;
};

/// Object center of mass: uniform-density volume centroid of the posed target.
Vec3 object_center_of_mass(const SamplingRegion& region);

/// Full pipeline. Returns caged candidates sorted by d_h (ties by id);
/// identical for a fixed seed regardless of `jobs`.
std::vector<AffordanceTemplate> synthesize(const HandModel& model, const SamplingRegion& region,
                                           const SynthesisParams& params);

}  // namespace atk
