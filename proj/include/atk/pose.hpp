#pragma once

#include <Eigen/Geometry>

namespace atk {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;

/// Rigid transform in SE(3): unit-quaternion rotation followed by a
/// translation in meters. The rotation is renormalized on every
/// construction and composition.
class Pose {
 public:
  Pose() : rotation_(Quat::Identity()), translation_(Vec3::Zero()) {}
  Pose(const Quat& rotation, const Vec3& translation)
      : rotation_(rotation.normalized()), translation_(translation) {}

  static Pose identity() { return Pose(); }
  static Pose from_translation(const Vec3& t) { return Pose(Quat::Identity(), t); }
  static Pose from_rotation(const Quat& q) { return Pose(q, Vec3::Zero()); }
  static Pose from_axis_angle(const Vec3& axis, double angle) {
    return Pose(Quat(Eigen::AngleAxisd(angle, axis.normalized())), Vec3::Zero());
  }
  /// Rotation given by its matrix; re-orthonormalized through the quaternion.
  static Pose from_matrix(const Mat3& r, const Vec3& t) { return Pose(Quat(r), t); }

  const Quat& rotation() const { return rotation_; }
  const Vec3& translation() const { return translation_; }
  Mat3 rotation_matrix() const { return rotation_.toRotationMatrix(); }
  Eigen::Matrix4d matrix() const;

  /// this ∘ other: applies `other` first.
  Pose operator*(const Pose& other) const {
    return Pose(rotation_ * other.rotation_, rotation_ * other.translation_ + translation_);
  }
  Vec3 apply(const Vec3& p) const { return rotation_ * p + translation_; }
  Vec3 apply_rotation(const Vec3& v) const { return rotation_ * v; }
  Pose inverse() const {
    const Quat inv = rotation_.conjugate();
    return Pose(inv, -(inv * translation_));
  }

  /// Rotation angle of this transform in [0, π].
  double angle() const;

  bool operator==(const Pose& other) const {
    return rotation_.coeffs() == other.rotation_.coeffs() && translation_ == other.translation_;
  }

 private:
  Quat rotation_;
  Vec3 translation_;
};

/// Rotation angle and translation distance between two poses.
struct PoseError {
  double angle;
  double distance;
};
PoseError pose_error(const Pose& a, const Pose& b);

/// Mapping transform between two frames sharing a physical reference:
/// returns base_vis ∘ base_sim⁻¹.
Pose frame_map(const Pose& base_sim, const Pose& base_vis);

/// Carries a simulator-frame body pose into the visualization frame.
inline Pose apply_map(const Pose& map, const Pose& body_sim) { return map * body_sim; }

}  // namespace atk
