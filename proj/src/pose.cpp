#include "atk/pose.hpp"

#include <algorithm>
#include <cmath>

namespace atk {

Eigen::Matrix4d Pose::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rotation_matrix();
  m.topRightCorner<3, 1>() = translation_;
  return m;
}

double Pose::angle() const {
  // |w| handles the q / -q double cover.
  const double w = std::min(1.0, std::abs(rotation_.w()));
  const double v = rotation_.vec().norm();
  return 2.0 * std::atan2(v, w);
}

PoseError pose_error(const Pose& a, const Pose& b) {
  const Pose delta = a.inverse() * b;
  return {delta.angle(), (a.translation() - b.translation()).norm()};
}

Pose frame_map(const Pose& base_sim, const Pose& base_vis) { return base_vis * base_sim.inverse(); }

}  // namespace atk
