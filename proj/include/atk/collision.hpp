#pragma once

#include <limits>
#include <memory>
#include <vector>

#include "atk/mesh.hpp"

namespace atk {

struct Aabb {
  Vec3 min = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 max = Vec3::Constant(-std::numeric_limits<double>::infinity());

  void expand(const Vec3& p) {
    min = min.cwiseMin(p);
    max = max.cwiseMax(p);
  }
  void expand(const Aabb& b) {
    min = min.cwiseMin(b.min);
    max = max.cwiseMax(b.max);
  }
  double distance(const Aabb& other) const;
};

// Exact primitive queries.
Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);
double segment_segment_distance(const Vec3& p0, const Vec3& p1, const Vec3& q0, const Vec3& q1);
bool segment_intersects_triangle(const Vec3& p0, const Vec3& p1, const Vec3& a, const Vec3& b,
                                 const Vec3& c);
/// Zero when the triangles touch or cross.
double triangle_distance(const std::array<Vec3, 3>& s, const std::array<Vec3, 3>& t);

/// Median-split AABB tree over the triangles of one mesh in its local frame.
class Bvh {
 public:
  explicit Bvh(std::shared_ptr<const TriMesh> mesh);

  const TriMesh& mesh() const { return *mesh_; }
  const Aabb& bounds() const { return nodes_.front().box; }

  /// Minimum distance from the tree's mesh to triangles already expressed
  /// in the tree's frame. Search stops once the result is known to be
  /// ≤ `stop_below`. Returns +inf when every candidate is farther than
  /// `cutoff`.
  double min_distance(const std::vector<std::array<Vec3, 3>>& triangles,
                      double cutoff = std::numeric_limits<double>::infinity(),
                      double stop_below = 0.0) const;

 private:
  struct Node {
    Aabb box;
    int left = -1, right = -1;  // children; -1 for leaves
    int first = 0, count = 0;   // range into order_
  };
  int build(int first, int count, const std::vector<Vec3>& centroids, int depth);
  double query(int node, const std::array<Vec3, 3>& tri, const Aabb& tri_box, double best) const;

  std::shared_ptr<const TriMesh> mesh_;
  std::vector<Node> nodes_;
  std::vector<int> order_;
};

/// A mesh placed in the world, with its acceleration structure.
struct CollisionBody {
  std::shared_ptr<const TriMesh> mesh;
  std::shared_ptr<const Bvh> bvh;
  Pose pose;

  CollisionBody() = default;
  CollisionBody(std::shared_ptr<const TriMesh> m, const Pose& p);
  CollisionBody posed(const Pose& p) const {
    CollisionBody b = *this;
    b.pose = p;
    return b;
  }
};

inline constexpr double kContactEpsilon = 1e-9;

double body_distance(const CollisionBody& a, const CollisionBody& b,
                     double cutoff = std::numeric_limits<double>::infinity());
bool bodies_intersect(const CollisionBody& a, const CollisionBody& b);

/// Minimum surface distance between two posed meshes. Throws InvalidInput
/// for empty meshes.
double mesh_min_distance(const TriMesh& a, const Pose& pose_a, const TriMesh& b,
                         const Pose& pose_b);
/// True iff the surfaces come within 1e-9 m of each other.
bool mesh_intersects(const TriMesh& a, const Pose& pose_a, const TriMesh& b, const Pose& pose_b);

}  // namespace atk
