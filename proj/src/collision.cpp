#include "atk/collision.hpp"

#include <algorithm>
#include <numeric>

#include "atk/error.hpp"

namespace atk {

double Aabb::distance(const Aabb& o) const {
  const Vec3 gap = (o.min - max).cwiseMax(min - o.max).cwiseMax(Vec3::Zero());
  return gap.norm();
}

// Closest point on triangle abc to p (Ericson, Real-Time Collision Detection 5.1.5).
Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0 && d2 <= 0) return a;
  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0 && d4 <= d3) return b;
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0 && d1 >= 0 && d3 <= 0) return a + (d1 / (d1 - d3)) * ab;
  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0 && d5 <= d6) return c;
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0 && d2 >= 0 && d6 <= 0) return a + (d2 / (d2 - d6)) * ac;
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0) {
    return b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b);
  }
  const double denom = 1.0 / (va + vb + vc);
  return a + ab * (vb * denom) + ac * (vc * denom);
}

double segment_segment_distance(const Vec3& p1, const Vec3& q1, const Vec3& p2, const Vec3& q2) {
  const Vec3 d1 = q1 - p1, d2 = q2 - p2, r = p1 - p2;
  const double a = d1.squaredNorm(), e = d2.squaredNorm(), f = d2.dot(r);
  constexpr double eps = 1e-300;
  double s = 0, t = 0;
  if (a <= eps && e <= eps) return r.norm();
  if (a <= eps) {
    t = std::clamp(f / e, 0.0, 1.0);
  } else {
    const double c = d1.dot(r);
    if (e <= eps) {
      s = std::clamp(-c / a, 0.0, 1.0);
    } else {
      const double b = d1.dot(d2);
      const double denom = a * e - b * b;
      s = denom > 0 ? std::clamp((b * f - c * e) / denom, 0.0, 1.0) : 0.0;
      t = (b * s + f) / e;
      if (t < 0) {
        t = 0;
        s = std::clamp(-c / a, 0.0, 1.0);
      } else if (t > 1) {
        t = 1;
        s = std::clamp((b - c) / a, 0.0, 1.0);
      }
    }
  }
  return ((p1 + d1 * s) - (p2 + d2 * t)).norm();
}

bool segment_intersects_triangle(const Vec3& p0, const Vec3& p1, const Vec3& a, const Vec3& b,
                                 const Vec3& c) {
  const Vec3 n = (b - a).cross(c - a);
  const double s0 = n.dot(p0 - a), s1 = n.dot(p1 - a);
  if ((s0 > 0 && s1 > 0) || (s0 < 0 && s1 < 0)) return false;
  if (s0 == s1) return false;  // coplanar: covered by the edge/vertex distance terms
  const double t = s0 / (s0 - s1);
  const Vec3 x = p0 + t * (p1 - p0);
  // Same-side tests against each edge, relative to the face normal.
  const double e0 = (b - a).cross(x - a).dot(n);
  const double e1 = (c - b).cross(x - b).dot(n);
  const double e2 = (a - c).cross(x - c).dot(n);
  return (e0 >= 0 && e1 >= 0 && e2 >= 0) || (e0 <= 0 && e1 <= 0 && e2 <= 0);
}

double triangle_distance(const std::array<Vec3, 3>& s, const std::array<Vec3, 3>& t) {
  for (int i = 0; i < 3; ++i) {
    if (segment_intersects_triangle(s[i], s[(i + 1) % 3], t[0], t[1], t[2])) return 0.0;
    if (segment_intersects_triangle(t[i], t[(i + 1) % 3], s[0], s[1], s[2])) return 0.0;
  }
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 3; ++i) {
    best = std::min(best, (s[i] - closest_point_on_triangle(s[i], t[0], t[1], t[2])).norm());
    best = std::min(best, (t[i] - closest_point_on_triangle(t[i], s[0], s[1], s[2])).norm());
    for (int j = 0; j < 3; ++j) {
      best = std::min(best, segment_segment_distance(s[i], s[(i + 1) % 3], t[j], t[(j + 1) % 3]));
    }
  }
  return best;
}

namespace {

Aabb triangle_box(const std::array<Vec3, 3>& tri) {
  Aabb box;
  for (const auto& p : tri) box.expand(p);
  return box;
}

constexpr int kLeafSize = 4;

}  // namespace

Bvh::Bvh(std::shared_ptr<const TriMesh> mesh) : mesh_(std::move(mesh)) {
  if (!mesh_ || mesh_->empty()) throw InvalidInput("cannot build a BVH over an empty mesh");
  const int n = static_cast<int>(mesh_->triangles().size());
  order_.resize(n);
  std::iota(order_.begin(), order_.end(), 0);
  std::vector<Vec3> centroids(n);
  for (int i = 0; i < n; ++i) {
    const auto tri = mesh_->triangle(i);
    centroids[i] = (tri[0] + tri[1] + tri[2]) / 3.0;
  }
  nodes_.reserve(2 * n);
  build(0, n, centroids, 0);
}

int Bvh::build(int first, int count, const std::vector<Vec3>& centroids, int depth) {
  const int id = static_cast<int>(nodes_.size());
  nodes_.emplace_back();
  Aabb box, cbox;
  for (int i = first; i < first + count; ++i) {
    box.expand(triangle_box(mesh_->triangle(order_[i])));
    cbox.expand(centroids[order_[i]]);
  }
  nodes_[id].box = box;
  nodes_[id].first = first;
  nodes_[id].count = count;
  if (count <= kLeafSize || depth > 48) return id;

  int axis = 0;
  const Vec3 extent = cbox.max - cbox.min;
  if (extent.y() > extent[axis]) axis = 1;
  if (extent.z() > extent[axis]) axis = 2;
  const int mid = first + count / 2;
  std::nth_element(order_.begin() + first, order_.begin() + mid, order_.begin() + first + count,
                   [&](int a, int b) {
                     const double ca = centroids[a][axis], cb = centroids[b][axis];
                     return ca != cb ? ca < cb : a < b;
                   });
  const int left = build(first, mid - first, centroids, depth + 1);
  const int right = build(mid, first + count - mid, centroids, depth + 1);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

double Bvh::query(int node_id, const std::array<Vec3, 3>& tri, const Aabb& tri_box, double best) const {
  const Node& node = nodes_[node_id];
  if (node.box.distance(tri_box) >= best) return best;
  if (node.left < 0) {
    for (int i = node.first; i < node.first + node.count && best > 0; ++i) {
      best = std::min(best, triangle_distance(mesh_->triangle(order_[i]), tri));
    }
    return best;
  }
  const double dl = nodes_[node.left].box.distance(tri_box);
  const double dr = nodes_[node.right].box.distance(tri_box);
  const int near = dl <= dr ? node.left : node.right;
  const int far = dl <= dr ? node.right : node.left;
  best = query(near, tri, tri_box, best);
  if (best > 0) best = query(far, tri, tri_box, best);
  return best;
}

double Bvh::min_distance(const std::vector<std::array<Vec3, 3>>& triangles, double cutoff,
                         double stop_below) const {
  // Exclusive bound: anything at exactly `cutoff` is still reported.
  double best = std::nextafter(cutoff, std::numeric_limits<double>::infinity());
  for (const auto& tri : triangles) {
    best = query(0, tri, triangle_box(tri), best);
    if (best <= stop_below) break;
  }
  return best > cutoff ? std::numeric_limits<double>::infinity() : best;
}

CollisionBody::CollisionBody(std::shared_ptr<const TriMesh> m, const Pose& p)
    : mesh(std::move(m)), bvh(std::make_shared<Bvh>(mesh)), pose(p) {}

namespace {

double distance_impl(const CollisionBody& a, const CollisionBody& b, double cutoff, double stop_below) {
  // Query the larger mesh's tree with the smaller mesh's triangles.
  const bool swap = a.mesh->triangles().size() < b.mesh->triangles().size();
  const CollisionBody& tree = swap ? b : a;
  const CollisionBody& probe = swap ? a : b;
  const Pose rel = tree.pose.inverse() * probe.pose;
  std::vector<Vec3> local;
  local.reserve(probe.mesh->vertices().size());
  Aabb probe_box;
  for (const auto& v : probe.mesh->vertices()) {
    local.push_back(rel.apply(v));
    probe_box.expand(local.back());
  }
  if (tree.bvh->bounds().distance(probe_box) > cutoff) return std::numeric_limits<double>::infinity();
  std::vector<std::array<Vec3, 3>> tris;
  tris.reserve(probe.mesh->triangles().size());
  for (const auto& t : probe.mesh->triangles()) tris.push_back({local[t[0]], local[t[1]], local[t[2]]});
  return tree.bvh->min_distance(tris, cutoff, stop_below);
}

}  // namespace

double body_distance(const CollisionBody& a, const CollisionBody& b, double cutoff) {
  return distance_impl(a, b, cutoff, 0.0);
}

bool bodies_intersect(const CollisionBody& a, const CollisionBody& b) {
  return distance_impl(a, b, kContactEpsilon, kContactEpsilon) <= kContactEpsilon;
}

double mesh_min_distance(const TriMesh& a, const Pose& pose_a, const TriMesh& b, const Pose& pose_b) {
  if (a.empty() || b.empty()) throw InvalidInput("distance query on an empty mesh");
  const CollisionBody ba(std::make_shared<TriMesh>(a), pose_a);
  const CollisionBody bb(std::make_shared<TriMesh>(b), pose_b);
  return body_distance(ba, bb);
}

bool mesh_intersects(const TriMesh& a, const Pose& pose_a, const TriMesh& b, const Pose& pose_b) {
  if (a.empty() || b.empty()) throw InvalidInput("intersection query on an empty mesh");
  const CollisionBody ba(std::make_shared<TriMesh>(a), pose_a);
  const CollisionBody bb(std::make_shared<TriMesh>(b), pose_b);
  return bodies_intersect(ba, bb);
}

}  // namespace atk
