#include "atk/mesh.hpp"

#include <cmath>
#include <map>
#include <numbers>
#include <string>

#include "atk/error.hpp"

namespace atk {

TriMesh::TriMesh(std::vector<Vec3> vertices, std::vector<Triangle> triangles,
                 std::vector<Color> colors)
    : vertices_(std::move(vertices)), triangles_(std::move(triangles)), colors_(std::move(colors)) {
  if (!colors_.empty() && colors_.size() != vertices_.size()) {
    throw InvalidInput("mesh color count " + std::to_string(colors_.size()) +
                       " does not match vertex count " + std::to_string(vertices_.size()));
  }
  const int n = static_cast<int>(vertices_.size());
  for (std::size_t i = 0; i < triangles_.size(); ++i) {
    for (int idx : triangles_[i]) {
      if (idx < 0 || idx >= n) {
        throw InvalidInput("triangle " + std::to_string(i) + " references vertex " +
                           std::to_string(idx) + " out of range");
      }
    }
    if (triangle_area(i) <= kMinTriangleArea) {
      throw InvalidInput("triangle " + std::to_string(i) + " is degenerate");
    }
  }

  std::map<std::pair<int, int>, int> directed;
  bool closed = !triangles_.empty();
  for (const auto& t : triangles_) {
    for (int e = 0; e < 3; ++e) {
      const int a = t[e], b = t[(e + 1) % 3];
      if (++directed[{a, b}] > 1) closed = false;
    }
  }
  if (closed) {
    for (const auto& [edge, count] : directed) {
      auto twin = directed.find({edge.second, edge.first});
      if (twin == directed.end() || twin->second != 1) {
        closed = false;
        break;
      }
    }
  }
  watertight_ = closed;
}

Vec3 TriMesh::triangle_normal(std::size_t i) const {
  const auto [a, b, c] = triangle(i);
  return (b - a).cross(c - a).normalized();
}

double TriMesh::triangle_area(std::size_t i) const {
  const auto [a, b, c] = triangle(i);
  return 0.5 * (b - a).cross(c - a).norm();
}

Vec3 TriMesh::vertex_centroid() const {
  Vec3 sum = Vec3::Zero();
  for (const auto& v : vertices_) sum += v;
  return vertices_.empty() ? sum : Vec3(sum / static_cast<double>(vertices_.size()));
}

double TriMesh::volume() const {
  double vol = 0.0;
  for (std::size_t i = 0; i < triangles_.size(); ++i) {
    const auto [a, b, c] = triangle(i);
    vol += a.dot(b.cross(c)) / 6.0;
  }
  return vol;
}

Vec3 TriMesh::volume_centroid() const {
  if (!watertight_) throw InvalidInput("volume centroid requires a watertight mesh");
  // Shift to the vertex centroid first to keep the signed volumes well conditioned.
  const Vec3 ref = vertex_centroid();
  double vol = 0.0;
  Vec3 moment = Vec3::Zero();
  for (std::size_t i = 0; i < triangles_.size(); ++i) {
    const auto [a0, b0, c0] = triangle(i);
    const Vec3 a = a0 - ref, b = b0 - ref, c = c0 - ref;
    const double v = a.dot(b.cross(c)) / 6.0;
    vol += v;
    moment += v * (a + b + c) / 4.0;
  }
  if (std::abs(vol) <= 0.0) throw InvalidInput("mesh encloses zero volume");
  return ref + moment / vol;
}

std::pair<Vec3, Vec3> TriMesh::bounds() const {
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  for (const auto& v : vertices_) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  return {lo, hi};
}

TriMesh TriMesh::transformed(const Pose& pose) const {
  std::vector<Vec3> verts;
  verts.reserve(vertices_.size());
  for (const auto& v : vertices_) verts.push_back(pose.apply(v));
  return TriMesh(std::move(verts), triangles_, colors_);
}

TriMesh TriMesh::with_uniform_color(const Color& color) const {
  return TriMesh(vertices_, triangles_, std::vector<Color>(vertices_.size(), color));
}

TriMesh merge_meshes(const std::vector<TriMesh>& parts) {
  std::vector<Vec3> verts;
  std::vector<Triangle> tris;
  std::vector<Color> colors;
  bool all_colored = true;
  for (const auto& p : parts) all_colored = all_colored && p.has_colors();
  for (const auto& p : parts) {
    const int base = static_cast<int>(verts.size());
    verts.insert(verts.end(), p.vertices().begin(), p.vertices().end());
    if (all_colored) colors.insert(colors.end(), p.colors().begin(), p.colors().end());
    for (const auto& t : p.triangles()) tris.push_back({t[0] + base, t[1] + base, t[2] + base});
  }
  return TriMesh(std::move(verts), std::move(tris), std::move(colors));
}

TriMesh make_box(const Vec3& size, const Vec3& center) {
  const Vec3 h = size / 2.0;
  std::vector<Vec3> v;
  for (int i = 0; i < 8; ++i) {
    v.push_back(center + Vec3((i & 1) ? h.x() : -h.x(), (i & 2) ? h.y() : -h.y(),
                              (i & 4) ? h.z() : -h.z()));
  }
  // Outward winding per face.
  std::vector<Triangle> t = {
      {0, 2, 3}, {0, 3, 1},  // -z
      {4, 5, 7}, {4, 7, 6},  // +z
      {0, 1, 5}, {0, 5, 4},  // -y
      {2, 6, 7}, {2, 7, 3},  // +y
      {0, 4, 6}, {0, 6, 2},  // -x
      {1, 3, 7}, {1, 7, 5},  // +x
  };
  return TriMesh(std::move(v), std::move(t));
}

TriMesh make_cylinder(double radius, double height, int segments, const Vec3& center) {
  if (segments < 3) throw InvalidInput("cylinder needs at least 3 segments");
  std::vector<Vec3> v;
  std::vector<Triangle> t;
  const double hz = height / 2.0;
  for (int i = 0; i < segments; ++i) {
    const double a = 2.0 * std::numbers::pi * i / segments;
    v.push_back(center + Vec3(radius * std::cos(a), radius * std::sin(a), -hz));
    v.push_back(center + Vec3(radius * std::cos(a), radius * std::sin(a), hz));
  }
  const int bottom = static_cast<int>(v.size());
  v.push_back(center + Vec3(0, 0, -hz));
  const int top = bottom + 1;
  v.push_back(center + Vec3(0, 0, hz));
  for (int i = 0; i < segments; ++i) {
    const int j = (i + 1) % segments;
    const int b0 = 2 * i, t0 = 2 * i + 1, b1 = 2 * j, t1 = 2 * j + 1;
    t.push_back({b0, b1, t1});
    t.push_back({b0, t1, t0});
    t.push_back({bottom, b1, b0});
    t.push_back({top, t0, t1});
  }
  return TriMesh(std::move(v), std::move(t));
}

TriMesh make_uv_sphere(double radius, int rings, int segments, const Vec3& center) {
  if (rings < 2 || segments < 3) throw InvalidInput("sphere needs rings >= 2 and segments >= 3");
  std::vector<Vec3> v;
  std::vector<Triangle> t;
  v.push_back(center + Vec3(0, 0, radius));
  for (int r = 1; r < rings; ++r) {
    const double phi = std::numbers::pi * r / rings;
    for (int s = 0; s < segments; ++s) {
      const double th = 2.0 * std::numbers::pi * s / segments;
      v.push_back(center + radius * Vec3(std::sin(phi) * std::cos(th),
                                         std::sin(phi) * std::sin(th), std::cos(phi)));
    }
  }
  const int south = static_cast<int>(v.size());
  v.push_back(center + Vec3(0, 0, -radius));
  auto ring_vertex = [segments](int r, int s) { return 1 + (r - 1) * segments + (s % segments); };
  for (int s = 0; s < segments; ++s) t.push_back({0, ring_vertex(1, s), ring_vertex(1, s + 1)});
  for (int r = 1; r < rings - 1; ++r) {
    for (int s = 0; s < segments; ++s) {
      const int a = ring_vertex(r, s), b = ring_vertex(r, s + 1);
      const int c = ring_vertex(r + 1, s), d = ring_vertex(r + 1, s + 1);
      t.push_back({a, c, d});
      t.push_back({a, d, b});
    }
  }
  for (int s = 0; s < segments; ++s)
    t.push_back({south, ring_vertex(rings - 1, s + 1), ring_vertex(rings - 1, s)});
  return TriMesh(std::move(v), std::move(t));
}

}  // namespace atk
