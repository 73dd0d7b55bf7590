#pragma once

#include <array>
#include <optional>
#include <vector>

#include "atk/pose.hpp"

namespace atk {

using Triangle = std::array<int, 3>;
using Color = Eigen::Vector3d;  // RGB in [0, 1]

/// Indexed triangle mesh. Construction validates indices and rejects
/// triangles with area below 1e-12 m². Watertightness is detected, not
/// required: every undirected edge must be shared by exactly two triangles
/// with opposite winding.
class TriMesh {
 public:
  static constexpr double kMinTriangleArea = 1e-12;

  TriMesh() = default;
  TriMesh(std::vector<Vec3> vertices, std::vector<Triangle> triangles,
          std::vector<Color> colors = {});

  const std::vector<Vec3>& vertices() const { return vertices_; }
  const std::vector<Triangle>& triangles() const { return triangles_; }
  const std::vector<Color>& colors() const { return colors_; }
  bool has_colors() const { return !colors_.empty(); }
  bool watertight() const { return watertight_; }
  bool empty() const { return triangles_.empty(); }

  std::array<Vec3, 3> triangle(std::size_t i) const {
    const auto& t = triangles_[i];
    return {vertices_[t[0]], vertices_[t[1]], vertices_[t[2]]};
  }
  Vec3 triangle_normal(std::size_t i) const;
  double triangle_area(std::size_t i) const;

  /// Mean of the vertex positions.
  Vec3 vertex_centroid() const;
  /// Volume centroid of a closed mesh under uniform density (signed
  /// tetrahedra against the origin). Throws InvalidInput for open meshes or
  /// zero volume.
  Vec3 volume_centroid() const;
  double volume() const;

  /// Axis-aligned bounds as (min, max).
  std::pair<Vec3, Vec3> bounds() const;

  TriMesh transformed(const Pose& pose) const;
  TriMesh with_uniform_color(const Color& color) const;

 private:
  std::vector<Vec3> vertices_;
  std::vector<Triangle> triangles_;
  std::vector<Color> colors_;
  bool watertight_ = false;
};

/// Concatenates meshes; colors are kept only when every part carries them.
TriMesh merge_meshes(const std::vector<TriMesh>& parts);

// Primitive builders. All produce closed, outward-wound meshes.
TriMesh make_box(const Vec3& size, const Vec3& center = Vec3::Zero());
TriMesh make_cylinder(double radius, double height, int segments,
                      const Vec3& center = Vec3::Zero());  // axis along z
TriMesh make_uv_sphere(double radius, int rings, int segments,
                       const Vec3& center = Vec3::Zero());

}  // namespace atk
