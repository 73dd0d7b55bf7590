#pragma once

#include <span>
#include <vector>

#include "atk/pose.hpp"

namespace atk {

/// Outward half-space normal·x ≤ offset bounding a hull facet.
struct HalfSpace {
  Vec3 normal;
  double offset;
};

/// Convex hull of a point set.
///
/// For full-dimensional input the facets are triangles with outward unit
/// normals. Inputs whose affine dimension is below three (including fewer
/// than four distinct points) are flagged `degenerate`; their vertices are
/// the extreme points within the spanned line or plane and `faces` is empty.
struct ConvexHull {
  std::vector<Vec3> vertices;            // subset of the input, ordered by input index
  std::vector<int> vertex_indices;       // positions of `vertices` in the input
  std::vector<HalfSpace> faces;
  std::vector<std::array<int, 3>> facets;  // input indices, counter-clockwise seen from outside
  bool degenerate = false;
  int dimension = 0;                     // affine dimension of the input (0..3)
  double tolerance = 0.0;                // 1e-9 × bounding-box diagonal of the input
};

inline constexpr double kHullRelativeTolerance = 1e-9;

/// Deterministic incremental construction: points are inserted in input
/// order after an extreme-point seed simplex. Throws InvalidInput on empty
/// input.
ConvexHull convex_hull(std::span<const Vec3> points);

/// Half-space membership with the boundary counted as inside. Degenerate
/// hulls contain nothing.
bool contains(const ConvexHull& hull, const Vec3& point, double tol);
inline bool contains(const ConvexHull& hull, const Vec3& point) {
  return contains(hull, point, hull.tolerance);
}

/// Arithmetic mean of the hull vertices.
Vec3 hull_vertex_centroid(const ConvexHull& hull);

/// Grasp-centering metric: distance from the hull vertex centroid to `g`.
double hull_distance_metric(const ConvexHull& hull, const Vec3& g);

}  // namespace atk
