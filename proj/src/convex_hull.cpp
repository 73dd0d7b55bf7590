#include "atk/convex_hull.hpp"

#include <algorithm>
#include <map>

#include "atk/error.hpp"

namespace atk {

namespace {

struct Facet {
  std::array<int, 3> v;
  Vec3 normal;
  double offset;
  bool alive = true;
};

Facet make_facet(std::span<const Vec3> pts, int a, int b, int c) {
  Facet f;
  f.v = {a, b, c};
  f.normal = (pts[b] - pts[a]).cross(pts[c] - pts[a]).normalized();
  f.offset = f.normal.dot(pts[a]);
  return f;
}

double line_distance(const Vec3& p, const Vec3& a, const Vec3& dir) {
  const Vec3 d = p - a;
  return (d - d.dot(dir) * dir).norm();
}

// Monotone-chain hull of points projected onto a plane. Returns input
// indices of strict extreme points.
std::vector<int> planar_hull(std::span<const Vec3> pts, const Vec3& origin, const Vec3& u,
                             const Vec3& v, double tol) {
  struct P2 {
    double x, y;
    int idx;
  };
  std::vector<P2> q;
  for (int i = 0; i < static_cast<int>(pts.size()); ++i) {
    const Vec3 d = pts[i] - origin;
    q.push_back({d.dot(u), d.dot(v), i});
  }
  std::sort(q.begin(), q.end(), [](const P2& a, const P2& b) {
    return a.x != b.x ? a.x < b.x : a.y != b.y ? a.y < b.y : a.idx < b.idx;
  });
  // Signed area scaled by the base length gives a distance-like test.
  auto turn = [tol](const P2& o, const P2& a, const P2& b) {
    const double cross = (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
    const double len = std::hypot(b.x - o.x, b.y - o.y);
    return cross > tol * len;
  };
  std::vector<P2> h(2 * q.size());
  std::size_t k = 0;
  for (const auto& p : q) {
    while (k >= 2 && !turn(h[k - 2], h[k - 1], p)) --k;
    h[k++] = p;
  }
  for (std::size_t i = q.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && !turn(h[k - 2], h[k - 1], q[i])) --k;
    h[k++] = q[i];
  }
  std::vector<int> out;
  for (std::size_t i = 0; i + 1 < k; ++i) out.push_back(h[i].idx);
  return out;
}

void set_vertices(ConvexHull& hull, std::span<const Vec3> pts, std::vector<int> idx) {
  std::sort(idx.begin(), idx.end());
  idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
  hull.vertex_indices = idx;
  hull.vertices.clear();
  for (int i : idx) hull.vertices.push_back(pts[i]);
}

ConvexHull build_hull(std::span<const Vec3> pts, double tol) {
  ConvexHull hull;
  hull.tolerance = tol;

  const int n = static_cast<int>(pts.size());
  // Seed simplex from extreme points; ties resolve to the lowest index.
  int i0 = 0;
  for (int i = 1; i < n; ++i) {
    if (pts[i].x() < pts[i0].x()) i0 = i;
  }
  int i1 = i0;
  double best = 0.0;
  for (int i = 0; i < n; ++i) {
    const double d = (pts[i] - pts[i0]).norm();
    if (d > best) best = d, i1 = i;
  }
  if (best <= tol) {
    hull.dimension = 0;
    hull.degenerate = true;
    set_vertices(hull, pts, {i0});
    return hull;
  }
  const Vec3 dir = (pts[i1] - pts[i0]).normalized();
  int i2 = i0;
  best = 0.0;
  for (int i = 0; i < n; ++i) {
    const double d = line_distance(pts[i], pts[i0], dir);
    if (d > best) best = d, i2 = i;
  }
  if (best <= tol) {
    hull.dimension = 1;
    hull.degenerate = true;
    // Extremes along the line.
    int lo_i = 0, hi_i = 0;
    for (int i = 1; i < n; ++i) {
      const double t = (pts[i] - pts[i0]).dot(dir);
      if (t < (pts[lo_i] - pts[i0]).dot(dir)) lo_i = i;
      if (t > (pts[hi_i] - pts[i0]).dot(dir)) hi_i = i;
    }
    set_vertices(hull, pts, {lo_i, hi_i});
    return hull;
  }
  const Vec3 plane_n = (pts[i1] - pts[i0]).cross(pts[i2] - pts[i0]).normalized();
  int i3 = i0;
  best = 0.0;
  for (int i = 0; i < n; ++i) {
    const double d = std::abs((pts[i] - pts[i0]).dot(plane_n));
    if (d > best) best = d, i3 = i;
  }
  if (best <= tol) {
    hull.dimension = 2;
    hull.degenerate = true;
    set_vertices(hull, pts, planar_hull(pts, pts[i0], dir, plane_n.cross(dir), tol));
    return hull;
  }
  hull.dimension = 3;

  std::vector<Facet> facets;
  const Vec3 inside = (pts[i0] + pts[i1] + pts[i2] + pts[i3]) / 4.0;
  auto add_oriented = [&](int a, int b, int c) {
    Facet f = make_facet(pts, a, b, c);
    if (f.normal.dot(inside) > f.offset) f = make_facet(pts, a, c, b);
    facets.push_back(f);
  };
  add_oriented(i0, i1, i2);
  add_oriented(i0, i1, i3);
  add_oriented(i0, i2, i3);
  add_oriented(i1, i2, i3);

  std::map<std::pair<int, int>, int> edge_owner;  // directed edge -> facet
  auto register_facet = [&](int f) {
    const auto& v = facets[f].v;
    for (int e = 0; e < 3; ++e) edge_owner[{v[e], v[(e + 1) % 3]}] = f;
  };
  for (int f = 0; f < 4; ++f) register_facet(f);

  for (int i = 0; i < n; ++i) {
    if (i == i0 || i == i1 || i == i2 || i == i3) continue;
    std::vector<int> visible;
    for (int f = 0; f < static_cast<int>(facets.size()); ++f) {
      if (facets[f].alive && facets[f].normal.dot(pts[i]) - facets[f].offset > tol) visible.push_back(f);
    }
    if (visible.empty()) continue;
    std::vector<char> is_visible(facets.size(), 0);
    for (int f : visible) is_visible[f] = 1;

    std::vector<std::pair<int, int>> horizon;
    for (int f : visible) {
      const auto& v = facets[f].v;
      for (int e = 0; e < 3; ++e) {
        const int a = v[e], b = v[(e + 1) % 3];
        const auto twin = edge_owner.find({b, a});
        if (twin != edge_owner.end() && !is_visible[twin->second]) horizon.emplace_back(a, b);
      }
    }
    for (int f : visible) {
      facets[f].alive = false;
      const auto& v = facets[f].v;
      for (int e = 0; e < 3; ++e) {
        auto it = edge_owner.find({v[e], v[(e + 1) % 3]});
        if (it != edge_owner.end() && it->second == f) edge_owner.erase(it);
      }
    }
    for (const auto& [a, b] : horizon) {
      facets.push_back(make_facet(pts, a, b, i));
      register_facet(static_cast<int>(facets.size()) - 1);
    }
  }

  std::vector<int> used;
  for (const auto& f : facets) {
    if (!f.alive) continue;
    hull.faces.push_back({f.normal, f.offset});
    hull.facets.push_back(f.v);
    used.insert(used.end(), f.v.begin(), f.v.end());
  }
  set_vertices(hull, pts, used);
  return hull;
}

}  // namespace

ConvexHull convex_hull(std::span<const Vec3> pts) {
  if (pts.empty()) throw InvalidInput("convex hull of an empty point set");
  Vec3 lo = pts[0], hi = pts[0];
  for (const auto& p : pts) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const double tol = kHullRelativeTolerance * (hi - lo).norm();
  ConvexHull hull = build_hull(pts, tol);
  if (hull.dimension < 3) return hull;

  // Incremental insertion can leave points lying on an edge or face as
  // vertices; keep only corners so the vertex set is frame independent.
  std::vector<int> keep = hull.vertex_indices;
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t k = 0; k < keep.size() && !changed; ++k) {
      std::vector<Vec3> others;
      for (std::size_t j = 0; j < keep.size(); ++j) {
        if (j != k) others.push_back(pts[keep[j]]);
      }
      const ConvexHull rest = build_hull(others, tol);
      if (rest.dimension == 3 && contains(rest, pts[keep[k]], tol)) {
        keep.erase(keep.begin() + static_cast<long>(k));
        changed = true;
      }
    }
  }
  if (keep.size() == hull.vertex_indices.size()) return hull;

  std::vector<Vec3> corners;
  for (int i : keep) corners.push_back(pts[i]);
  ConvexHull out = build_hull(corners, tol);
  for (auto& f : out.facets) {
    for (int& v : f) v = keep[v];
  }
  std::vector<int> idx;
  for (int i : out.vertex_indices) idx.push_back(keep[i]);
  set_vertices(out, pts, idx);
  return out;
}

bool contains(const ConvexHull& hull, const Vec3& point, double tol) {
  if (hull.degenerate || hull.faces.empty()) return false;
  for (const auto& f : hull.faces) {
    if (f.normal.dot(point) > f.offset + tol) return false;
  }
  return true;
}

Vec3 hull_vertex_centroid(const ConvexHull& hull) {
  if (hull.vertices.empty()) throw InvalidInput("hull has no vertices");
  Vec3 sum = Vec3::Zero();
  for (const auto& v : hull.vertices) sum += v;
  return sum / static_cast<double>(hull.vertices.size());
}

double hull_distance_metric(const ConvexHull& hull, const Vec3& g) {
  return (hull_vertex_centroid(hull) - g).norm();
}

}  // namespace atk
