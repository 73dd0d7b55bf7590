#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <numbers>

#include "atk/collision.hpp"
#include "atk/convex_hull.hpp"
#include "atk/error.hpp"
#include "atk/mesh.hpp"
#include "atk/mesh_io.hpp"
#include "atk/random.hpp"
#include "oracles.hpp"

using namespace atk;

namespace {

std::vector<Vec3> cube_corners(double h = 1.0) {
  std::vector<Vec3> pts;
  for (int i = 0; i < 8; ++i) pts.emplace_back(i & 1 ? h : -h, i & 2 ? h : -h, i & 4 ? h : -h);
  return pts;
}

Vec3 random_point(Rng& rng, double scale = 1.0) {
  return {rng.uniform(-scale, scale), rng.uniform(-scale, scale), rng.uniform(-scale, scale)};
}

Pose random_pose(Rng& rng) {
  const Vec3 axis = random_point(rng).normalized();
  return Pose::from_translation(random_point(rng, 2.0)) * Pose::from_axis_angle(axis, rng.uniform(-3.1, 3.1));
}

std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("atk_geometry_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST(ConvexHull, CubeContainsCenterNotOutside) {
  const auto pts = cube_corners();
  const auto hull = convex_hull(pts);
  EXPECT_FALSE(hull.degenerate);
  EXPECT_EQ(hull.dimension, 3);
  EXPECT_EQ(hull.vertices.size(), 8u);
  EXPECT_TRUE(contains(hull, Vec3::Zero()));
  EXPECT_FALSE(contains(hull, Vec3(2, 0, 0)));
}

TEST(ConvexHull, TetrahedronBoundaryCountsAsInside) {
  const std::vector<Vec3> pts{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  const auto hull = convex_hull(pts);
  EXPECT_TRUE(contains(hull, Vec3(0.25, 0.25, 0.25)));
  EXPECT_TRUE(contains(hull, Vec3(0.5, 0.5, 0.0)));  // on a face
  EXPECT_TRUE(contains(hull, Vec3(0, 0, 0)));        // a vertex
  EXPECT_FALSE(contains(hull, Vec3(0.5, 0.5, 0.5)));
}

TEST(ConvexHull, InteriorPointsAreNotVertices) {
  auto pts = cube_corners();
  pts.emplace_back(0.1, 0.2, -0.3);
  pts.emplace_back(0, 0, 0);
  const auto hull = convex_hull(pts);
  EXPECT_EQ(hull.vertices.size(), 8u);
  for (int idx : hull.vertex_indices) EXPECT_LT(idx, 8);
}

TEST(ConvexHull, EdgeAndFacePointsAreNotVertices) {
  // A 3×3×3 lattice: only the eight corners are extreme, in any frame.
  std::vector<Vec3> grid;
  for (int x = 0; x < 3; ++x)
    for (int y = 0; y < 3; ++y)
      for (int z = 0; z < 3; ++z) grid.emplace_back(0.01 * x, 0.02 * y, 0.015 * z);
  Rng rng(19);
  for (int c = 0; c < 50; ++c) {
    const Pose t = random_pose(rng);
    std::vector<Vec3> moved;
    for (const auto& p : grid) moved.push_back(t.apply(p));
    const auto hull = convex_hull(moved);
    EXPECT_EQ(hull.vertices.size(), 8u);
    EXPECT_LT((hull_vertex_centroid(hull) - t.apply(Vec3(0.01, 0.02, 0.015))).norm(), 1e-12);
    for (const auto& p : moved) EXPECT_TRUE(contains(hull, p));
  }
}

TEST(ConvexHull, DegenerateInputsFlaggedAndContainNothing) {
  const std::vector<Vec3> point{{1, 2, 3}};
  const std::vector<Vec3> line{{0, 0, 0}, {1, 0, 0}, {2, 0, 0}};
  const std::vector<Vec3> plane{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}, {0.5, 0.5, 0}};
  const auto h0 = convex_hull(point), h1 = convex_hull(line), h2 = convex_hull(plane);
  EXPECT_TRUE(h0.degenerate);
  EXPECT_EQ(h0.dimension, 0);
  EXPECT_TRUE(h1.degenerate);
  EXPECT_EQ(h1.dimension, 1);
  EXPECT_TRUE(h2.degenerate);
  EXPECT_EQ(h2.dimension, 2);
  EXPECT_EQ(h2.vertices.size(), 4u);
  EXPECT_FALSE(contains(h2, Vec3(0.5, 0.5, 0)));
  EXPECT_FALSE(contains(h1, Vec3(1, 0, 0)));
  EXPECT_THROW(convex_hull(std::vector<Vec3>{}), InvalidInput);
}

TEST(ConvexHull, EveryInputSatisfiesEveryFacet) {
  Rng rng(7);
  for (int c = 0; c < 50; ++c) {
    std::vector<Vec3> pts;
    const int n = 4 + static_cast<int>(rng.next() % 30);
    for (int i = 0; i < n; ++i) pts.push_back(random_point(rng));
    const auto hull = convex_hull(pts);
    ASSERT_FALSE(hull.degenerate);
    for (const auto& face : hull.faces) {
      EXPECT_NEAR(face.normal.norm(), 1.0, 1e-12);
      for (const auto& p : pts) EXPECT_LE(face.normal.dot(p), face.offset + hull.tolerance);
    }
    for (const auto& p : pts) EXPECT_TRUE(contains(hull, p));
  }
}

TEST(ConvexHull, HullOfHullVerticesIsIdempotent) {
  Rng rng(11);
  for (int c = 0; c < 30; ++c) {
    std::vector<Vec3> pts;
    for (int i = 0; i < 20; ++i) pts.push_back(random_point(rng));
    const auto h1 = convex_hull(pts);
    const auto h2 = convex_hull(h1.vertices);
    EXPECT_EQ(h2.vertices.size(), h1.vertices.size());
    auto key = [](const Vec3& v) { return std::tuple(v.x(), v.y(), v.z()); };
    std::vector<std::tuple<double, double, double>> a, b;
    for (const auto& v : h1.vertices) a.push_back(key(v));
    for (const auto& v : h2.vertices) b.push_back(key(v));
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    EXPECT_EQ(a, b);
  }
}

TEST(ConvexHull, AgreesWithLpOracle) {
  Rng rng(3);
  int agree = 0;
  const int cases = 300;
  for (int c = 0; c < cases; ++c) {
    std::vector<Vec3> pts;
    const int n = 4 + static_cast<int>(rng.next() % 7);
    for (int i = 0; i < n; ++i) pts.push_back(random_point(rng));
    const Vec3 q = random_point(rng, 0.8);
    const auto hull = convex_hull(pts);
    agree += contains(hull, q) == oracle::convex_combination_feasible(pts, q);
  }
  EXPECT_EQ(agree, cases);
}

TEST(LpOracle, KnownCases) {
  const auto pts = cube_corners();
  EXPECT_TRUE(oracle::convex_combination_feasible(pts, Vec3(0.3, -0.2, 0.9)));
  EXPECT_FALSE(oracle::convex_combination_feasible(pts, Vec3(1.1, 0, 0)));
}

TEST(DistanceMetric, ZeroForSymmetricContacts) {
  EXPECT_EQ(hull_distance_metric(convex_hull(cube_corners()), Vec3::Zero()), 0.0);
  const std::vector<Vec3> octa{{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
  EXPECT_EQ(hull_distance_metric(convex_hull(octa), Vec3::Zero()), 0.0);
}

TEST(DistanceMetric, OffsetCenterOfMass) {
  EXPECT_DOUBLE_EQ(hull_distance_metric(convex_hull(cube_corners()), Vec3(0.3, 0.4, 0)), 0.5);
}

TEST(DistanceMetric, RigidInvariance) {
  Rng rng(5);
  for (int c = 0; c < 200; ++c) {
    std::vector<Vec3> pts;
    for (int i = 0; i < 8; ++i) pts.push_back(random_point(rng));
    const Vec3 g = random_point(rng, 0.5);
    const Pose t = random_pose(rng);
    std::vector<Vec3> moved;
    for (const auto& p : pts) moved.push_back(t.apply(p));
    const double d0 = hull_distance_metric(convex_hull(pts), g);
    const double d1 = hull_distance_metric(convex_hull(moved), t.apply(g));
    EXPECT_NEAR(d0, d1, 1e-9);
    EXPECT_EQ(contains(convex_hull(pts), g), contains(convex_hull(moved), t.apply(g)));
  }
}

TEST(Pose, CompositionInverseAndIdentity) {
  Rng rng(9);
  for (int c = 0; c < 100; ++c) {
    const Pose a = random_pose(rng), b = random_pose(rng), d = random_pose(rng);
    const auto e1 = pose_error((a * b) * d, a * (b * d));
    EXPECT_LT(e1.angle, 1e-9);
    EXPECT_LT(e1.distance, 1e-9);
    const auto e2 = pose_error(a * a.inverse(), Pose::identity());
    EXPECT_LT(e2.angle, 1e-9);
    EXPECT_LT(e2.distance, 1e-9);
    const Vec3 p = random_point(rng);
    EXPECT_LT(((a * b).apply(p) - a.apply(b.apply(p))).norm(), 1e-12);
    EXPECT_LT(((a.matrix() * p.homogeneous()).head<3>() - a.apply(p)).norm(), 1e-12);
  }
}

TEST(Pose, FrameMapSendsSimToVis) {
  Rng rng(13);
  for (int c = 0; c < 200; ++c) {
    const Pose s = random_pose(rng), v = random_pose(rng);
    const auto err = pose_error(apply_map(frame_map(s, v), s), v);
    EXPECT_LT(err.angle, 1e-9);
    EXPECT_LT(err.distance, 1e-9);
  }
  const Pose s = random_pose(rng);
  const auto err = pose_error(frame_map(s, s), Pose::identity());
  EXPECT_LT(err.angle, 1e-12);
  EXPECT_LT(err.distance, 1e-12);
}

TEST(Pose, QuaternionNormalizedAndDoubleCoverEqual) {
  const Pose p(Quat(2, 0, 0, 0), Vec3(1, 2, 3));
  EXPECT_NEAR(p.rotation().norm(), 1.0, 1e-15);
  const Pose q(Quat(-1, 0, 0, 0), Vec3(1, 2, 3));
  EXPECT_LT(pose_error(p, q).angle, 1e-12);
}

TEST(Mesh, BoxVolumeCentroidAndWatertight) {
  const auto box = make_box(Vec3(2, 3, 4), Vec3(1, 1, 1));
  EXPECT_TRUE(box.watertight());
  EXPECT_NEAR(box.volume(), 24.0, 1e-12);
  EXPECT_LT((box.volume_centroid() - Vec3(1, 1, 1)).norm(), 1e-12);
  const auto cyl = make_cylinder(1.0, 2.0, 64);
  EXPECT_TRUE(cyl.watertight());
  EXPECT_NEAR(cyl.volume(), 2.0 * 64 / 2.0 * std::sin(2 * std::numbers::pi / 64), 1e-9);
  EXPECT_TRUE(make_uv_sphere(1.0, 12, 24).watertight());
}

TEST(Mesh, RejectsBadIndicesAndDegenerateTriangles) {
  const std::vector<Vec3> v{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  EXPECT_THROW(TriMesh(v, {{0, 1, 5}}), InvalidInput);
  EXPECT_THROW(TriMesh({{0, 0, 0}, {1, 0, 0}, {2, 0, 0}}, {{0, 1, 2}}), InvalidInput);
}

TEST(Collision, TriangleDistanceExamples) {
  const std::array<Vec3, 3> a{Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)};
  const std::array<Vec3, 3> b{Vec3(0, 0, 1), Vec3(1, 0, 1), Vec3(0, 1, 1)};
  EXPECT_NEAR(triangle_distance(a, b), 1.0, 1e-12);
  const std::array<Vec3, 3> pierce{Vec3(0.2, 0.2, -1), Vec3(0.2, 0.2, 1), Vec3(0.3, 0.4, 1)};
  EXPECT_EQ(triangle_distance(a, pierce), 0.0);
}

TEST(Collision, DisjointTouchingOverlappingBoxes) {
  auto a = std::make_shared<TriMesh>(make_box(Vec3(1, 1, 1)));
  const CollisionBody ba(a, Pose());
  EXPECT_NEAR(body_distance(ba, CollisionBody(a, Pose::from_translation(Vec3(3, 0, 0)))), 2.0, 1e-12);
  EXPECT_TRUE(bodies_intersect(ba, CollisionBody(a, Pose::from_translation(Vec3(1, 0, 0)))));
  EXPECT_TRUE(bodies_intersect(ba, CollisionBody(a, Pose::from_translation(Vec3(0.5, 0.2, 0.1)))));
  EXPECT_FALSE(bodies_intersect(ba, CollisionBody(a, Pose::from_translation(Vec3(1.001, 0, 0)))));
  EXPECT_THROW(mesh_intersects(TriMesh(), Pose(), *a, Pose()), InvalidInput);
}

TEST(Collision, BvhDistanceMatchesBruteForce) {
  Rng rng(17);
  const auto sphere = std::make_shared<TriMesh>(make_uv_sphere(0.5, 8, 12));
  const auto box = std::make_shared<TriMesh>(make_box(Vec3(0.3, 0.6, 0.2)));
  for (int c = 0; c < 40; ++c) {
    const Pose pa = random_pose(rng), pb = random_pose(rng);
    const TriMesh ma = sphere->transformed(pa), mb = box->transformed(pb);
    double brute = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < ma.triangles().size(); ++i) {
      for (std::size_t j = 0; j < mb.triangles().size(); ++j) {
        brute = std::min(brute, triangle_distance(ma.triangle(i), mb.triangle(j)));
      }
    }
    const double fast = body_distance(CollisionBody(sphere, pa), CollisionBody(box, pb));
    EXPECT_NEAR(fast, brute, 1e-12);
    EXPECT_NEAR(mesh_min_distance(*sphere, pa, *box, pb), brute, 1e-12);
  }
}

TEST(MeshIo, ObjRoundTripAndErrors) {
  const auto dir = temp_dir("obj");
  const auto box = make_box(Vec3(1, 2, 3));
  write_obj(box, dir / "box.obj");
  const auto back = read_obj(dir / "box.obj");
  EXPECT_EQ(back.triangles().size(), box.triangles().size());
  EXPECT_NEAR(back.volume(), 6.0, 1e-9);

  const auto quad = parse_obj("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n");
  EXPECT_EQ(quad.triangles().size(), 2u);
  const auto neg = parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf -3 -2 -1\n");
  EXPECT_EQ(neg.triangles().size(), 1u);
  try {
    parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 9\n", "bad.obj");
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.unit(), FormatError::Unit::Line);
    EXPECT_EQ(e.position(), 4u);
  }
  try {
    parse_obj("v 0 0 0\nv 1 zz 0\n", "bad.obj");
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.position(), 2u);
  }
  EXPECT_THROW(read_obj(dir / "missing.obj"), IoError);
}

TEST(MeshIo, StlRoundTripAndTruncation) {
  const auto dir = temp_dir("stl");
  const auto box = make_box(Vec3(1, 1, 1));
  write_stl(box, dir / "box.stl");
  const auto back = read_stl(dir / "box.stl");
  EXPECT_EQ(back.vertices().size(), 8u);
  EXPECT_TRUE(back.watertight());
  auto bytes = read_file_bytes(dir / "box.stl");
  bytes.resize(84 + 50 * 3 + 10);
  try {
    parse_stl(bytes, "cut.stl");
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.unit(), FormatError::Unit::Byte);
    EXPECT_EQ(e.position(), 84u + 50 * 3);
  }
}

TEST(MeshIo, PlyRoundTripKeepsColors) {
  const auto dir = temp_dir("ply");
  const auto box = make_box(Vec3(1, 1, 1)).with_uniform_color(Color(1, 0, 0));
  write_ply(box, dir / "box.ply");
  const auto back = read_ply(dir / "box.ply");
  EXPECT_EQ(back.vertices().size(), box.vertices().size());
  ASSERT_TRUE(back.has_colors());
  for (const auto& c : back.colors()) EXPECT_EQ(c, Color(1, 0, 0));
  EXPECT_NEAR(back.volume(), 1.0, 1e-6);
  EXPECT_THROW(parse_ply(std::vector<std::uint8_t>{}, "empty.ply"), FormatError);
}

TEST(MeshIo, PlyAcceptsAscii) {
  const std::string text =
      "ply\nformat ascii 1.0\nelement vertex 3\nproperty float x\nproperty float y\nproperty float z\n"
      "element face 1\nproperty list uchar int vertex_indices\nend_header\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n";
  const auto mesh = parse_ply(std::vector<std::uint8_t>(text.begin(), text.end()));
  EXPECT_EQ(mesh.triangles().size(), 1u);
}

TEST(MeshIo, Sha256KnownVector) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}
