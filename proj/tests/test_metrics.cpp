#include "d2im/fixtures.hpp"
#include "d2im/kdtree.hpp"
#include "d2im/metrics.hpp"
#include "support.hpp"

#include <algorithm>
#include <cmath>

using namespace d2im;

namespace {

std::vector<KdTree<3>::Neighbor> brute_knn(const std::vector<Vec3>& pts, const Vec3& q, std::size_t k,
                                           std::size_t exclude) {
  std::vector<KdTree<3>::Neighbor> all;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (i != exclude) all.push_back({(pts[i] - q).squaredNorm(), i});
  }
  std::sort(all.begin(), all.end());
  all.resize(std::min(k, all.size()));
  return all;
}

} // namespace

TEST_CASE("k-d tree queries equal brute force, ties broken by index") {
  // Property, with a lattice so that equal distances are common.
  std::vector<Vec3> pts = test::random_points(600, 17);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j)
      for (int k = 0; k < 5; ++k) pts.emplace_back(0.1 * i, 0.1 * j, 0.1 * k);
  pts.push_back(pts[3]); // exact duplicate
  const KdTree<3> tree(pts);
  Rng rng(2);
  for (int t = 0; t < 300; ++t) {
    const Vec3 q = t % 3 == 0 ? pts[rng.below(pts.size())] : test::random_point(rng);
    const auto expect = brute_knn(pts, q, 1, SIZE_MAX);
    const auto got = tree.nearest(q);
    REQUIRE(got.index == expect[0].index);
    REQUIRE(got.distance_squared == expect[0].distance_squared);
    const std::size_t self = rng.below(pts.size());
    const auto kn = tree.knn(pts[self], 10, self);
    const auto bf = brute_knn(pts, pts[self], 10, self);
    REQUIRE(kn.size() == bf.size());
    for (std::size_t i = 0; i < kn.size(); ++i) {
      REQUIRE(kn[i].index == bf[i].index);
    }
  }
}

TEST_CASE("chamfer distance on hand-computed sets") {
  // a -> b: 1; b -> a: (1 + 2) / 2; halved sum 1.25.
  const std::vector<Vec3> a = {Vec3(0, 0, 0)};
  const std::vector<Vec3> b = {Vec3(1, 0, 0), Vec3(0, 2, 0)};
  CHECK(chamfer_l1(a, b) == doctest::Approx(1.25));
  CHECK(chamfer_l1(b, a) == doctest::Approx(1.25));
  CHECK(chamfer_l1(b, b) == 0.0);
  CHECK(chamfer_l1_2d({Vec2(0, 0)}, {Vec2(3, 4)}) == doctest::Approx(5.0));
  CHECK_THROWS_AS(chamfer_l1(std::vector<Vec3>{}, b), UsageError);
}

TEST_CASE("IoU of concentric spheres equals the lattice count ratio") {
  const int n = 32;
  long inner = 0, outer = 0;
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        const Vec3 c = Vec3(i + 0.5, j + 0.5, k + 0.5) / n - Vec3::Constant(0.5);
        inner += c.norm() - 0.2 < 0;
        outer += c.norm() - 0.4 < 0;
      }
  const ScalarField small = [](const Vec3& p) { return p.norm() - 0.2; };
  const ScalarField big = [](const Vec3& p) { return p.norm() - 0.4; };
  CHECK(iou(small, big, n) == static_cast<double>(inner) / static_cast<double>(outer));
  CHECK(iou(big, big, n) == 1.0);
  const ScalarField nothing = [](const Vec3&) { return 1.0; };
  CHECK(iou(nothing, nothing, n) == 1.0);
  CHECK(iou(nothing, big, n) == 0.0);
}

TEST_CASE("surface samples lie on the mesh with outward unit normals") {
  const TriMesh cube = fixtures::box(Vec3::Constant(-0.25), Vec3::Constant(0.25));
  const PointSet s = sample_surface(cube, 3000, 4);
  REQUIRE(s.size() == 3000);
  CHECK_NOTHROW(s.validate());
  for (std::size_t i = 0; i < s.size(); ++i) {
    REQUIRE(std::abs(test::box_sdf(s.points[i], 0.25)) < 1e-12);
    // The normal points along the axis the sample sits on.
    const Vec3 p = s.points[i];
    int axis = 0;
    p.cwiseAbs().maxCoeff(&axis);
    REQUIRE(s.normals[i][axis] == doctest::Approx(p[axis] > 0 ? 1.0 : -1.0));
  }
  CHECK(sample_surface(cube, 3000, 4).points == s.points);
}

TEST_CASE("edgeness is 1 on a plane and matches the brute-force oracle on the cube") {
  PointSet plane;
  Rng rng(6);
  for (int i = 0; i < 500; ++i) {
    plane.points.emplace_back(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), 0.0);
    plane.normals.push_back(Vec3::UnitZ());
  }
  for (double s : edgeness(plane, 10)) REQUIRE(s == 1.0);
  CHECK(edge_rows(edgeness(plane, 10)).empty());

  const PointSet cube = sample_surface(fixtures::box(Vec3::Constant(-0.25), Vec3::Constant(0.25)), 20000, 8);
  std::vector<std::size_t> rows(2000);
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i * 10;
  const PointSet sub = cube.subset(rows);
  const auto fast = edgeness(sub, 10);
  CHECK(fast == edgeness_brute_force(sub, 10));
  // Cube faces are orthogonal: points near an edge see sigma = 0.
  const auto edges = edge_rows(fast, 0.8);
  CHECK_FALSE(edges.empty());
  for (auto r : edges) REQUIRE(fast[r] == 0.0);
}

TEST_CASE("edge chamfer: identical inputs and the no-edges outcome") {
  const PointSet cube = sample_surface(fixtures::box(Vec3::Constant(-0.25), Vec3::Constant(0.25)), 4000, 2);
  const EdgeChamfer same = ecd3d(cube, cube);
  REQUIRE(same.has_edges());
  CHECK(*same.value == 0.0);

  const PointSet sphere = sample_surface(fixtures::icosphere(), 4000, 3);
  const EdgeChamfer none = ecd3d(sphere, sphere);
  CHECK_FALSE(none.has_edges());
  CHECK_FALSE(ecd3d(cube, sphere).has_edges());
}

TEST_CASE("normal map luminance") {
  NormalMap m(2, 1);
  m.normals[0] = Vec3::UnitZ();
  m.mask[0] = 1;
  m.normals[1] = Vec3::UnitZ();
  const GrayImage g = normal_map_luminance(m);
  // Color (0.5, 0.5, 1.0) under Rec. 601 weights.
  CHECK(g.at(0, 0) == doctest::Approx(0.299 * 0.5 + 0.587 * 0.5 + 0.114));
  CHECK(g.at(1, 0) == 0.0);
}

TEST_CASE("Canny finds a vertical step on one column") {
  GrayImage img(32, 24);
  for (int y = 0; y < 24; ++y)
    for (int x = 16; x < 32; ++x) img.at(x, y) = 1.0;
  const auto mask = canny(img);
  // Magnitudes tie across the step; the pixel before it wins (m >= ahead, m > behind).
  for (int y = 0; y < 24; ++y) {
    for (int x = 0; x < 32; ++x) {
      const bool expected = x == 15 && y >= 1 && y <= 22;
      REQUIRE((mask[static_cast<std::size_t>(y) * 32 + x] != 0) == expected);
    }
  }
  const auto pts = edge_pixels(mask, 32, 24);
  REQUIRE(pts.size() == 22);
  CHECK(pts.front().isApprox(Vec2(15.5, 1.5)));

  const auto flat = canny(GrayImage(16, 16, 0.3));
  CHECK(std::all_of(flat.begin(), flat.end(), [](auto v) { return v == 0; }));
  CHECK_THROWS_AS(canny(img, {1.4, 0.3, 0.3}), UsageError);
}

TEST_CASE("ECD-2D of identical renders is zero") {
  const TriMesh cube = fixtures::beveled_cube();
  const EdgeChamfer e = ecd2d(cube, cube, Camera::rotated_y(0.4));
  REQUIRE(e.has_edges());
  CHECK(*e.value == 0.0);
  const NormalMap empty(16, 16);
  CHECK_FALSE(ecd2d(empty, empty).has_edges());
}

TEST_CASE("evaluate_meshes on identical meshes and its errors") {
  MetricParams params;
  params.point_count = 5000;
  params.seed = 3;
  const TriMesh cube = fixtures::beveled_cube();
  const MetricReport r = evaluate_meshes(cube, cube, Camera::front(), params);
  CHECK(r.cd == 0.0);
  CHECK(r.iou == 1.0);
  REQUIRE(r.ecd3d.has_edges());
  CHECK(*r.ecd3d.value == 0.0);
  CHECK(r.params == params);

  CHECK_THROWS_AS(evaluate_meshes(cube, TriMesh{}, Camera::front(), params), Error);
  params.canny.low = 0.5;
  CHECK_THROWS_AS(evaluate_meshes(cube, cube, Camera::front(), params), UsageError);
}
