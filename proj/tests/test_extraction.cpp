#include "d2im/extraction.hpp"
#include "support.hpp"

#include <bit>
#include <cmath>
#include <limits>

using namespace d2im;

TEST_CASE("cube edges connect corners that differ in one bit") {
  for (int e = 0; e < 12; ++e) {
    const auto [a, b] = cube_edge(e);
    REQUIRE(std::popcount(static_cast<unsigned>(a ^ b)) == 1);
  }
}

TEST_CASE("triangulation table: empty extremes and sign-changing edges only") {
  const auto& table = marching_cubes_table();
  CHECK(table[0].empty());
  CHECK(table[255].empty());
  REQUIRE(table[1].size() == 1); // one negative corner cuts off one triangle
  for (int e : table[1][0]) {
    const auto [a, b] = cube_edge(e);
    CHECK((a == 0 || b == 0));
  }
  for (int mask = 0; mask < 256; ++mask) {
    for (const auto& tri : table[mask]) {
      for (int e : tri) {
        const auto [a, b] = cube_edge(e);
        REQUIRE((((mask >> a) & 1) != ((mask >> b) & 1)));
      }
    }
  }
}

TEST_CASE("sample_field lays values out x fastest") {
  const FieldGrid g = sample_field([](const Vec3& p) { return p.x() + 10 * p.y() + 100 * p.z(); }, 3);
  CHECK(g.values.size() == 27);
  CHECK(g.values[g.index(2, 0, 0)] == doctest::Approx(0.5 - 5 - 50));
  CHECK(g.values[1] == doctest::Approx(0.0 - 5 - 50));
  CHECK(g.node(1, 2, 0).isApprox(Vec3(0, 0.5, -0.5)));
  CHECK_THROWS_AS(sample_field([](const Vec3&) { return std::nan(""); }, 4), Error);
}

TEST_CASE("a plane is recovered exactly") {
  const TriMesh m = marching_cubes(sample_field([](const Vec3& p) { return p.z() - 0.1; }, 17));
  REQUIRE_FALSE(m.empty());
  for (const Vec3& v : m.vertices) REQUIRE(std::abs(v.z() - 0.1) < 1e-12);
  CHECK(m.area() == doctest::Approx(1.0).epsilon(1e-12));
  // Triangles face the positive side.
  for (std::size_t t = 0; t < m.triangle_count(); ++t) REQUIRE(m.face_normal(t).z() > 0.999);
}

TEST_CASE("sphere extraction is closed and close to the analytic radius") {
  for (int n : {16, 33, 64}) {
    const TriMesh m = marching_cubes(sample_field([](const Vec3& p) { return p.norm() - 0.3; }, n));
    INFO("n = " << n);
    CHECK(is_edge_manifold_closed(m));
    const double h = 1.0 / (n - 1);
    for (const Vec3& v : m.vertices) REQUIRE(std::abs(v.norm() - 0.3) < std::sqrt(3.0) * h);
  }
}

TEST_CASE("random fields give closed meshes (face-consistent table)") {
  // Property: with a positive border every component closes up, ambiguous faces included.
  for (std::uint64_t seed = 1; seed <= 300; ++seed) {
    Rng rng(seed);
    FieldGrid g;
    g.n = 7;
    g.values.resize(7 * 7 * 7);
    for (int k = 0; k < 7; ++k)
      for (int j = 0; j < 7; ++j)
        for (int i = 0; i < 7; ++i) {
          const bool border = i == 0 || j == 0 || k == 0 || i == 6 || j == 6 || k == 6;
          g.values[g.index(i, j, k)] = border ? 1.0 : rng.uniform(-1, 1);
        }
    const TriMesh m = marching_cubes(g);
    INFO("seed " << seed);
    REQUIRE_FALSE(m.empty());
    REQUIRE(is_edge_manifold_closed(m));
  }
}

TEST_CASE("no sign change gives an empty mesh; zeros count as positive") {
  CHECK(marching_cubes(sample_field([](const Vec3&) { return 1.0; }, 8)).empty());
  CHECK(marching_cubes(sample_field([](const Vec3&) { return 0.0; }, 8)).empty());
  const TriMesh inside = marching_cubes(sample_field([](const Vec3&) { return -1.0; }, 8));
  CHECK(inside.empty());

  FieldGrid bad;
  bad.n = 2;
  bad.values = {1, 1, 1, 1, 1, 1, 1, std::numeric_limits<double>::infinity()};
  CHECK_THROWS_AS(marching_cubes(bad), Error);
}

TEST_CASE("fused sampling with zero maps equals sampling the base") {
  DisentangledField f = DisentangledField::create(Camera::front(), 8, 16, 0.05, 0.0);
  f.base = BaseField::from_function(8, [](const Vec3& p) { return p.norm() - 0.3; });
  const FieldGrid fused = sample_fused(f, 20);
  const FieldGrid base = sample_field([&](const Vec3& p) { return f.base.query(p); }, 20);
  CHECK(fused.values == base.values);
}
