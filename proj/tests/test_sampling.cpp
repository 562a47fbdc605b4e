#include "d2im/fixtures.hpp"
#include "d2im/sampling.hpp"
#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <set>

using namespace d2im;

namespace {

const MeshSdf& cube_sdf() {
  static const MeshSdf sdf(fixtures::box(Vec3::Constant(-0.25), Vec3::Constant(0.25)));
  return sdf;
}

} // namespace

TEST_CASE("sample set: sizes, labels and the near-surface share") {
  const SampledSdf s = build_sample_set(cube_sdf(), 5000, 0.05, 1);
  REQUIRE(s.size() == 5000);
  CHECK_NOTHROW(s.validate());
  std::size_t near = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    REQUIRE(s.values[i] == doctest::Approx(test::box_sdf(s.points[i], 0.25)).epsilon(1e-9));
    REQUIRE((s.sides[i] == Side::interior) == (s.values[i] < 0.0));
    REQUIRE((s.points[i].array().abs() <= 0.5).all());
    near += std::abs(s.values[i]) <= 0.05 + 1e-12;
  }
  // 80% are surface samples pushed at most near_band along the face normal.
  CHECK(near >= 4000);
}

TEST_CASE("sample set is a pure function of the seed") {
  const SampledSdf a = build_sample_set(cube_sdf(), 1000, 0.05, 9);
  const SampledSdf b = build_sample_set(cube_sdf(), 1000, 0.05, 9);
  const SampledSdf c = build_sample_set(cube_sdf(), 1000, 0.05, 10);
  CHECK(a.points == b.points);
  CHECK(a.values == b.values);
  CHECK(a.points != c.points);
}

TEST_CASE("validate rejects inconsistent sample sets") {
  SampledSdf s = build_sample_set(cube_sdf(), 100, 0.05, 2);
  s.weights.assign(s.size(), 1.0);
  CHECK_NOTHROW(s.validate());
  SampledSdf short_values = s;
  short_values.values.pop_back();
  CHECK_THROWS_AS(short_values.validate(), Error);
  SampledSdf wrong_side = s;
  wrong_side.sides[0] = wrong_side.values[0] < 0 ? Side::exterior : Side::interior;
  CHECK_THROWS_AS(wrong_side.validate(), Error);
}

TEST_CASE("density weights equal the brute-force same-side neighbor count") {
  // Property over several seeds and radii, including radii larger than the hash cell.
  for (std::uint64_t seed : {3u, 4u, 5u}) {
    for (double radius : {0.02, 0.05, 0.13}) {
      const SampledSdf s = compute_density_weights(build_sample_set(cube_sdf(), 1500, 0.05, seed), radius);
      REQUIRE(s.weights == brute_force_density(s, radius));
    }
  }
}

TEST_CASE("density weight of an isolated configuration") {
  SampledSdf s;
  s.points = {Vec3(0, 0, 0), Vec3(0.01, 0, 0), Vec3(0.2, 0, 0), Vec3(0.005, 0, 0)};
  s.values = {-0.1, -0.1, -0.1, 0.1};
  s.sides = {Side::interior, Side::interior, Side::interior, Side::exterior};
  s.weights.assign(4, 0.0);
  const SampledSdf w = compute_density_weights(s, 0.05);
  // The exterior point is close to the first two but on the other side.
  CHECK(w.weights == std::vector<double>{1, 1, 0, 0});
}

TEST_CASE("weighted draws are half interior, half exterior, sorted and distinct") {
  const SampledSdf s = compute_density_weights(build_sample_set(cube_sdf(), 4000, 0.05, 6), 0.05);
  Rng rng(12);
  for (int round = 0; round < 20; ++round) {
    const auto rows = draw_indices(s, 256, rng);
    REQUIRE(rows.size() == 256);
    REQUIRE(std::is_sorted(rows.begin(), rows.end()));
    REQUIRE(std::set<std::size_t>(rows.begin(), rows.end()).size() == rows.size());
    std::size_t interior = 0;
    for (auto r : rows) interior += s.sides[r] == Side::interior;
    REQUIRE(interior == 128);
  }
}

TEST_CASE("draw_batch flags front points by classifier and delta") {
  const SampledSdf s = compute_density_weights(build_sample_set(cube_sdf(), 2000, 0.05, 8), 0.05);
  const FrontClassifier up = [](const Vec3& p) { return p.z() > 0.0; };
  const SampleBatch b = draw_batch(s, 200, 0.05, up, 4);
  REQUIRE(b.size() == 200);
  for (std::size_t i = 0; i < b.size(); ++i) {
    REQUIRE(b.points[i] == s.points[b.indices[i]]);
    REQUIRE(b.values[i] == s.values[b.indices[i]]);
    const bool expected = b.points[i].z() > 0.0 && std::abs(b.values[i]) < 0.05;
    REQUIRE((b.front_mask[i] != 0) == expected);
  }
  const SampleBatch again = draw_batch(s, 200, 0.05, up, 4);
  CHECK(again.indices == b.indices);
}

TEST_CASE("odd or oversized batch requests are rejected") {
  const SampledSdf s = compute_density_weights(build_sample_set(cube_sdf(), 100, 0.05, 8), 0.05);
  Rng rng(1);
  CHECK_THROWS_AS(draw_indices(s, 7, rng), UsageError);
  CHECK_THROWS_AS(draw_indices(s, 1000, rng), Error);
}
