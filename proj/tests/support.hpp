#pragma once

#include "d2im/rng.hpp"

#include <doctest.h>

#include <vector>

namespace d2im::test {

inline Vec3 random_point(Rng& rng, double lo = -0.5, double hi = 0.5) {
  return {rng.uniform(lo, hi), rng.uniform(lo, hi), rng.uniform(lo, hi)};
}

inline std::vector<Vec3> random_points(std::size_t n, std::uint64_t seed, double lo = -0.5, double hi = 0.5) {
  Rng rng(seed);
  std::vector<Vec3> pts(n);
  for (auto& p : pts) p = random_point(rng, lo, hi);
  return pts;
}

/// Exact signed distance to the axis-aligned box [-h, h]^3.
inline double box_sdf(const Vec3& p, double h) {
  const Vec3 q = p.cwiseAbs() - Vec3::Constant(h);
  return q.cwiseMax(0.0).norm() + std::min(q.maxCoeff(), 0.0);
}

} // namespace d2im::test
