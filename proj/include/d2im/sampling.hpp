#pragma once

#include "d2im/geometry.hpp"
#include "d2im/rng.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace d2im {

enum class Side : std::uint8_t { exterior = 0, interior = 1 };

/// Ground-truth supervision: points with signed distances, sampling densities
/// and inside/outside labels. All arrays have the same length.
struct SampledSdf {
  std::vector<Vec3> points;
  std::vector<double> values;
  std::vector<double> weights;
  std::vector<Side> sides;

  std::size_t size() const { return points.size(); }
  /// Throws Error when the arrays disagree in length or a label contradicts its value.
  void validate() const;
};

struct SampleBatch {
  std::vector<Vec3> points;
  std::vector<double> values;
  std::vector<std::uint8_t> front_mask; // membership in P_F
  std::vector<std::size_t> indices;     // rows of the source SampledSdf

  std::size_t size() const { return points.size(); }
};

/// 80% area-uniform surface samples offset along the face normal by
/// N(0, near_band/2) clamped to +-near_band, 20% uniform in the box; each point
/// is labeled with the exact mesh SDF. Deterministic for a fixed seed.
SampledSdf build_sample_set(const MeshSdf& mesh, std::size_t n_total, double near_band,
                            std::uint64_t seed);

/// weights[i] = number of other same-side points within `radius` of points[i] (hash grid, exact).
SampledSdf compute_density_weights(SampledSdf samples, double radius);

/// Reference O(n^2) neighbor count, kept for tests and diagnostics.
std::vector<double> brute_force_density(const SampledSdf& samples, double radius);

/// Weighted sampling without replacement (Efraimidis-Spirakis keys) of
/// m/2 interior and m/2 exterior rows. Returned rows are sorted ascending.
std::vector<std::size_t> draw_indices(const SampledSdf& samples, std::size_t m, Rng& rng);

using FrontClassifier = std::function<bool(const Vec3&)>;

/// Draws a batch and flags front points: classifier(p) && |value| < delta.
SampleBatch draw_batch(const SampledSdf& samples, std::size_t m, double delta,
                       const FrontClassifier& classifier, Rng& rng);
SampleBatch draw_batch(const SampledSdf& samples, std::size_t m, double delta,
                       const FrontClassifier& classifier, std::uint64_t seed);
/// Same, with per-row classifications precomputed for the whole sample set.
SampleBatch draw_batch(const SampledSdf& samples, std::size_t m, double delta,
                       std::span<const std::uint8_t> front_rows, Rng& rng);

} // namespace d2im
