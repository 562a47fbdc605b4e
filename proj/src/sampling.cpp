#include "d2im/sampling.hpp"

#include "d2im/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace d2im {

void SampledSdf::validate() const {
  const std::size_t n = points.size();
  if (values.size() != n || weights.size() != n || sides.size() != n) {
    throw Error("sample arrays have mismatched lengths");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if ((values[i] < 0.0) != (sides[i] == Side::interior)) {
      throw Error("sample " + std::to_string(i) + " has a side label contradicting its value");
    }
    if (!(weights[i] >= 0.0)) {
      throw Error("sample " + std::to_string(i) + " has a negative weight");
    }
  }
}

SampledSdf build_sample_set(const MeshSdf& sdf, std::size_t n_total, double near_band,
                            std::uint64_t seed) {
  require(n_total >= 2, "build_sample_set: n_total must be at least 2");
  require(near_band > 0.0 && near_band <= 0.2, "build_sample_set: near_band must be in (0, 0.2]");
  const TriMesh& mesh = sdf.mesh();

  std::vector<double> cumulative(mesh.triangle_count());
  double total = 0.0;
  for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
    total += mesh.face_area(t);
    cumulative[t] = total;
  }
  if (!(total > 0.0)) {
    throw Error("build_sample_set: mesh has zero surface area");
  }

  Rng rng(seed);
  const std::size_t n_near = n_total * 4 / 5;
  const double sigma = 0.5 * near_band;
  SampledSdf out;
  out.points.reserve(n_total);
  for (std::size_t i = 0; i < n_near; ++i) {
    const double pick = rng.uniform() * total;
    auto t = static_cast<std::size_t>(
        std::upper_bound(cumulative.begin(), cumulative.end(), pick) - cumulative.begin());
    t = std::min(t, mesh.triangle_count() - 1);
    const auto& tri = mesh.triangles[t];
    const double r1 = std::sqrt(rng.uniform());
    const double r2 = rng.uniform();
    const Vec3 surface = (1.0 - r1) * mesh.vertices[tri[0]] + r1 * (1.0 - r2) * mesh.vertices[tri[1]] +
                         r1 * r2 * mesh.vertices[tri[2]];
    const double offset = std::clamp(sigma * rng.normal(), -near_band, near_band);
    out.points.push_back(surface + offset * mesh.face_normal(t));
  }
  while (out.points.size() < n_total) {
    out.points.emplace_back(rng.uniform(kBoxMin, kBoxMax), rng.uniform(kBoxMin, kBoxMax),
                            rng.uniform(kBoxMin, kBoxMax));
  }

  out.values.resize(n_total);
  parallel_for(n_total, [&](std::size_t i) { out.values[i] = sdf.signed_distance(out.points[i]); });
  out.sides.resize(n_total);
  for (std::size_t i = 0; i < n_total; ++i) {
    out.sides[i] = out.values[i] < 0.0 ? Side::interior : Side::exterior;
  }
  out.weights.assign(n_total, 1.0);
  return out;
}

namespace {

struct CellKey {
  std::int64_t x, y, z;
  bool operator==(const CellKey&) const = default;
};

struct CellHash {
  std::size_t operator()(const CellKey& k) const {
    std::uint64_t h = static_cast<std::uint64_t>(k.x) * 73856093ULL;
    h ^= static_cast<std::uint64_t>(k.y) * 19349663ULL;
    h ^= static_cast<std::uint64_t>(k.z) * 83492791ULL;
    return static_cast<std::size_t>(h);
  }
};

} // namespace

SampledSdf compute_density_weights(SampledSdf samples, double radius) {
  require(radius > 0.0, "compute_density_weights: radius must be positive");
  const std::size_t n = samples.size();
  if (samples.values.size() != n || samples.sides.size() != n) {
    throw UsageError("compute_density_weights: values and sides must be filled");
  }
  auto cell_of = [radius](const Vec3& p) {
    return CellKey{static_cast<std::int64_t>(std::floor(p.x() / radius)),
                   static_cast<std::int64_t>(std::floor(p.y() / radius)),
                   static_cast<std::int64_t>(std::floor(p.z() / radius))};
  };
  std::unordered_map<CellKey, std::vector<std::size_t>, CellHash> grid;
  grid.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    grid[cell_of(samples.points[i])].push_back(i);
  }
  const double r2 = radius * radius;
  samples.weights.assign(n, 0.0);
  parallel_for(n, [&](std::size_t i) {
    const Vec3& p = samples.points[i];
    const CellKey c = cell_of(p);
    std::size_t count = 0;
    for (std::int64_t dz = -1; dz <= 1; ++dz) {
      for (std::int64_t dy = -1; dy <= 1; ++dy) {
        for (std::int64_t dx = -1; dx <= 1; ++dx) {
          const auto it = grid.find({c.x + dx, c.y + dy, c.z + dz});
          if (it == grid.end()) {
            continue;
          }
          for (auto j : it->second) {
            if (j != i && samples.sides[j] == samples.sides[i] &&
                (samples.points[j] - p).squaredNorm() <= r2) {
              ++count;
            }
          }
        }
      }
    }
    samples.weights[i] = static_cast<double>(count);
  });
  return samples;
}

std::vector<double> brute_force_density(const SampledSdf& samples, double radius) {
  const double r2 = radius * radius;
  std::vector<double> counts(samples.size(), 0.0);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    for (std::size_t j = 0; j < samples.size(); ++j) {
      if (i != j && samples.sides[i] == samples.sides[j] &&
          (samples.points[i] - samples.points[j]).squaredNorm() <= r2) {
        counts[i] += 1.0;
      }
    }
  }
  return counts;
}

std::vector<std::size_t> draw_indices(const SampledSdf& samples, std::size_t m, Rng& rng) {
  require(m >= 2 && m % 2 == 0, "draw_batch: batch size must be even and positive");
  const std::size_t half = m / 2;
  std::vector<std::pair<double, std::size_t>> keys[2];
  for (std::size_t i = 0; i < samples.size(); ++i) {
    // One variate per row regardless of weight keeps streams aligned across weightings.
    const double u = rng.uniform_open0();
    const double w = samples.weights[i];
    if (w > 0.0) {
      keys[samples.sides[i] == Side::interior].emplace_back(std::log(u) / w, i);
    }
  }
  std::vector<std::size_t> rows;
  rows.reserve(m);
  for (int side = 0; side < 2; ++side) {
    auto& k = keys[side];
    if (k.size() < half) {
      throw Error(std::string("draw_batch: only ") + std::to_string(k.size()) + " positive-weight " +
                  (side == 1 ? "interior" : "exterior") + " samples, need " + std::to_string(half));
    }
    // Largest keys win; ties broken by row for determinism.
    auto greater = [](const auto& a, const auto& b) {
      return a.first > b.first || (a.first == b.first && a.second < b.second);
    };
    std::nth_element(k.begin(), k.begin() + static_cast<std::ptrdiff_t>(half) - 1, k.end(), greater);
    for (std::size_t j = 0; j < half; ++j) {
      rows.push_back(k[j].second);
    }
  }
  std::sort(rows.begin(), rows.end());
  return rows;
}

namespace {

SampleBatch gather(const SampledSdf& samples, std::vector<std::size_t> rows) {
  SampleBatch batch;
  batch.points.reserve(rows.size());
  batch.values.reserve(rows.size());
  for (auto r : rows) {
    batch.points.push_back(samples.points[r]);
    batch.values.push_back(samples.values[r]);
  }
  batch.indices = std::move(rows);
  return batch;
}

} // namespace

SampleBatch draw_batch(const SampledSdf& samples, std::size_t m, double delta,
                       const FrontClassifier& classifier, Rng& rng) {
  SampleBatch batch = gather(samples, draw_indices(samples, m, rng));
  batch.front_mask.resize(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    batch.front_mask[i] = std::abs(batch.values[i]) < delta && classifier(batch.points[i]);
  }
  return batch;
}

SampleBatch draw_batch(const SampledSdf& samples, std::size_t m, double delta,
                       const FrontClassifier& classifier, std::uint64_t seed) {
  Rng rng(seed);
  return draw_batch(samples, m, delta, classifier, rng);
}

SampleBatch draw_batch(const SampledSdf& samples, std::size_t m, double delta,
                       std::span<const std::uint8_t> front_rows, Rng& rng) {
  require(front_rows.size() == samples.size(), "draw_batch: one classification per sample row");
  SampleBatch batch = gather(samples, draw_indices(samples, m, rng));
  batch.front_mask.resize(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    batch.front_mask[i] = std::abs(batch.values[i]) < delta && front_rows[batch.indices[i]] != 0;
  }
  return batch;
}

} // namespace d2im
