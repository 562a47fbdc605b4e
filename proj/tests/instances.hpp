#pragma once

#include "d2im/fitting.hpp"
#include "d2im/rng.hpp"

#include <algorithm>
#include <cmath>

namespace d2im::test {

/// A small random fitting problem: 4^3 base grid, 8x8 maps, 16-point batch,
/// 32x32 camera and a random ground-truth Laplacian image.
struct Instance {
  DisentangledField field;
  SampleBatch batch;
  GtLaplacianMap gtl;
  FitConfig cfg;
};

inline Instance random_instance(std::uint64_t seed, Ablation arm) {
  Rng rng(seed);
  Instance in;
  const Camera cam = Camera::front(32);
  in.field = DisentangledField::create(cam, 4, 8, 0.05, 0.0);
  for (auto& v : in.field.base.values()) v = rng.uniform(-0.3, 0.3);
  for (auto& v : in.field.front.values()) v = rng.uniform(-0.05, 0.05);
  for (auto& v : in.field.back.values()) v = rng.uniform(-0.05, 0.05);
  in.gtl.width = in.gtl.height = 32;
  in.gtl.data.resize(32 * 32);
  in.gtl.mask.resize(32 * 32);
  for (std::size_t i = 0; i < in.gtl.data.size(); ++i) {
    in.gtl.data[i] = rng.uniform(-1e-3, 1e-3);
    in.gtl.mask[i] = rng.uniform() < 0.9;
  }
  for (std::size_t i = 0; i < 16; ++i) {
    in.batch.points.emplace_back(rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3), rng.uniform(-0.5, 0.5));
    in.batch.values.push_back(rng.uniform(-0.2, 0.2));
    in.batch.front_mask.push_back(rng.uniform() < 0.6);
    in.batch.indices.push_back(i);
  }
  in.cfg.ablation = arm;
  in.cfg.lambda_lap = 0.5;
  return in;
}

/// Largest relative deviation between analytic_gradients and central
/// differences of the total loss with step h, over every parameter.
inline double max_gradient_error(const Instance& in, double h = 1e-4) {
  const Gradients g = analytic_gradients(in.field, in.batch, in.gtl, in.cfg);
  double worst = 0.0;
  auto probe = [&](auto select, const std::vector<double>& analytic) {
    DisentangledField f = in.field;
    std::vector<double>& values = select(f);
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double keep = values[i];
      values[i] = keep + h;
      const double up = evaluate_objective(f, in.batch, in.gtl, in.cfg, nullptr).total;
      values[i] = keep - h;
      const double down = evaluate_objective(f, in.batch, in.gtl, in.cfg, nullptr).total;
      values[i] = keep;
      const double numeric = (up - down) / (2.0 * h);
      const double scale = std::max({std::abs(numeric), std::abs(analytic[i]), 1e-6});
      worst = std::max(worst, std::abs(numeric - analytic[i]) / scale);
    }
  };
  probe([](DisentangledField& f) -> std::vector<double>& { return f.base.values(); }, g.base);
  probe([](DisentangledField& f) -> std::vector<double>& { return f.front.values(); }, g.front);
  probe([](DisentangledField& f) -> std::vector<double>& { return f.back.values(); }, g.back);
  return worst;
}

} // namespace d2im::test
