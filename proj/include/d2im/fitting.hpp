#pragma once

#include "d2im/fields.hpp"
#include "d2im/geometry.hpp"
#include "d2im/laplacian_loss.hpp"
#include "d2im/sampling.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace d2im {

/// Ablation arms. baseline: base grid only, L1 on the base output, uniform
/// sampling. no_back: front map only. no_lap: both maps without L_lap. full: everything.
enum class Ablation { full, no_lap, no_back, baseline };

std::string to_string(Ablation a);
Ablation ablation_from_string(const std::string& name);

struct FitConfig {
  int iterations = 2000;
  int batch_size = 2048;
  double learning_rate = 0.002;
  double lambda_lap = 1.0;
  double delta = 0.05;
  std::uint64_t seed = 0;
  Ablation ablation = Ablation::full;

  std::size_t sample_count = 32768;
  double near_band = 0.05;
  double density_radius = 0.05;
  int base_resolution = 16;
  int map_resolution = 64;
  bool rescale_lap = true;
  double classify_step = 1e-3;

  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const;
  bool operator==(const FitConfig&) const = default;
};

/// d(total loss)/d(parameter) for every base node and map pixel.
struct Gradients {
  std::vector<double> base;
  std::vector<double> front;
  std::vector<double> back;
};

/// Loss terms selected by cfg.ablation on one batch; fills `grad` when non-null.
/// Every field query is piecewise multilinear in the parameters, so the
/// gradients are scatters of interpolation weights.
LossReport evaluate_objective(const DisentangledField& field, const SampleBatch& batch,
                              const GtLaplacianMap& gtl, const FitConfig& cfg, Gradients* grad);

Gradients analytic_gradients(const DisentangledField& field, const SampleBatch& batch,
                             const GtLaplacianMap& gtl, const FitConfig& cfg);

/// Everything derived once per shape before the optimization loop.
struct FitInputs {
  std::shared_ptr<const MeshSdf> sdf;
  Camera camera;
  SampledSdf samples;              // density weights filled
  std::vector<std::uint8_t> front; // classify_front per sample row (ground-truth SDF)
  NormalMap normals;
  GtLaplacianMap gtl;
};

FitInputs prepare_fit_inputs(const TriMesh& mesh, const Camera& camera, const FitConfig& cfg);

struct FitTrace {
  std::vector<LossReport> history; // one entry per iteration, measured before its update
  DisentangledField field;
  double wall_time_seconds = 0.0;
};

FitTrace fit(const FitInputs& inputs, const FitConfig& cfg);
FitTrace fit(const TriMesh& mesh, const Camera& camera, const FitConfig& cfg);

/// "iteration,l_base,l_sdf,l_lap,total" rows.
std::string loss_history_csv(const std::vector<LossReport>& history);

} // namespace d2im
