#include "d2im/fitting.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>

namespace d2im {

std::string to_string(Ablation a) {
  switch (a) {
    case Ablation::full: return "full";
    case Ablation::no_lap: return "no_lap";
    case Ablation::no_back: return "no_back";
    case Ablation::baseline: return "baseline";
  }
  return "full";
}

Ablation ablation_from_string(const std::string& name) {
  if (name == "full") return Ablation::full;
  if (name == "no_lap") return Ablation::no_lap;
  if (name == "no_back") return Ablation::no_back;
  if (name == "baseline") return Ablation::baseline;
  throw UsageError("unknown ablation arm '" + name + "'");
}

void FitConfig::validate() const {
  require(iterations > 0, "fit: iterations must be positive");
  require(batch_size >= 2 && batch_size % 2 == 0, "fit: batch_size must be even and positive");
  require(learning_rate > 0.0, "fit: learning_rate must be positive");
  require(lambda_lap >= 0.0, "fit: lambda_lap must be non-negative");
  require(delta > 0.0, "fit: delta must be positive");
  require(sample_count >= static_cast<std::size_t>(batch_size), "fit: sample_count must cover one batch");
  require(near_band > 0.0 && near_band <= 0.2, "fit: near_band must be in (0, 0.2]");
  require(density_radius > 0.0, "fit: density_radius must be positive");
  require(base_resolution >= 2 && map_resolution >= 4, "fit: grid resolutions too small");
  require(classify_step > 0.0, "fit: classify_step must be positive");
  require(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0 && epsilon > 0.0,
          "fit: invalid Adam parameters");
}

LossReport evaluate_objective(const DisentangledField& field, const SampleBatch& batch,
                              const GtLaplacianMap& gtl, const FitConfig& cfg, Gradients* grad) {
  require(batch.size() > 0, "evaluate_objective: empty batch");
  require(batch.front_mask.size() == batch.size(), "evaluate_objective: batch has no front mask");
  if (grad) {
    grad->base.assign(field.base.values().size(), 0.0);
    grad->front.assign(field.front.values().size(), 0.0);
    grad->back.assign(field.back.values().size(), 0.0);
  }
  const double inv_m = 1.0 / static_cast<double>(batch.size());
  const Camera& cam = field.camera;

  if (cfg.ablation == Ablation::baseline) {
    double l1 = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const auto taps = field.base.taps(batch.points[i]);
      double f = 0.0;
      for (const auto& t : taps) f += t.weight * field.base.values()[t.index];
      const double r = f - batch.values[i];
      l1 += std::abs(r);
      if (grad && r != 0.0) {
        const double g = (r > 0.0 ? 1.0 : -1.0) * inv_m;
        for (const auto& t : taps) grad->base[t.index] += g * t.weight;
      }
    }
    return LossReport::make(0.0, l1 * inv_m, 0.0, 0.0);
  }

  const bool use_back = cfg.ablation != Ablation::no_back;
  const bool use_lap = cfg.ablation != Ablation::no_lap;
  const double lambda = use_lap ? cfg.lambda_lap : 0.0;

  double l2 = 0.0;
  double l1 = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Vec3& p = batch.points[i];
    const bool is_front = batch.front_mask[i] != 0;
    const auto base_taps = field.base.taps(p);
    double fb = 0.0;
    for (const auto& t : base_taps) fb += t.weight * field.base.values()[t.index];

    const DisplacementMap* map = is_front ? &field.front : (use_back ? &field.back : nullptr);
    const Vec2 u = cam.project(p);
    std::array<Tap, 4> map_taps{};
    double fd = 0.0;
    if (map) {
      map_taps = map->taps(u);
      for (const auto& t : map_taps) fd += t.weight * map->values()[t.index];
    }

    const double rb = fb - batch.values[i];
    const double rs = fb + fd - batch.values[i];
    l2 += rb * rb;
    l1 += std::abs(rs);
    if (!grad) {
      continue;
    }
    const double gb = 2.0 * rb * inv_m;
    const double gs = rs > 0.0 ? inv_m : (rs < 0.0 ? -inv_m : 0.0);
    for (const auto& t : base_taps) grad->base[t.index] += (gb + gs) * t.weight;
    if (map) {
      auto& target = is_front ? grad->front : grad->back;
      for (const auto& t : map_taps) target[t.index] += gs * t.weight;
    }
  }

  // Laplacian term over the usable front points.
  const double scale = cfg.rescale_lap ? cam.pixel_scale * cam.pixel_scale : 1.0;
  double lap_sum = 0.0;
  std::size_t lap_count = 0;
  struct LapTerm {
    std::vector<Tap> taps;
    double residual;
  };
  std::vector<LapTerm> terms;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (!batch.front_mask[i]) {
      continue;
    }
    const Vec2 u = cam.project(batch.points[i]);
    if (!field.front.stencil_valid(u)) {
      continue;
    }
    const auto target = gtl.sample(u);
    if (!target) {
      continue;
    }
    auto taps = field.front.laplacian_taps(u);
    double lap = 0.0;
    for (const auto& t : taps) lap += t.weight * field.front.values()[t.index];
    const double r = scale * (lap - *target);
    lap_sum += r * r;
    ++lap_count;
    if (grad && lambda != 0.0) {
      terms.push_back({std::move(taps), r});
    }
  }
  const double l_lap = lap_count > 0 ? lap_sum / static_cast<double>(lap_count) : 0.0;
  if (grad && lambda != 0.0 && lap_count > 0) {
    const double coeff = lambda * 2.0 * scale / static_cast<double>(lap_count);
    for (const auto& term : terms) {
      for (const auto& t : term.taps) grad->front[t.index] += coeff * term.residual * t.weight;
    }
  }
  return LossReport::make(l2 * inv_m, l1 * inv_m, l_lap, lambda);
}

Gradients analytic_gradients(const DisentangledField& field, const SampleBatch& batch,
                             const GtLaplacianMap& gtl, const FitConfig& cfg) {
  Gradients g;
  evaluate_objective(field, batch, gtl, cfg, &g);
  return g;
}

FitInputs prepare_fit_inputs(const TriMesh& mesh, const Camera& camera, const FitConfig& cfg) {
  cfg.validate();
  camera.validate();
  FitInputs in;
  in.sdf = std::make_shared<const MeshSdf>(mesh);
  in.camera = camera;
  in.samples = compute_density_weights(
      build_sample_set(*in.sdf, cfg.sample_count, cfg.near_band, cfg.seed), cfg.density_radius);
  const ScalarField oracle = [sdf = in.sdf](const Vec3& p) { return sdf->signed_distance(p); };
  in.front.resize(in.samples.size());
  for (std::size_t i = 0; i < in.samples.size(); ++i) {
    in.front[i] = classify_front(in.samples.points[i], oracle, camera, cfg.delta, cfg.classify_step);
  }
  in.normals = render_normal_map(*in.sdf, camera);
  in.gtl = gt_laplacian(projected_gradient(in.normals, camera));
  return in;
}

namespace {

struct Adam {
  std::vector<double> m;
  std::vector<double> v;
  std::vector<std::uint32_t> steps;

  explicit Adam(std::size_t n) : m(n, 0.0), v(n, 0.0), steps(n, 0) {}

  // Moments advance only for parameters with a nonzero gradient, each with its
  // own bias-correction step count.
  void step(std::vector<double>& params, const std::vector<double>& grad, const FitConfig& cfg) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (grad[i] == 0.0) {
        continue;
      }
      const auto t = static_cast<double>(++steps[i]);
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grad[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
      const double mhat = m[i] / (1.0 - std::pow(cfg.beta1, t));
      const double vhat = v[i] / (1.0 - std::pow(cfg.beta2, t));
      params[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.epsilon);
    }
  }
};

} // namespace

FitTrace fit(const FitInputs& inputs, const FitConfig& cfg) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();

  FitTrace trace;
  trace.field = DisentangledField::create(inputs.camera, cfg.base_resolution, cfg.map_resolution,
                                          cfg.delta, 0.5);
  DisentangledField& field = trace.field;

  SampledSdf uniform;
  const SampledSdf* pool = &inputs.samples;
  if (cfg.ablation == Ablation::baseline) {
    uniform = inputs.samples;
    uniform.weights.assign(uniform.size(), 1.0);
    pool = &uniform;
  }

  const bool train_front = cfg.ablation != Ablation::baseline;
  const bool train_back = cfg.ablation == Ablation::full || cfg.ablation == Ablation::no_lap;

  Adam adam_base(field.base.values().size());
  Adam adam_front(field.front.values().size());
  Adam adam_back(field.back.values().size());
  Gradients grad;
  Rng rng(Rng::derive(cfg.seed, 0x62617463ULL));
  trace.history.reserve(static_cast<std::size_t>(cfg.iterations));
  for (int it = 0; it < cfg.iterations; ++it) {
    const SampleBatch batch = draw_batch(*pool, static_cast<std::size_t>(cfg.batch_size), cfg.delta,
                                         inputs.front, rng);
    trace.history.push_back(evaluate_objective(field, batch, inputs.gtl, cfg, &grad));
    adam_base.step(field.base.values(), grad.base, cfg);
    if (train_front) {
      adam_front.step(field.front.values(), grad.front, cfg);
    }
    if (train_back) {
      adam_back.step(field.back.values(), grad.back, cfg);
    }
  }
  trace.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return trace;
}

FitTrace fit(const TriMesh& mesh, const Camera& camera, const FitConfig& cfg) {
  return fit(prepare_fit_inputs(mesh, camera, cfg), cfg);
}

std::string loss_history_csv(const std::vector<LossReport>& history) {
  std::string out = "iteration,l_base,l_sdf,l_lap,total\n";
  char buf[160];
  for (std::size_t i = 0; i < history.size(); ++i) {
    const auto& r = history[i];
    const int n = std::snprintf(buf, sizeof(buf), "%zu,%.9g,%.9g,%.9g,%.9g\n", i, r.l_base, r.l_sdf,
                                r.l_lap, r.total);
    out.append(buf, static_cast<std::size_t>(n));
  }
  return out;
}

} // namespace d2im
