#include "d2im/fitting.hpp"
#include "d2im/fixtures.hpp"
#include "instances.hpp"
#include "support.hpp"

#include <cmath>

using namespace d2im;

TEST_CASE("fit configuration preconditions") {
  FitConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.iterations = 0;
  CHECK_THROWS_AS(cfg.validate(), UsageError);
  cfg = {};
  cfg.batch_size = 7;
  CHECK_THROWS_AS(cfg.validate(), UsageError);
  cfg = {};
  cfg.learning_rate = 0.0;
  CHECK_THROWS_AS(cfg.validate(), UsageError);

  FitConfig zero;
  zero.iterations = 0;
  CHECK_THROWS_AS(fit(fixtures::icosphere(), Camera::front(), zero), UsageError);
}

TEST_CASE("ablation names round-trip") {
  for (Ablation a : {Ablation::full, Ablation::no_lap, Ablation::no_back, Ablation::baseline}) {
    CHECK(ablation_from_string(to_string(a)) == a);
  }
  CHECK_THROWS_AS(ablation_from_string("nolap"), UsageError);
}

TEST_CASE("one point on a lattice node: the base term contributes 2 (f_B - F)") {
  DisentangledField f = DisentangledField::create(Camera::front(32), 4, 8, 0.05, 0.0);
  for (auto& v : f.base.values()) v = 0.3;
  const std::size_t node = f.base.index(1, 2, 1);
  f.base.values()[node] = 0.7;
  SampleBatch b;
  b.points = {f.base.node(1, 2, 1)};
  b.values = {0.2};
  b.front_mask = {0};
  b.indices = {0};
  GtLaplacianMap gtl;
  FitConfig cfg;
  cfg.ablation = Ablation::no_back; // back points then carry no displacement: L_sdf adds sign(r)
  const Gradients g = analytic_gradients(f, b, gtl, cfg);
  const double r = 0.7 - 0.2;
  CHECK(g.base[node] - 1.0 == doctest::Approx(2.0 * r).epsilon(1e-12));
  for (std::size_t i = 0; i < g.base.size(); ++i) {
    if (i != node) REQUIRE(std::abs(g.base[i]) < 1e-12);
  }
  for (double v : g.front) REQUIRE(v == 0.0);
  for (double v : g.back) REQUIRE(v == 0.0);
}

TEST_CASE("zero residuals give zero gradients in every arm") {
  const Camera cam = Camera::front(32);
  DisentangledField f = DisentangledField::create(cam, 5, 8, 0.05, 0.0);
  f.base = BaseField::from_function(5, [](const Vec3& p) { return 0.3 * p.x() - 0.2 * p.z() + 0.05; });
  GtLaplacianMap gtl;
  gtl.width = gtl.height = 32;
  gtl.data.assign(32 * 32, 0.0);
  gtl.mask.assign(32 * 32, 1);
  SampleBatch b;
  Rng rng(4);
  for (std::size_t i = 0; i < 32; ++i) {
    const Vec3 p = test::random_point(rng, -0.25, 0.25);
    b.points.push_back(p);
    b.values.push_back(f.base.query(p));
    b.front_mask.push_back(i % 2);
    b.indices.push_back(i);
  }
  for (Ablation arm : {Ablation::full, Ablation::no_lap, Ablation::no_back, Ablation::baseline}) {
    FitConfig cfg;
    cfg.ablation = arm;
    const Gradients g = analytic_gradients(f, b, gtl, cfg);
    for (double v : g.base) REQUIRE(v == 0.0);
    for (double v : g.front) REQUIRE(v == 0.0);
    for (double v : g.back) REQUIRE(v == 0.0);
    CHECK(evaluate_objective(f, b, gtl, cfg, nullptr).total == 0.0);
  }
}

TEST_CASE("analytic gradients match central differences on random small instances") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    for (Ablation arm : {Ablation::full, Ablation::no_lap, Ablation::no_back, Ablation::baseline}) {
      const auto in = test::random_instance(seed, arm);
      INFO("seed " << seed << " arm " << to_string(arm));
      REQUIRE(test::max_gradient_error(in) < 1e-4);
    }
  }
}

TEST_CASE("evaluate_objective reports the same losses with and without gradients") {
  const auto in = test::random_instance(99, Ablation::full);
  Gradients g;
  const LossReport a = evaluate_objective(in.field, in.batch, in.gtl, in.cfg, &g);
  const LossReport b = evaluate_objective(in.field, in.batch, in.gtl, in.cfg, nullptr);
  CHECK(a.total == b.total);
  CHECK(a.total == doctest::Approx(a.l_base + a.l_sdf + in.cfg.lambda_lap * a.l_lap));
  CHECK(a.l_base == doctest::Approx(loss_base(in.field.base, in.batch)));
  CHECK(a.l_sdf == doctest::Approx(loss_sdf(in.field, in.batch)));
}

TEST_CASE("fitting is deterministic and shrinks the data terms") {
  FitConfig cfg;
  cfg.iterations = 300;
  cfg.sample_count = 8192;
  cfg.seed = 5;
  const TriMesh sphere = fixtures::icosphere();
  const FitInputs inputs = prepare_fit_inputs(sphere, Camera::front(), cfg);
  const FitTrace a = fit(inputs, cfg);
  const FitTrace b = fit(inputs, cfg);
  REQUIRE(a.history.size() == 300);
  CHECK(a.field == b.field);
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    REQUIRE(a.history[i].total == b.history[i].total);
  }
  CHECK(a.history.back().l_base < 0.1 * a.history.front().l_base);
  CHECK(a.history.back().l_sdf < 0.1 * a.history.front().l_sdf);

  FitConfig other = cfg;
  other.seed = 6;
  CHECK_FALSE(fit(inputs, other).field == a.field);
}

TEST_CASE("prepared inputs carry classifications from the ground-truth SDF") {
  FitConfig cfg;
  cfg.sample_count = 4096;
  const FitInputs in = prepare_fit_inputs(fixtures::icosphere(), Camera::front(), cfg);
  REQUIRE(in.front.size() == in.samples.size());
  std::size_t fronts = 0;
  for (std::size_t i = 0; i < in.samples.size(); ++i) {
    if (in.front[i]) {
      ++fronts;
      REQUIRE(std::abs(in.samples.values[i]) < cfg.delta);
      // Facets of the icosphere tilt the SDF gradient, so the oracle is the
      // central-difference gradient itself rather than the sign of z.
      const Vec3 p = in.samples.points[i];
      const double h = cfg.classify_step;
      const double gz = (*in.sdf)(p + Vec3(0, 0, h)) - (*in.sdf)(p - Vec3(0, 0, h));
      REQUIRE(gz > 0.0);
      REQUIRE(p.z() > -0.02);
    }
  }
  CHECK(fronts > 0);
}

TEST_CASE("loss history CSV layout") {
  const std::string csv = loss_history_csv({LossReport::make(0.5, 0.25, 2.0, 1.0)});
  CHECK(csv == "iteration,l_base,l_sdf,l_lap,total\n0,0.5,0.25,2,2.75\n");
}
