#include "d2im/app.hpp"
#include "d2im/io.hpp"
#include "support.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace d2im;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("d2im_app_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Outcome {
  int code;
  std::string log;
  std::string err;
};

Outcome run(const std::string& verb, const app::RunConfig& c) {
  std::ostringstream log, err;
  const int code = app::run(verb, c, log, err);
  return {code, log.str(), err.str()};
}

} // namespace

TEST_CASE("run config round-trips through JSON") {
  const app::RunConfig defaults;
  CHECK(app::RunConfig::from_json(defaults.to_json()) == defaults);
  CHECK(app::RunConfig::from_json("{}") == defaults);

  app::RunConfig c;
  c.seed = 18446744073709551557ull;
  c.threads = 3;
  c.out = "somewhere";
  c.fit.iterations = 77;
  c.fit.learning_rate = 0.1 / 3.0;
  c.fit.ablation = Ablation::no_back;
  c.fit.rescale_lap = false;
  c.camera = Camera::rotated_y(0.7, 96);
  c.metrics.canny.sigma = 2.0 / 3.0;
  c.extract_resolution = 65;
  c.paths.fixture = "cube";
  c.paths.boxes = "b.json";
  const app::RunConfig back = app::RunConfig::from_json(c.to_json());
  CHECK(back == c);
  CHECK(back.to_json() == c.to_json());
}

TEST_CASE("run config rejects unknown keys, wrong types and invalid values") {
  for (const char* text : {
           R"({"sed": 1})",
           R"({"fit": {"iteration": 5}})",
           R"({"camera": {"fov": 1}})",
           R"({"metrics": {"canny": {}}})",
           R"({"extract": {"res": 3}})",
           R"({"paths": {"meshes": "x"}})",
           R"({"seed": -1})",
           R"({"seed": "7"})",
           R"({"fit": {"iterations": 2.5}})",
           R"({"fit": {"ablation": "nolap"}})",
           R"({"fit": {"batch_size": 3}})",
           R"({"camera": {"rotation": [[2,0,0],[0,1,0],[0,0,1]]}})",
           R"({"metrics": {"canny_low": 0.5, "canny_high": 0.2}})",
           R"({"extract": {"resolution": 1}})",
           R"([1, 2])",
           R"({"fit": )",
       }) {
    INFO(text);
    CHECK_THROWS_AS(app::RunConfig::from_json(text), UsageError);
  }
}

TEST_CASE("command-line overrides and section seeds") {
  app::RunConfig c = app::RunConfig::from_json(R"({"seed": 4, "out": "a"})");
  app::apply(c, {std::uint64_t{9}, std::nullopt, std::string("b")});
  CHECK(c.seed == 9);
  CHECK(c.out == "b");
  CHECK(c.threads == 1);
  CHECK(c.fit_config().seed == 9);
  CHECK(c.metric_params().seed == 9);
}

TEST_CASE("exit codes for usage errors") {
  app::RunConfig c;
  c.out = scratch("usage").string();
  CHECK(run("frobnicate", c).code == app::kUsageError);

  app::RunConfig missing = c;
  missing.paths.field = "/nonexistent/field.d2im";
  const Outcome o = run("extract", missing);
  CHECK(o.code == app::kUsageError);
  CHECK(o.err.find("paths.field") != std::string::npos);

  app::RunConfig no_input = c;
  CHECK(run("eval", no_input).code == app::kUsageError);

  app::RunConfig unwritable = c;
  unwritable.out = "/proc/d2im_cannot_write_here";
  const Outcome u = run("fixtures", unwritable);
  CHECK(u.code == app::kUsageError);
  CHECK(u.err.find("prepare output") != std::string::npos);
}

TEST_CASE("computation failures exit with code 1 and name the stage") {
  const fs::path dir = scratch("nan");
  fs::create_directories(dir);
  DisentangledField f = DisentangledField::create(Camera::front(), 4, 8, 0.05, 0.5);
  f.base.values()[21] = std::nan("");
  save_field(f, dir / "nan.d2im");
  app::RunConfig c;
  c.out = dir.string();
  c.paths.field = (dir / "nan.d2im").string();
  c.extract_resolution = 16;
  const Outcome o = run("extract", c);
  CHECK(o.code == app::kComputationError);
  CHECK(o.err.find("non-finite") != std::string::npos);
}

TEST_CASE("an input OBJ without faces is a usage error") {
  const fs::path dir = scratch("empty_obj");
  fs::create_directories(dir);
  write_text(dir / "empty.obj", "v 0 0 0\n");
  app::RunConfig c;
  c.out = dir.string();
  c.paths.gt = (dir / "empty.obj").string();
  c.paths.rec = c.paths.gt;
  CHECK(run("eval", c).code == app::kUsageError);
}

TEST_CASE("fixtures writes six watertight OBJ files") {
  app::RunConfig c;
  c.out = scratch("fixtures").string();
  REQUIRE(run("fixtures", c).code == app::kOk);
  int count = 0;
  for (const auto& entry : fs::directory_iterator(c.out)) {
    ++count;
    CHECK(is_edge_manifold_closed(load_obj(entry.path())));
  }
  CHECK(count == 6);
}

TEST_CASE("eval of a mesh against itself reports cd = 0 and iou = 1") {
  app::RunConfig c;
  c.out = scratch("eval").string();
  REQUIRE(run("fixtures", c).code == app::kOk);
  c.paths.gt = (fs::path(c.out) / "beveled_cube.obj").string();
  c.paths.rec = c.paths.gt;
  c.metrics.point_count = 4000;
  REQUIRE(run("eval", c).code == app::kOk);
  const auto j = nlohmann::json::parse(slurp(fs::path(c.out) / "metrics.json"));
  CHECK(j["cd"] == 0.0);
  CHECK(j["iou"] == 1.0);
}

TEST_CASE("extract on an all-positive field warns and succeeds") {
  const fs::path dir = scratch("extract");
  fs::create_directories(dir);
  save_field(DisentangledField::create(Camera::front(), 4, 8, 0.05, 0.5), dir / "pos.d2im");
  app::RunConfig c;
  c.out = dir.string();
  c.paths.field = (dir / "pos.d2im").string();
  c.extract_resolution = 16;
  const Outcome o = run("extract", c);
  CHECK(o.code == app::kOk);
  CHECK(o.log.find("warning") != std::string::npos);
  CHECK(fs::exists(dir / "mesh.obj"));
  CHECK(slurp(dir / "mesh.obj").find("\nf ") == std::string::npos);
}

TEST_CASE("fit, extract and transfer are byte-reproducible") {
  app::RunConfig c;
  c.seed = 3;
  c.fit.iterations = 400;
  c.fit.sample_count = 8192;
  c.fit.batch_size = 512;
  c.extract_resolution = 40;
  c.paths.fixture = "icosphere";
  c.out = scratch("fit_a").string();
  REQUIRE(run("fit", c).code == app::kOk);
  app::RunConfig d = c;
  d.out = scratch("fit_b").string();
  REQUIRE(run("fit", d).code == app::kOk);
  for (const char* name : {"field.d2im", "loss.csv", "samples.ssdf", "normals.nmap", "gradient.pgrd", "laplacian.glap"}) {
    INFO(name);
    CHECK(slurp(fs::path(c.out) / name) == slurp(fs::path(d.out) / name));
  }

  app::RunConfig e = c;
  e.paths.field = (fs::path(c.out) / "field.d2im").string();
  REQUIRE(run("extract", e).code == app::kOk);
  const std::string mesh = slurp(fs::path(c.out) / "mesh.obj");
  CHECK_FALSE(load_obj(fs::path(c.out) / "mesh.obj").empty());

  write_text(fs::path(c.out) / "boxes.json",
             R"({"parts":[{"name":"all","target":{"min":[-0.5,-0.5,-0.5],"max":[0.5,0.5,0.5]},)"
             R"("source":{"min":[-0.5,-0.5,-0.5],"max":[0.5,0.5,0.5]}}]})");
  app::RunConfig t = c;
  t.paths.target = e.paths.field;
  t.paths.source = e.paths.field;
  t.paths.boxes = (fs::path(c.out) / "boxes.json").string();
  REQUIRE(run("transfer", t).code == app::kOk);
  // Identity transfer reproduces the plain extraction byte for byte.
  CHECK(slurp(fs::path(c.out) / "transfer.obj") == mesh);
}

TEST_CASE("ablation CSV layout") {
  MetricReport r;
  r.cd = 0.25;
  r.iou = 0.5;
  r.ecd3d.value = 0.125;
  const std::vector<app::AblationRow> rows = {{Ablation::full, r, {}}, {Ablation::baseline, r, {}}};
  CHECK(app::ablation_csv(rows) ==
        "arm,CD,IoU,ECD-3D,ECD-2D\nfull,0.25,0.5,0.125,no_edges\nbaseline,0.25,0.5,0.125,no_edges\n");
}
