#include "d2im/app.hpp"

#include "d2im/extraction.hpp"
#include "d2im/fixtures.hpp"
#include "d2im/io.hpp"
#include "d2im/parallel.hpp"
#include "d2im/transfer.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

namespace d2im::app {

namespace fs = std::filesystem;
using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

static_assert(std::is_same_v<std::size_t, std::uint64_t>, "count fields are read as u64");

namespace {

// The stage currently executing, reported when a command fails.
thread_local std::string g_stage;

void enter(const std::string& stage, std::ostream& log) {
  g_stage = stage;
  log << "[" << stage << "]\n";
}

// Strict reader over one JSON object: every key must be consumed by a get call
// before finish(), which rejects anything left over.
class Section {
 public:
  Section(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    require(j_.is_object(), where_ + " must be an object");
  }

  template <class T>
  void get(const char* key, T& out) {
    const auto it = j_.find(key);
    if (it == j_.end()) {
      return;
    }
    seen_.push_back(key);
    read(*it, std::string(where_) + "." + key, out);
  }

  const json* child(const char* key) {
    const auto it = j_.find(key);
    if (it == j_.end()) {
      return nullptr;
    }
    seen_.push_back(key);
    return &*it;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      const bool known = std::find(seen_.begin(), seen_.end(), it.key()) != seen_.end();
      require(known, where_ + ": unknown key '" + it.key() + "'");
    }
  }

 private:
  static void read(const json& v, const std::string& where, double& out) {
    require(v.is_number(), where + " must be a number");
    out = v.get<double>();
  }
  static void read(const json& v, const std::string& where, bool& out) {
    require(v.is_boolean(), where + " must be true or false");
    out = v.get<bool>();
  }
  static void read(const json& v, const std::string& where, std::string& out) {
    require(v.is_string(), where + " must be a string");
    out = v.get<std::string>();
  }
  static void read(const json& v, const std::string& where, int& out) {
    require(v.is_number_integer(), where + " must be an integer");
    const auto x = v.get<std::int64_t>();
    require(x >= std::numeric_limits<int>::min() && x <= std::numeric_limits<int>::max(),
            where + " is out of range");
    out = static_cast<int>(x);
  }
  static void read(const json& v, const std::string& where, unsigned& out) {
    require(v.is_number_unsigned(), where + " must be a non-negative integer");
    const auto x = v.get<std::uint64_t>();
    require(x <= std::numeric_limits<unsigned>::max(), where + " is out of range");
    out = static_cast<unsigned>(x);
  }
  static void read(const json& v, const std::string& where, std::uint64_t& out) {
    require(v.is_number_unsigned(), where + " must be a non-negative integer");
    out = v.get<std::uint64_t>();
  }
  const json& j_;
  std::string where_;
  std::vector<std::string> seen_;
};

void read_fit(const json& j, FitConfig& f) {
  Section s(j, "fit");
  s.get("iterations", f.iterations);
  s.get("batch_size", f.batch_size);
  s.get("learning_rate", f.learning_rate);
  s.get("lambda_lap", f.lambda_lap);
  s.get("delta", f.delta);
  std::string arm = to_string(f.ablation);
  s.get("ablation", arm);
  f.ablation = ablation_from_string(arm);
  s.get("sample_count", f.sample_count);
  s.get("near_band", f.near_band);
  s.get("density_radius", f.density_radius);
  s.get("base_resolution", f.base_resolution);
  s.get("map_resolution", f.map_resolution);
  s.get("rescale_lap", f.rescale_lap);
  s.get("classify_step", f.classify_step);
  s.get("beta1", f.beta1);
  s.get("beta2", f.beta2);
  s.get("epsilon", f.epsilon);
  s.finish();
}

ordered_json write_fit(const FitConfig& f) {
  return {{"iterations", f.iterations},       {"batch_size", f.batch_size},
          {"learning_rate", f.learning_rate}, {"lambda_lap", f.lambda_lap},
          {"delta", f.delta},                 {"ablation", to_string(f.ablation)},
          {"sample_count", f.sample_count},   {"near_band", f.near_band},
          {"density_radius", f.density_radius}, {"base_resolution", f.base_resolution},
          {"map_resolution", f.map_resolution}, {"rescale_lap", f.rescale_lap},
          {"classify_step", f.classify_step}, {"beta1", f.beta1},
          {"beta2", f.beta2},                 {"epsilon", f.epsilon}};
}

void read_camera(const json& j, Camera& c) {
  Section s(j, "camera");
  if (const json* r = s.child("rotation")) {
    require(r->is_array() && r->size() == 3, "camera.rotation must be a 3x3 array");
    for (int i = 0; i < 3; ++i) {
      const json& row = (*r)[i];
      require(row.is_array() && row.size() == 3, "camera.rotation must be a 3x3 array");
      for (int k = 0; k < 3; ++k) {
        require(row[k].is_number(), "camera.rotation entries must be numbers");
        c.rotation(i, k) = row[k].get<double>();
      }
    }
  }
  if (const json* t = s.child("translation")) {
    require(t->is_array() && t->size() == 3, "camera.translation must be an array of 3 numbers");
    for (int k = 0; k < 3; ++k) {
      require((*t)[k].is_number(), "camera.translation entries must be numbers");
      c.translation[k] = (*t)[k].get<double>();
    }
  }
  s.get("pixel_scale", c.pixel_scale);
  s.get("width", c.width);
  s.get("height", c.height);
  s.finish();
}

ordered_json write_camera(const Camera& c) {
  ordered_json rot = ordered_json::array();
  for (int i = 0; i < 3; ++i) {
    rot.push_back({c.rotation(i, 0), c.rotation(i, 1), c.rotation(i, 2)});
  }
  return {{"rotation", rot},
          {"translation", {c.translation.x(), c.translation.y(), c.translation.z()}},
          {"pixel_scale", c.pixel_scale},
          {"width", c.width},
          {"height", c.height}};
}

void read_metrics(const json& j, MetricParams& m) {
  Section s(j, "metrics");
  s.get("point_count", m.point_count);
  s.get("iou_resolution", m.iou_resolution);
  s.get("edge_neighbors", m.edge_neighbors);
  s.get("edge_threshold", m.edge_threshold);
  s.get("canny_sigma", m.canny.sigma);
  s.get("canny_low", m.canny.low);
  s.get("canny_high", m.canny.high);
  s.finish();
}

ordered_json write_metrics(const MetricParams& m) {
  return {{"point_count", m.point_count},       {"iou_resolution", m.iou_resolution},
          {"edge_neighbors", m.edge_neighbors}, {"edge_threshold", m.edge_threshold},
          {"canny_sigma", m.canny.sigma},       {"canny_low", m.canny.low},
          {"canny_high", m.canny.high}};
}

void read_paths(const json& j, Paths& p) {
  Section s(j, "paths");
  s.get("mesh", p.mesh);
  s.get("fixture", p.fixture);
  s.get("field", p.field);
  s.get("gt", p.gt);
  s.get("rec", p.rec);
  s.get("target", p.target);
  s.get("source", p.source);
  s.get("boxes", p.boxes);
  s.finish();
}

ordered_json write_paths(const Paths& p) {
  return {{"mesh", p.mesh},     {"fixture", p.fixture}, {"field", p.field},
          {"gt", p.gt},         {"rec", p.rec},         {"target", p.target},
          {"source", p.source}, {"boxes", p.boxes}};
}

std::string read_text(const std::string& path, const std::string& what) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), "cannot open " + what + " '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path prepare_out(const RunConfig& config) {
  const fs::path out(config.out);
  std::error_code ec;
  fs::create_directories(out, ec);
  require(!ec && fs::is_directory(out), "cannot create output directory '" + config.out + "'");
  // Probe writability up front so an unwritable target is reported as a usage error.
  const fs::path probe = out / ".d2im_write_probe";
  {
    std::ofstream f(probe);
    require(static_cast<bool>(f), "output directory '" + config.out + "' is not writable");
  }
  fs::remove(probe, ec);
  return out;
}

void need(const std::string& value, const char* key) {
  require(!value.empty(), std::string("paths.") + key + " is required for this command");
  require(fs::is_regular_file(value), std::string("paths.") + key + ": no such file '" + value + "'");
}

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::string format_edge(const EdgeChamfer& e) {
  return e.has_edges() ? format_number(*e.value) : "no_edges";
}

} // namespace

RunConfig RunConfig::from_json(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw UsageError(std::string("config: invalid JSON: ") + e.what());
  }
  RunConfig c;
  Section s(root, "config");
  s.get("seed", c.seed);
  s.get("threads", c.threads);
  s.get("out", c.out);
  if (const json* f = s.child("fit")) read_fit(*f, c.fit);
  if (const json* cam = s.child("camera")) read_camera(*cam, c.camera);
  if (const json* m = s.child("metrics")) read_metrics(*m, c.metrics);
  if (const json* e = s.child("extract")) {
    Section es(*e, "extract");
    es.get("resolution", c.extract_resolution);
    es.finish();
  }
  if (const json* p = s.child("paths")) read_paths(*p, c.paths);
  s.finish();
  c.validate();
  return c;
}

RunConfig RunConfig::load(const std::string& path) {
  return from_json(read_text(path, "config file"));
}

std::string RunConfig::to_json() const {
  ordered_json j = {{"seed", seed},
                    {"threads", threads},
                    {"out", out},
                    {"fit", write_fit(fit)},
                    {"camera", write_camera(camera)},
                    {"metrics", write_metrics(metrics)},
                    {"extract", {{"resolution", extract_resolution}}},
                    {"paths", write_paths(paths)}};
  return j.dump(2) + "\n";
}

void RunConfig::validate() const {
  require(!out.empty(), "config: out must not be empty");
  require(extract_resolution >= 2 && extract_resolution <= 1024,
          "config: extract.resolution must be in [2, 1024]");
  fit_config().validate();
  camera.validate();
  metric_params().validate();
}

FitConfig RunConfig::fit_config() const {
  FitConfig f = fit;
  f.seed = seed;
  return f;
}

MetricParams RunConfig::metric_params() const {
  MetricParams m = metrics;
  m.seed = seed;
  return m;
}

void apply(RunConfig& config, const Overrides& overrides) {
  if (overrides.seed) config.seed = *overrides.seed;
  if (overrides.threads) config.threads = *overrides.threads;
  if (overrides.out) config.out = *overrides.out;
}

TriMesh input_mesh(const RunConfig& config) {
  TriMesh mesh;
  if (!config.paths.fixture.empty()) {
    mesh = fixtures::by_name(config.paths.fixture);
  } else {
    require(!config.paths.mesh.empty(), "paths.mesh or paths.fixture is required for this command");
    need(config.paths.mesh, "mesh");
    mesh = load_obj(config.paths.mesh);
  }
  require(!mesh.empty(), "input mesh has no triangles");
  const Aabb b = mesh.bounds();
  require((b.min.array() >= kBoxMin).all() && (b.max.array() <= kBoxMax).all(),
          "input mesh must lie inside [-0.5, 0.5]^3; normalize it first");
  return mesh;
}

std::vector<AblationRow> run_ablation(const TriMesh& mesh, const RunConfig& config, std::ostream* log) {
  const FitConfig base_cfg = config.fit_config();
  const FitInputs inputs = prepare_fit_inputs(mesh, config.camera, base_cfg);
  std::vector<AblationRow> rows;
  for (const Ablation arm : {Ablation::full, Ablation::no_lap, Ablation::no_back, Ablation::baseline}) {
    FitConfig cfg = base_cfg;
    cfg.ablation = arm;
    if (log) *log << "  arm " << to_string(arm) << "\n";
    const FitTrace trace = fit(inputs, cfg);
    TriMesh rec = marching_cubes(sample_fused(trace.field, config.extract_resolution));
    if (rec.empty()) {
      throw Error("ablation arm " + to_string(arm) + " extracted an empty mesh");
    }
    MetricReport report = evaluate_meshes(mesh, rec, config.camera, config.metric_params());
    rows.push_back({arm, std::move(report), std::move(rec)});
  }
  return rows;
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
  std::string out = "arm,CD,IoU,ECD-3D,ECD-2D\n";
  for (const auto& r : rows) {
    out += to_string(r.arm) + "," + format_number(r.report.cd) + "," + format_number(r.report.iou) + "," +
           format_edge(r.report.ecd3d) + "," + format_edge(r.report.ecd2d) + "\n";
  }
  return out;
}

void cmd_fixtures(const RunConfig& config, std::ostream& log) {
  enter("prepare output", log);
  const fs::path out = prepare_out(config);
  enter("write fixtures", log);
  for (const auto& [stem, mesh] : fixtures::canonical_set()) {
    save_obj(mesh, out / (stem + ".obj"));
    log << "  " << (out / (stem + ".obj")).string() << "\n";
  }
}

void cmd_fit(const RunConfig& config, std::ostream& log) {
  enter("load mesh", log);
  const TriMesh mesh = input_mesh(config);
  const fs::path out = prepare_out(config);
  const FitConfig cfg = config.fit_config();
  enter("prepare inputs", log);
  const FitInputs inputs = prepare_fit_inputs(mesh, config.camera, cfg);
  enter("optimize", log);
  const FitTrace trace = fit(inputs, cfg);
  enter("write outputs", log);
  save_field(trace.field, out / "field.d2im");
  write_text(out / "loss.csv", loss_history_csv(trace.history));
  write_file(out / "samples.ssdf", encode(inputs.samples));
  write_file(out / "normals.nmap", encode(inputs.normals));
  write_file(out / "gradient.pgrd", encode(projected_gradient(inputs.normals, config.camera)));
  write_file(out / "laplacian.glap", encode(inputs.gtl));
  log << "  final loss " << format_number(trace.history.back().total) << "\n";
}

void cmd_extract(const RunConfig& config, std::ostream& log) {
  need(config.paths.field, "field");
  enter("load field", log);
  const DisentangledField field = load_field(config.paths.field);
  const fs::path out = prepare_out(config);
  enter("extract", log);
  const TriMesh mesh = marching_cubes(sample_fused(field, config.extract_resolution));
  if (mesh.empty()) {
    log << "warning: the field has no zero crossing; writing an empty mesh\n";
  }
  enter("write outputs", log);
  save_obj(mesh, out / "mesh.obj");
}

void cmd_eval(const RunConfig& config, std::ostream& log) {
  need(config.paths.gt, "gt");
  need(config.paths.rec, "rec");
  enter("load meshes", log);
  const TriMesh gt = load_obj(config.paths.gt);
  const TriMesh rec = load_obj(config.paths.rec);
  const fs::path out = prepare_out(config);
  enter("evaluate", log);
  const MetricReport report = evaluate_meshes(gt, rec, config.camera, config.metric_params());
  enter("write outputs", log);
  write_text(out / "metrics.json", metric_report_json(report));
}

void cmd_transfer(const RunConfig& config, std::ostream& log) {
  need(config.paths.target, "target");
  need(config.paths.source, "source");
  need(config.paths.boxes, "boxes");
  enter("load inputs", log);
  const DisentangledField target = load_field(config.paths.target);
  const DisentangledField source = load_field(config.paths.source);
  const PartBoxes boxes = PartBoxes::load(config.paths.boxes);
  const fs::path out = prepare_out(config);
  enter("transfer", log);
  const double h = config.fit.classify_step;
  const TriMesh mesh = marching_cubes(sample_field(
      [&](const Vec3& p) { return evaluate_transferred(target, source, boxes, p, h); },
      config.extract_resolution));
  if (mesh.empty()) {
    log << "warning: the transferred field has no zero crossing; writing an empty mesh\n";
  }
  enter("write outputs", log);
  save_obj(mesh, out / "transfer.obj");
}

void cmd_ablate(const RunConfig& config, std::ostream& log) {
  RunConfig c = config;
  if (c.paths.fixture.empty() && c.paths.mesh.empty()) {
    c.paths.fixture = "bumpy_plate";
  }
  enter("load mesh", log);
  const TriMesh mesh = input_mesh(c);
  const fs::path out = prepare_out(c);
  enter("ablate", log);
  const auto rows = run_ablation(mesh, c, &log);
  enter("write outputs", log);
  for (const auto& r : rows) {
    save_obj(r.mesh, out / ("ablate_" + to_string(r.arm) + ".obj"));
  }
  const std::string csv = ablation_csv(rows);
  write_text(out / "ablation.csv", csv);
  log << csv;
}

const std::vector<std::string>& verbs() {
  static const std::vector<std::string> v = {"fixtures", "fit", "extract", "eval", "transfer", "ablate"};
  return v;
}

int run(const std::string& verb, const RunConfig& config, std::ostream& log, std::ostream& err) {
  g_stage = "configure";
  try {
    config.validate();
    set_thread_count(config.threads);
    if (verb == "fixtures") cmd_fixtures(config, log);
    else if (verb == "fit") cmd_fit(config, log);
    else if (verb == "extract") cmd_extract(config, log);
    else if (verb == "eval") cmd_eval(config, log);
    else if (verb == "transfer") cmd_transfer(config, log);
    else if (verb == "ablate") cmd_ablate(config, log);
    else throw UsageError("unknown command '" + verb + "'");
  } catch (const UsageError& e) {
    err << "d2im " << verb << ": " << g_stage << ": " << e.what() << "\n";
    return kUsageError;
  } catch (const ParseError& e) {
    err << "d2im " << verb << ": " << g_stage << ": " << e.what() << "\n";
    return kUsageError;
  } catch (const std::exception& e) {
    err << "d2im " << verb << ": " << g_stage << ": " << e.what() << "\n";
    return kComputationError;
  }
  return kOk;
}

} // namespace d2im::app
