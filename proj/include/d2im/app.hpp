#pragma once

#include "d2im/fitting.hpp"
#include "d2im/geometry.hpp"
#include "d2im/metrics.hpp"

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace d2im::app {

/// Process exit codes of the command-line front end.
enum ExitCode : int { kOk = 0, kComputationError = 1, kUsageError = 2 };

/// Input files named by a run. Empty strings mean "not given".
struct Paths {
  std::string mesh;    // OBJ to fit or ablate
  std::string fixture; // canonical fixture name, used instead of `mesh`
  std::string field;   // D2IM file for extract
  std::string gt;      // OBJ pair for eval
  std::string rec;
  std::string target;  // D2IM files and part boxes for transfer
  std::string source;
  std::string boxes;
  bool operator==(const Paths&) const = default;
};

/// Everything a command needs. The JSON form has the sections
/// "fit", "camera", "metrics", "extract" and "paths"; every key is optional and
/// unknown keys are rejected. `seed` drives both fitting and metric sampling.
struct RunConfig {
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::string out = ".";
  FitConfig fit;
  Camera camera = Camera::front();
  MetricParams metrics;
  int extract_resolution = 128;
  Paths paths;

  /// Throws UsageError on malformed JSON, wrong types, unknown keys or invalid values.
  static RunConfig from_json(const std::string& text);
  static RunConfig load(const std::string& path);
  std::string to_json() const;
  void validate() const;

  /// Section configs with the run seed filled in.
  FitConfig fit_config() const;
  MetricParams metric_params() const;

  bool operator==(const RunConfig&) const = default;
};

/// Values given on the command line; they take precedence over the config file.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::optional<std::string> out;
};
void apply(RunConfig& config, const Overrides& overrides);

/// The mesh named by paths.fixture, or else loaded from paths.mesh. It must
/// lie inside the sampling box.
TriMesh input_mesh(const RunConfig& config);

struct AblationRow {
  Ablation arm;
  MetricReport report;
  TriMesh mesh;
};

/// Fits all four arms (full, no_lap, no_back, baseline) with shared inputs and
/// evaluates each extraction against `mesh`.
std::vector<AblationRow> run_ablation(const TriMesh& mesh, const RunConfig& config,
                                      std::ostream* log = nullptr);
/// "arm,CD,IoU,ECD-3D,ECD-2D" followed by one row per arm; empty edge sets print as "no_edges".
std::string ablation_csv(const std::vector<AblationRow>& rows);

void cmd_fixtures(const RunConfig& config, std::ostream& log);
void cmd_fit(const RunConfig& config, std::ostream& log);
void cmd_extract(const RunConfig& config, std::ostream& log);
void cmd_eval(const RunConfig& config, std::ostream& log);
void cmd_transfer(const RunConfig& config, std::ostream& log);
void cmd_ablate(const RunConfig& config, std::ostream& log);

const std::vector<std::string>& verbs();

/// Runs one verb and maps exceptions to exit codes: UsageError and ParseError
/// give kUsageError, any other failure kComputationError. Messages go to `err`
/// prefixed with the verb and the stage that failed.
int run(const std::string& verb, const RunConfig& config, std::ostream& log, std::ostream& err);

} // namespace d2im::app
