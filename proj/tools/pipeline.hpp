#pragma once

// Config-driven experiment runs for the `timebin` command.
//
// Layout under output_dir:
//   <target>/ideal_state.json, physical_state.json      generate
//   <target>/samples.csv, tomography.csv                 sample
//   <target>/reconstructed_state.json                   reconstruct
//   <target>/report.json, fringe.csv, wigner_a.csv,
//   <target>/wigner_b.csv, trace.csv                     report
//   manifest.json                                        every command
//
// Seeds: every random stage uses rng::derive_seed(root, "<stage>/<target>").

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "timebin/generation.hpp"
#include "timebin/tomography.hpp"

namespace timebin::pipeline {

/// Config problems (unknown keys, wrong types, invalid values). Exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct Target {
  std::string name;
  generation::TimeBinQubitSpec qubit;
  std::optional<generation::MziConfig> mzi;  // set when the target was given as interferometer settings
};

struct SamplingConfig {
  std::size_t samples = 100000;
  std::uint64_t seed = 12345;
  unsigned workers = 1;
};

struct AnalysisConfig {
  int single_mode_dim = 10;
  int fringe_points = 16;
  double wigner_min = -4.0;
  double wigner_max = 4.0;
  double wigner_step = 0.05;
  std::size_t trace_trials = 20000;
  double trace_step_s = 2e-9;
  double trace_margin_gammas = 6.0;
};

struct ExperimentConfig {
  generation::MziConfig mzi;
  generation::ImperfectionBudget budget = generation::ImperfectionBudget::measured();
  std::vector<Target> targets;
  SamplingConfig sampling;
  tomography::MleConfig mle;
  AnalysisConfig analysis;
  std::filesystem::path output_dir = "out";

  /// Throws ConfigError naming the offending field.
  void validate() const;
  tomography::MleConfig single_mode_mle() const;
  nlohmann::json to_json() const;
};

/// Parses a config document. Unknown keys and type mismatches are reported
/// with their JSON path, e.g. "mle.dim_per_mode: expected an integer".
ExperimentConfig parse_config(const nlohmann::json& j);

/// Reads and parses a config file; JSON syntax errors carry line and column.
ExperimentConfig load_config(const std::filesystem::path& path);

/// Command-line values that take precedence over the config file.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;
  std::optional<int> dim;
  std::optional<long long> samples;
  std::optional<std::string> target;
};

void apply_overrides(ExperimentConfig& cfg, const Overrides& o);

enum class Command { generate, sample, reconstruct, report, all };

std::optional<Command> command_from_name(const std::string& name);
const char* command_name(Command c);

struct RunResult {
  std::vector<std::filesystem::path> files;  // relative to output_dir
  bool all_converged = true;
};

/// Runs one command over every configured target. Inputs are read and all
/// results computed before the first file is written. `log` may be null.
RunResult run(Command cmd, const ExperimentConfig& cfg, std::ostream* log);

/// The eight standard targets: balanced and 2:1 amplitude
/// qubits with Phi in {0, pi, pi/2, -pi/2}.
std::vector<Target> standard_targets();

}  // namespace timebin::pipeline
