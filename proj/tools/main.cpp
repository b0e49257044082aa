// timebin: generate, sample, reconstruct and analyse time-bin qubits.
//
// Precedence: command-line flags > config file > built-in defaults.
// Exit codes: 0 success, 2 usage or config error, 3 data error,
// 4 a reconstruction did not converge, 1 anything else.

#include <iostream>

#include "CLI11.hpp"
#include "pipeline.hpp"
#include "timebin/error.hpp"

namespace {

enum Exit { kOk = 0, kInternal = 1, kUsage = 2, kData = 3, kNotConverged = 4 };

}  // namespace

int main(int argc, char** argv) {
  using namespace timebin;

  CLI::App app{"Time-bin qubit generation, eight-port sampling and ML tomography"};
  app.require_subcommand(1);

  std::string config_path;
  pipeline::Overrides ov;
  std::uint64_t seed = 0;
  std::string out;
  int dim = 0;
  long long samples = 0;
  std::string target;
  bool quiet = false;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "Experiment config (JSON, comments allowed)")->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "Root seed (overrides sampling.seed)");
    sub->add_option("--out", out, "Output directory (overrides output_dir)");
    sub->add_option("--dim", dim, "Fock cutoff per mode (overrides mle.dim_per_mode)");
    sub->add_option("--samples", samples, "Eight-port records per target (overrides sampling.samples)");
    sub->add_option("--target", target, "Restrict the run to one named target");
    sub->add_flag("--quiet", quiet, "No progress output");
  };

  std::optional<pipeline::Command> cmd;
  const std::pair<pipeline::Command, const char*> commands[] = {
      {pipeline::Command::generate, "Write ideal and physical density matrices"},
      {pipeline::Command::sample, "Draw eight-port records and tomography data"},
      {pipeline::Command::reconstruct, "Maximum-likelihood reconstruction from tomography data"},
      {pipeline::Command::report, "Fidelities, fringe scan, decomposition, Wigner grids, variance trace"},
      {pipeline::Command::all, "generate, sample, reconstruct and report in one go"},
  };
  for (const auto& [c, help] : commands) {
    auto* sub = app.add_subcommand(pipeline::command_name(c), help);
    add_common(sub);
    sub->callback([&cmd, c = c] { cmd = c; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  for (auto* sub : app.get_subcommands()) {
    if (sub->count("--seed")) ov.seed = seed;
    if (sub->count("--out")) ov.out = out;
    if (sub->count("--dim")) ov.dim = dim;
    if (sub->count("--samples")) ov.samples = samples;
    if (sub->count("--target")) ov.target = target;
  }

  try {
    pipeline::ExperimentConfig cfg = config_path.empty() ? pipeline::parse_config(nlohmann::json::object())
                                                         : pipeline::load_config(config_path);
    pipeline::apply_overrides(cfg, ov);
    const auto result = pipeline::run(*cmd, cfg, quiet ? nullptr : &std::cerr);
    if (!quiet) std::cerr << "wrote " << result.files.size() << " files under " << cfg.output_dir.string() << '\n';
    return result.all_converged ? kOk : kNotConverged;
  } catch (const pipeline::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kUsage;
  } catch (const InvalidArgument& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInternal;
  }
}
