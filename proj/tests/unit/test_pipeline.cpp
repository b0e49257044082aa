#include <fstream>
#include <iterator>
#include <sstream>

#include <gtest/gtest.h>

#include "pipeline.hpp"
#include "tempdir.hpp"
#include "timebin/csv.hpp"
#include "timebin/error.hpp"
#include "timebin/state_io.hpp"

using namespace timebin;
using nlohmann::json;
using pipeline::Command;
using pipeline::ConfigError;

namespace {

json small_config_json(const std::filesystem::path& out) {
  json j = json::parse(R"({
    "budget": {"preset": "measured"},
    "targets": [{"name": "q", "c0": 1, "c1": 1, "phi_rad": -1.5707963267948966},
                {"name": "m", "mzi": {"tau1": 0.8, "rho2": 0.8, "phi2_rad": 0.3}}],
    "sampling": {"samples": 3000, "seed": 99},
    "mle": {"dim_per_mode": 3, "max_iterations": 300, "convergence_tol": 1e-5},
    "analysis": {"single_mode_dim": 4, "fringe_points": 4, "wigner_step": 0.5, "trace_trials": 400}
  })");
  j["output_dir"] = out.string();
  return j;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::string config_error(const json& j) {
  try {
    pipeline::parse_config(j).validate();
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Config, DefaultsAreValid) {
  const auto cfg = pipeline::parse_config(json::object());
  EXPECT_NO_THROW(cfg.validate());
  EXPECT_EQ(cfg.targets.size(), 1u);
  EXPECT_EQ(cfg.sampling.samples, 100000u);
  EXPECT_EQ(cfg.mle.dim_per_mode, 3);
}

TEST(Config, ErrorsNameTheKey) {
  EXPECT_EQ(config_error(json::parse(R"({"mle": {"dim_per_mod": 3}})")), "mle.dim_per_mod: unknown key");
  EXPECT_EQ(config_error(json::parse(R"({"mle": {"dim_per_mode": 2.5}})")), "mle.dim_per_mode: expected an integer");
  EXPECT_EQ(config_error(json::parse(R"({"sampling": {"seed": -1}})")), "sampling.seed: must not be negative");
  EXPECT_EQ(config_error(json::parse(R"({"sampling": {"samples": 0}})")), "sampling.samples: must be >= 1");
  EXPECT_EQ(config_error(json::parse(R"({"budget": {"eta_det": "high"}})")), "budget.eta_det: expected a number");
  EXPECT_EQ(config_error(json::parse(R"({"mzi": {"gamma_hz": 1e6}})")), "mzi.gamma_hz: unknown key");
  EXPECT_EQ(config_error(json::parse(R"({"targets": [{"name": "a", "c0": 1, "colour": 2}]})")),
            "targets[0].colour: unknown key");
  EXPECT_NE(config_error(json::parse(R"({"targets": [{"name": "a/b"}]})")).find("targets[0].name"), std::string::npos);
  EXPECT_NE(config_error(json::parse(R"({"targets": [{"name": "a"}, {"name": "a"}]})")).find("duplicate"),
            std::string::npos);
  EXPECT_NE(config_error(json::parse(R"({"budget": {"eta_pr": 1.5}})")).find("budget"), std::string::npos);
  EXPECT_NE(config_error(json::parse(R"({"mle": {"dim_per_mode": 2}})")).find("p_multi"), std::string::npos);
  EXPECT_NE(config_error(json::parse(R"({"analysis": {"trace_step_s": 1e-8}})")).find("trace_step_s"),
            std::string::npos);
}

TEST(Config, FileErrorsCarryLineNumbers) {
  testkit::TempDir dir;
  {
    std::ofstream out(dir / "c.json");
    out << "{\n  \"mle\": {\n    \"dim_per_mode\": 3,\n  }\n}\n";
  }
  try {
    pipeline::load_config(dir / "c.json");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("line 4"), std::string::npos) << e.what();
  }
}

TEST(Config, CommentsAllowed) {
  testkit::TempDir dir;
  {
    std::ofstream out(dir / "c.json");
    out << "// header\n{ \"sampling\": { \"samples\": 10 } // trailing\n}\n";
  }
  EXPECT_EQ(pipeline::load_config(dir / "c.json").sampling.samples, 10u);
}

TEST(Config, StandardTargetsAndMziTargets) {
  const auto cfg = pipeline::parse_config(json::parse(R"({"targets": "standard"})"));
  ASSERT_EQ(cfg.targets.size(), 8u);
  EXPECT_NEAR(cfg.targets[4].qubit.c0, 2.0 / std::sqrt(5.0), 1e-15);

  const auto m = pipeline::parse_config(small_config_json("x"));
  ASSERT_TRUE(m.targets[1].mzi.has_value());
  EXPECT_NEAR(m.targets[1].qubit.c0, 0.8 * 0.6 / std::hypot(0.8 * 0.6, 0.6 * 0.8), 1e-14);
  EXPECT_NEAR(m.targets[1].mzi->tau2, 0.6, 1e-15);

  const auto g = pipeline::parse_config(json::parse(R"({"mzi": {"gamma_rad_s": 1e7, "rho1": 0.6}})"));
  EXPECT_EQ(g.mzi.gamma, 1e7);
  EXPECT_NEAR(g.mzi.tau1, 0.8, 1e-15);
}

TEST(Config, CountRatesSetHeraldPurity) {
  const auto cfg = pipeline::parse_config(json::parse(R"({"budget": {"zeta_tot_hz": 5e4, "zeta_dark_hz": 1e3}})"));
  EXPECT_NEAR(cfg.budget.eta_apd, 0.98, 1e-15);
}

TEST(Config, EchoParsesBackToTheSameConfig) {
  const auto cfg = pipeline::parse_config(small_config_json("out"));
  const auto again = pipeline::parse_config(cfg.to_json());
  EXPECT_EQ(again.to_json(), cfg.to_json());
}

TEST(Config, FlagsOverrideConfig) {
  auto cfg = pipeline::parse_config(small_config_json("out"));
  pipeline::Overrides o;
  o.seed = 5;
  o.out = "elsewhere";
  o.dim = 4;
  o.samples = 77;
  o.target = "m";
  pipeline::apply_overrides(cfg, o);
  EXPECT_EQ(cfg.sampling.seed, 5u);
  EXPECT_EQ(cfg.output_dir, "elsewhere");
  EXPECT_EQ(cfg.mle.dim_per_mode, 4);
  EXPECT_EQ(cfg.sampling.samples, 77u);
  ASSERT_EQ(cfg.targets.size(), 1u);
  EXPECT_EQ(cfg.targets[0].name, "m");

  pipeline::Overrides bad;
  bad.samples = 0;
  EXPECT_THROW(pipeline::apply_overrides(cfg, bad), ConfigError);
  bad = {};
  bad.target = "nope";
  EXPECT_THROW(pipeline::apply_overrides(cfg, bad), ConfigError);
}

TEST(Run, RerunIsByteIdenticalAndStagesMatchAll) {
  testkit::TempDir dir;
  const auto a = pipeline::parse_config(small_config_json(dir / "a"));
  const auto b = pipeline::parse_config(small_config_json(dir / "b"));
  const auto c = pipeline::parse_config(small_config_json(dir / "c"));
  const auto ra = pipeline::run(Command::all, a, nullptr);
  pipeline::run(Command::all, b, nullptr);
  for (Command cmd : {Command::generate, Command::sample, Command::reconstruct, Command::report}) {
    pipeline::run(cmd, c, nullptr);
  }
  ASSERT_EQ(ra.files.size(), 2u * 10u);
  for (const auto& f : ra.files) {
    const auto bytes = slurp(dir / "a" / f);
    ASSERT_FALSE(bytes.empty()) << f;
    EXPECT_EQ(bytes, slurp(dir / "b" / f)) << f;
    EXPECT_EQ(bytes, slurp(dir / "c" / f)) << f;
  }
  const auto manifest = io::read_json_file(dir / "a" / "manifest.json");
  EXPECT_EQ(manifest.at("files").size(), ra.files.size());
  EXPECT_EQ(manifest.at("seed").get<std::uint64_t>(), 99u);
  EXPECT_TRUE(manifest.at("timings_s").contains("total"));
}

TEST(Run, SampleCountsAndSchemas) {
  testkit::TempDir dir;
  auto cfg = pipeline::parse_config(small_config_json(dir.path()));
  pipeline::apply_overrides(cfg, {.target = std::string("q")});
  pipeline::run(Command::generate, cfg, nullptr);
  pipeline::run(Command::sample, cfg, nullptr);
  EXPECT_EQ(csv::read_samples(dir / "q/samples.csv").size(), 3000u);
  EXPECT_EQ(csv::read_tomography(dir / "q/tomography.csv").size(), 6000u);
  pipeline::run(Command::reconstruct, cfg, nullptr);
  const auto doc = io::read_json_file(dir / "q/reconstructed_state.json");
  EXPECT_NO_THROW(io::state_from_json<2>(doc));
  EXPECT_EQ(doc.at("metadata").at("data_count").get<int>(), 6000);
  EXPECT_TRUE(doc.at("metadata").contains("converged"));
}

TEST(Run, IdealBudgetWritesTargetState) {
  testkit::TempDir dir;
  auto j = small_config_json(dir.path());
  j["budget"] = "ideal";
  const auto cfg = pipeline::parse_config(j);
  pipeline::run(Command::generate, cfg, nullptr);
  const auto rho = io::state_from_json<2>(io::read_json_file(dir / "q/physical_state.json"));
  EXPECT_NEAR(fock::fidelity(rho, cfg.targets[0].qubit.ket(3)), 1.0, 1e-14);
}

TEST(Run, MissingInputsLeaveNoPartialArtifacts) {
  testkit::TempDir dir;
  const auto cfg = pipeline::parse_config(small_config_json(dir / "out"));
  EXPECT_THROW(pipeline::run(Command::sample, cfg, nullptr), DataError);
  EXPECT_THROW(pipeline::run(Command::reconstruct, cfg, nullptr), DataError);
  EXPECT_THROW(pipeline::run(Command::report, cfg, nullptr), DataError);
  EXPECT_FALSE(std::filesystem::exists(dir / "out"));

  // First target present, second missing: nothing gets written for either.
  auto one = cfg;
  pipeline::apply_overrides(one, {.target = std::string("q")});
  pipeline::run(Command::generate, one, nullptr);
  const auto before = slurp(dir / "out/manifest.json");
  EXPECT_THROW(pipeline::run(Command::sample, cfg, nullptr), DataError);
  EXPECT_FALSE(std::filesystem::exists(dir / "out/q/samples.csv"));
  EXPECT_EQ(slurp(dir / "out/manifest.json"), before);
}

TEST(Run, EmptySamplesIsUsageError) {
  testkit::TempDir dir;
  auto cfg = pipeline::parse_config(small_config_json(dir.path()));
  pipeline::apply_overrides(cfg, {.target = std::string("q")});
  pipeline::run(Command::generate, cfg, nullptr);
  pipeline::run(Command::sample, cfg, nullptr);
  pipeline::run(Command::reconstruct, cfg, nullptr);
  csv::write_samples(dir / "q/samples.csv", {});
  EXPECT_THROW(pipeline::run(Command::report, cfg, nullptr), InvalidArgument);
  EXPECT_FALSE(std::filesystem::exists(dir / "q/report.json"));
}

TEST(Run, NonConvergenceIsReported) {
  testkit::TempDir dir;
  auto j = small_config_json(dir.path());
  j["mle"]["max_iterations"] = 2;
  j["mle"]["convergence_tol"] = 1e-14;
  auto cfg = pipeline::parse_config(j);
  pipeline::apply_overrides(cfg, {.target = std::string("q")});
  pipeline::run(Command::generate, cfg, nullptr);
  pipeline::run(Command::sample, cfg, nullptr);
  const auto r = pipeline::run(Command::reconstruct, cfg, nullptr);
  EXPECT_FALSE(r.all_converged);
  EXPECT_FALSE(io::read_json_file(dir / "q/reconstructed_state.json").at("metadata").at("converged").get<bool>());
}

TEST(Run, ReportContents) {
  testkit::TempDir dir;
  auto cfg = pipeline::parse_config(small_config_json(dir.path()));
  pipeline::apply_overrides(cfg, {.target = std::string("q")});
  pipeline::run(Command::all, cfg, nullptr);
  const auto r = io::read_json_file(dir / "q/report.json");
  for (const char* key : {"populations", "qubit_submatrix", "submatrix_fidelity", "state_fidelity", "fringe",
                          "decomposition", "trace", "target"}) {
    EXPECT_TRUE(r.contains(key)) << key;
  }
  EXPECT_EQ(r.at("trace").at("peaks").size(), 2u);
  const auto fringe = csv::read_table(dir / "q/fringe.csv", {"phi_rad", "p1_d1", "p1_d2"});
  EXPECT_EQ(fringe.size(), 4u);
  const auto w = csv::read_table(dir / "q/wigner_a.csv", {"x", "p", "w"});
  EXPECT_EQ(w.size(), 17u * 17u);
  EXPECT_FALSE(csv::read_table(dir / "q/trace.csv", {"t_s", "variance"}).empty());
}
