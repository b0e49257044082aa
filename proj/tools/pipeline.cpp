#include "pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <ostream>
#include <set>

#include <Eigen/Core>

#include "timebin/analysis.hpp"
#include "timebin/csv.hpp"
#include "timebin/eightport.hpp"
#include "timebin/error.hpp"
#include "timebin/rng.hpp"
#include "timebin/state_io.hpp"

#ifndef TIMEBIN_VERSION
#define TIMEBIN_VERSION "unknown"
#endif

namespace timebin::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {


// Strict reader for one JSON object: every key must be consumed.
class Fields {
 public:
  Fields(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where("") + "expected an object");
  }

  bool has(const char* key) const { return j_.contains(key); }

  const json& raw(const char* key) {
    used_.insert(key);
    return j_.at(key);
  }

  std::string child(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  void number(const char* key, double& out) {
    if (!has(key)) return;
    const json& v = raw(key);
    if (!v.is_number()) fail(key, "expected a number");
    out = v.get<double>();
  }

  void integer(const char* key, int& out) {
    if (!has(key)) return;
    const json& v = raw(key);
    if (!v.is_number_integer()) fail(key, "expected an integer");
    const auto x = v.get<long long>();
    if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) fail(key, "out of range");
    out = static_cast<int>(x);
  }

  template <class U>
  void unsigned_integer(const char* key, U& out) {
    if (!has(key)) return;
    const json& v = raw(key);
    if (v.is_number_unsigned()) {
      const auto x = v.get<std::uint64_t>();
      if (x > std::numeric_limits<U>::max()) fail(key, "out of range");
      out = static_cast<U>(x);
      return;
    }
    if (v.is_number_integer()) fail(key, "must not be negative");
    fail(key, "expected a non-negative integer");
  }

  void boolean(const char* key, bool& out) {
    if (!has(key)) return;
    const json& v = raw(key);
    if (!v.is_boolean()) fail(key, "expected true or false");
    out = v.get<bool>();
  }

  void string(const char* key, std::string& out) {
    if (!has(key)) return;
    const json& v = raw(key);
    if (!v.is_string()) fail(key, "expected a string");
    out = v.get<std::string>();
  }

  void optional_number(const char* key, std::optional<double>& out) {
    if (!has(key)) return;
    double v = 0.0;
    number(key, v);
    out = v;
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!used_.contains(key)) throw ConfigError(child(key.c_str()) + ": unknown key");
    }
  }

  [[noreturn]] void fail(const char* key, const std::string& msg) const { throw ConfigError(child(key) + ": " + msg); }

 private:
  std::string where(const char* key) const {
    const std::string p = *key ? child(key) : path_;
    return p.empty() ? std::string("config: ") : p + ": ";
  }

  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

generation::MziConfig parse_mzi(const json& j, const std::string& path, generation::MziConfig m) {
  Fields f(j, path);
  // A splitter given by one coefficient gets the other from tau^2 + rho^2 = 1.
  auto splitter = [&](const char* tk, const char* rk, double& tau, double& rho) {
    f.number(tk, tau);
    f.number(rk, rho);
    if (f.has(tk) && !f.has(rk)) rho = std::sqrt(std::max(0.0, 1.0 - tau * tau));
    if (f.has(rk) && !f.has(tk)) tau = std::sqrt(std::max(0.0, 1.0 - rho * rho));
  };
  splitter("tau1", "rho1", m.tau1, m.rho1);
  splitter("tau2", "rho2", m.tau2, m.rho2);
  f.number("phi2_rad", m.phi2);
  f.number("delta_t_s", m.delta_t);
  f.number("gamma_rad_s", m.gamma);
  f.finish();
  return m;
}

generation::ImperfectionBudget parse_budget(const json& j) {
  if (j.is_string()) {
    const auto name = j.get<std::string>();
    if (name == "measured") return generation::ImperfectionBudget::measured();
    if (name == "ideal") return generation::ImperfectionBudget::ideal();
    throw ConfigError("budget: unknown preset '" + name + "' (expected 'measured' or 'ideal')");
  }
  Fields f(j, "budget");
  generation::ImperfectionBudget b = generation::ImperfectionBudget::measured();
  if (f.has("preset")) {
    std::string preset;
    f.string("preset", preset);
    if (preset == "ideal") {
      b = generation::ImperfectionBudget::ideal();
    } else if (preset != "measured") {
      f.fail("preset", "unknown preset '" + preset + "' (expected 'measured' or 'ideal')");
    }
  }
  f.number("eta_nopo", b.eta_nopo);
  f.number("eta_vis", b.eta_vis);
  f.number("eta_pr", b.eta_pr);
  f.number("eta_det", b.eta_det);
  f.number("eta_apd", b.eta_apd);
  f.optional_number("zeta_tot_hz", b.zeta_tot);
  f.optional_number("zeta_dark_hz", b.zeta_dark);
  if (b.zeta_tot && b.zeta_dark && !f.has("eta_apd")) {
    try {
      b.eta_apd = generation::ImperfectionBudget::herald_purity(*b.zeta_tot, *b.zeta_dark);
    } catch (const InvalidArgument& e) {
      throw ConfigError(std::string("budget: ") + e.what());
    }
  }
  f.number("p_multi", b.p_multi);
  f.number("phase_jitter_rad", b.phase_jitter);
  f.finish();
  return b;
}

Target parse_target(const json& j, const std::string& path, const generation::MziConfig& base) {
  Fields f(j, path);
  Target t;
  if (!f.has("name")) throw ConfigError(path + ": missing key 'name'");
  f.string("name", t.name);
  const bool by_amplitude = f.has("c0") || f.has("c1") || f.has("phi_rad");
  if (by_amplitude && f.has("mzi")) throw ConfigError(path + ": give either c0/c1/phi_rad or mzi, not both");
  if (f.has("mzi")) {
    t.mzi = parse_mzi(f.raw("mzi"), f.child("mzi"), base);
    try {
      t.mzi->validate();
      t.qubit = generation::qubit_from_mzi(*t.mzi);
    } catch (const InvalidArgument& e) {
      throw ConfigError(f.child("mzi") + ": " + e.what());
    }
  } else {
    double c0 = 1.0, c1 = 0.0, phi = 0.0;
    f.number("c0", c0);
    f.number("c1", c1);
    f.number("phi_rad", phi);
    if (c0 < 0.0 || c1 < 0.0) throw ConfigError(path + ": c0 and c1 must be non-negative");
    const double n = std::hypot(c0, c1);
    if (!(n > 0.0) || !std::isfinite(n)) throw ConfigError(path + ": c0 and c1 must not both vanish");
    try {
      t.qubit = generation::TimeBinQubitSpec::from_amplitudes(c0 / n, c1 / n * std::polar(1.0, phi));
    } catch (const InvalidArgument& e) {
      throw ConfigError(path + ": " + e.what());
    }
  }
  f.finish();
  return t;
}

json target_to_json(const Target& t) {
  json j{{"name", t.name}};
  if (t.mzi) {
    j["mzi"] = {{"tau1", t.mzi->tau1}, {"rho1", t.mzi->rho1}, {"tau2", t.mzi->tau2},
                {"rho2", t.mzi->rho2}, {"phi2_rad", t.mzi->phi2}};
  } else {
    j["c0"] = t.qubit.c0;
    j["c1"] = t.qubit.c1;
    j["phi_rad"] = t.qubit.phi;
  }
  return j;
}

bool safe_name(const std::string& s) {
  if (s.empty() || s == "." || s == "..") return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' || c == '-' ||
           c == '.';
  });
}

json complex_matrix_json(const fock::Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(json::array({m(r, c).real(), m(r, c).imag()}));
    rows.push_back(std::move(row));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Per-target stages

struct Paths {
  fs::path dir;

  fs::path ideal() const { return dir / "ideal_state.json"; }
  fs::path physical() const { return dir / "physical_state.json"; }
  fs::path samples() const { return dir / "samples.csv"; }
  fs::path tomography() const { return dir / "tomography.csv"; }
  fs::path reconstructed() const { return dir / "reconstructed_state.json"; }
  fs::path report() const { return dir / "report.json"; }
  fs::path fringe() const { return dir / "fringe.csv"; }
  fs::path wigner_a() const { return dir / "wigner_a.csv"; }
  fs::path wigner_b() const { return dir / "wigner_b.csv"; }
  fs::path trace() const { return dir / "trace.csv"; }
};

std::uint64_t stage_seed(const ExperimentConfig& cfg, const std::string& stage, const Target& t) {
  return rng::derive_seed(cfg.sampling.seed, stage + "/" + t.name);
}

struct Reconstruction {
  fock::TwoModeDensityMatrix rho;
  json metadata;
  bool converged = true;
};

// Deferred output: computed first, written once every target succeeded.
class Outputs {
 public:
  explicit Outputs(fs::path root) : root_(std::move(root)) {}

  void add(const fs::path& file, std::function<void()> write) {
    files_.push_back(fs::relative(file, root_));
    writes_.push_back(std::move(write));
  }

  std::vector<fs::path> flush() {
    for (auto& w : writes_) w();
    writes_.clear();
    return files_;
  }

 private:
  fs::path root_;
  std::vector<fs::path> files_;
  std::vector<std::function<void()>> writes_;
};

class Clock {
 public:
  void lap(const std::string& label) {
    const auto now = std::chrono::steady_clock::now();
    timings_[label] += std::chrono::duration<double>(now - last_).count();
    last_ = now;
  }
  json to_json() const {
    json j = json::object();
    double total = 0.0;
    for (const auto& [k, v] : timings_) {
      j[k] = v;
      total += v;
    }
    j["total"] = total;
    return j;
  }

 private:
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
  std::map<std::string, double> timings_;
};

fock::TwoModeDensityMatrix load_state(const fs::path& p) {
  if (!fs::exists(p)) throw DataError("missing state file " + p.string());
  return io::state_from_json<2>(io::read_json_file(p));
}

template <class Fn>
auto read_existing(const fs::path& p, Fn fn) {
  if (!fs::exists(p)) throw DataError("missing input file " + p.string());
  return fn(p);
}

Reconstruction reconstruct(const ExperimentConfig& cfg, const std::vector<eightport::TomographyDatum>& data) {
  if (data.empty()) throw InvalidArgument("no tomography data to reconstruct from");
  auto r = tomography::mle_reconstruct(data, cfg.mle);
  json meta{{"iterations", r.iterations},
            {"converged", r.converged},
            {"final_delta", r.final_delta},
            {"log_likelihood", r.log_likelihood},
            {"data_count", data.size()},
            {"dim_per_mode", cfg.mle.dim_per_mode},
            {"x_bin_width", cfg.mle.x_bin_width},
            {"x_range", cfg.mle.x_range},
            {"theta_bins", cfg.mle.theta_bins},
            {"convergence_tol", cfg.mle.convergence_tol}};
  return {std::move(r.rho), std::move(meta), r.converged};
}

struct Report {
  json summary;
  analysis::FringeScan fringe;
  analysis::WignerGrid wigner_a;
  analysis::WignerGrid wigner_b;
  eightport::TimeTrace trace;
  bool converged = true;
};

json single_mode_json(const tomography::ReconstructionResult<1>& r) {
  const auto pn = fock::photon_number_distribution(r.rho);
  return {{"photon_numbers", pn},
          {"wigner_origin", fock::wigner_function(r.rho, 0.0, 0.0)},
          {"iterations", r.iterations},
          {"converged", r.converged}};
}

Report report(const ExperimentConfig& cfg, const Target& t, const std::vector<eightport::QuadratureSample>& samples,
              const fock::TwoModeDensityMatrix& rho) {
  if (samples.empty()) throw InvalidArgument("report needs at least one sample");
  const auto single = cfg.single_mode_mle();
  Report out;

  const auto q = analysis::qubit_report(rho, t.qubit);
  const auto pops = q.populations;

  const auto phis = analysis::phase_grid(cfg.analysis.fringe_points);
  out.fringe = analysis::fringe_scan(samples, phis, single, stage_seed(cfg, "fringe", t));

  const auto dec = analysis::decompose_at_optimum(samples, t.qubit, single, stage_seed(cfg, "decompose", t));
  out.wigner_a = analysis::wigner_grid(dec.output_a.rho, cfg.analysis.wigner_min, cfg.analysis.wigner_max,
                                       cfg.analysis.wigner_step);
  out.wigner_b = analysis::wigner_grid(dec.output_b.rho, cfg.analysis.wigner_min, cfg.analysis.wigner_max,
                                       cfg.analysis.wigner_step);

  const auto& mzi = t.mzi ? *t.mzi : cfg.mzi;
  const auto grid = eightport::TimeGrid::covering(mzi, cfg.analysis.trace_step_s, cfg.analysis.trace_margin_gammas);
  out.trace = eightport::synthesize_variance_trace(rho, mzi, cfg.analysis.trace_trials, grid,
                                                   stage_seed(cfg, "trace", t), {cfg.sampling.workers});
  json peaks = json::array();
  for (const auto& p : eightport::locate_trace_peaks(out.trace, mzi.gamma)) {
    peaks.push_back({{"time_s", p.time}, {"height", p.height}});
  }

  const auto fit_json = [](const analysis::SinusoidFit& f) {
    return json{{"offset", f.offset},
                {"amplitude", f.amplitude},
                {"phase_of_max_rad", f.phase_of_max},
                {"phase_of_min_rad", f.phase_of_min},
                {"visibility", f.visibility}};
  };

  out.converged = dec.output_a.converged && dec.output_b.converged;

  out.summary = {
      {"target", {{"name", t.name}, {"c0", t.qubit.c0}, {"c1", t.qubit.c1}, {"phi_rad", t.qubit.phi}}},
      {"populations", {{"vacuum", pops.vacuum}, {"qubit", pops.qubit}, {"multiphoton", pops.multiphoton}}},
      {"qubit_submatrix", complex_matrix_json(q.submatrix)},
      {"submatrix_fidelity", q.fidelity},
      {"state_fidelity", fock::fidelity(rho, t.qubit.ket(rho.dim_per_mode()))},
      {"fringe",
       {{"points", phis.size()},
        {"visibility", out.fringe.visibility},
        {"visibility_d1", out.fringe.visibility_d1},
        {"visibility_d2", out.fringe.visibility_d2},
        {"fit_d1", fit_json(out.fringe.fit_d1)},
        {"fit_d2", fit_json(out.fringe.fit_d2)}}},
      {"decomposition",
       {{"tau_p", dec.params.tau_p},
        {"rho_p", dec.params.rho_p},
        {"phi_rad", dec.params.phi},
        {"output_a", single_mode_json(dec.output_a)},
        {"output_b", single_mode_json(dec.output_b)}}},
      {"trace", {{"trials", cfg.analysis.trace_trials}, {"step_s", grid.step}, {"peaks", std::move(peaks)}}},
  };
  return out;
}

std::vector<std::vector<double>> wigner_rows(const analysis::WignerGrid& g) {
  std::vector<std::vector<double>> rows;
  rows.reserve(g.values.size());
  std::size_t k = 0;
  for (double x : g.xs) {
    for (double p : g.ps) rows.push_back({x, p, g.values[k++]});
  }
  return rows;
}

json versions() {
  return {{"timebin", TIMEBIN_VERSION},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)},
          {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
          {"compiler", __VERSION__}};
}

}  // namespace

// ---------------------------------------------------------------------------
// Config

void ExperimentConfig::validate() const {
  const auto wrap = [](const std::string& where, const auto& fn) {
    try {
      fn();
    } catch (const InvalidArgument& e) {
      throw ConfigError(where + ": " + e.what());
    }
  };
  wrap("mzi", [&] { mzi.validate(); });
  wrap("budget", [&] { budget.validate(); });
  wrap("mle", [&] { mle.validate(); });
  if (mle.dim_per_mode < 2) throw ConfigError("mle.dim_per_mode: must be >= 2 to hold a qubit");
  if (budget.p_multi > 0.0 && mle.dim_per_mode < 3) {
    throw ConfigError("mle.dim_per_mode: must be >= 3 when budget.p_multi > 0");
  }
  if (targets.empty()) throw ConfigError("targets: at least one target is required");
  std::set<std::string> names;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const auto& t = targets[i];
    const std::string where = "targets[" + std::to_string(i) + "]";
    if (!safe_name(t.name)) throw ConfigError(where + ".name: use letters, digits, '_', '-' or '.'");
    if (!names.insert(t.name).second) throw ConfigError(where + ".name: duplicate target '" + t.name + "'");
    wrap(where, [&] { t.qubit.validate(); });
    if (t.mzi) wrap(where + ".mzi", [&] { t.mzi->validate(); });
  }
  if (sampling.samples < 1) throw ConfigError("sampling.samples: must be >= 1");
  if (analysis.single_mode_dim < 2) throw ConfigError("analysis.single_mode_dim: must be >= 2");
  if (analysis.fringe_points < 3) throw ConfigError("analysis.fringe_points: must be >= 3");
  if (!(analysis.wigner_max > analysis.wigner_min)) throw ConfigError("analysis.wigner_max: must exceed wigner_min");
  if (!(analysis.wigner_step > 0.0)) throw ConfigError("analysis.wigner_step: must be positive");
  if (analysis.trace_trials < 2) throw ConfigError("analysis.trace_trials: must be >= 2");
  if (!(analysis.trace_step_s > 0.0) || analysis.trace_step_s > 0.1 / mzi.gamma) {
    throw ConfigError("analysis.trace_step_s: must lie in (0, 1/(10 gamma)]");
  }
  if (!(analysis.trace_margin_gammas >= 3.0)) throw ConfigError("analysis.trace_margin_gammas: must be >= 3");
  if (output_dir.empty()) throw ConfigError("output_dir: must not be empty");
}

tomography::MleConfig ExperimentConfig::single_mode_mle() const {
  auto c = mle;
  c.dim_per_mode = analysis.single_mode_dim;
  return c;
}

json ExperimentConfig::to_json() const {
  json t = json::array();
  for (const auto& x : targets) t.push_back(target_to_json(x));
  json b{{"eta_nopo", budget.eta_nopo}, {"eta_vis", budget.eta_vis},   {"eta_pr", budget.eta_pr},
         {"eta_det", budget.eta_det},   {"eta_apd", budget.eta_apd},   {"p_multi", budget.p_multi},
         {"phase_jitter_rad", budget.phase_jitter}};
  if (budget.zeta_tot) b["zeta_tot_hz"] = *budget.zeta_tot;
  if (budget.zeta_dark) b["zeta_dark_hz"] = *budget.zeta_dark;
  return {
      {"output_dir", output_dir.string()},
      {"mzi",
       {{"tau1", mzi.tau1},
        {"rho1", mzi.rho1},
        {"tau2", mzi.tau2},
        {"rho2", mzi.rho2},
        {"phi2_rad", mzi.phi2},
        {"delta_t_s", mzi.delta_t},
        {"gamma_rad_s", mzi.gamma}}},
      {"budget", std::move(b)},
      {"targets", std::move(t)},
      {"sampling", {{"samples", sampling.samples}, {"seed", sampling.seed}, {"workers", sampling.workers}}},
      {"mle",
       {{"dim_per_mode", mle.dim_per_mode},
        {"x_bin_width", mle.x_bin_width},
        {"x_range", mle.x_range},
        {"theta_bins", mle.theta_bins},
        {"max_iterations", mle.max_iterations},
        {"convergence_tol", mle.convergence_tol},
        {"dilution", mle.dilution},
        {"accelerate", mle.accelerate}}},
      {"analysis",
       {{"single_mode_dim", analysis.single_mode_dim},
        {"fringe_points", analysis.fringe_points},
        {"wigner_min", analysis.wigner_min},
        {"wigner_max", analysis.wigner_max},
        {"wigner_step", analysis.wigner_step},
        {"trace_trials", analysis.trace_trials},
        {"trace_step_s", analysis.trace_step_s},
        {"trace_margin_gammas", analysis.trace_margin_gammas}}},
  };
}

std::vector<Target> standard_targets() {
  const double pi = std::numbers::pi;
  const struct {
    const char* suffix;
    double phi;
  } phases[] = {{"phi0", 0.0}, {"phi180", pi}, {"phi_p90", pi / 2}, {"phi_m90", -pi / 2}};
  std::vector<Target> out;
  for (const auto& [prefix, c0, c1] :
       {std::tuple{"balanced", 1.0, 1.0}, std::tuple{"two_to_one", 2.0, 1.0}}) {
    const double n = std::hypot(c0, c1);
    for (const auto& p : phases) {
      Target t;
      t.name = std::string(prefix) + "_" + p.suffix;
      t.qubit = generation::TimeBinQubitSpec::from_amplitudes(c0 / n, c1 / n * std::polar(1.0, p.phi));
      out.push_back(std::move(t));
    }
  }
  return out;
}

ExperimentConfig parse_config(const json& j) {
  ExperimentConfig cfg;
  Fields f(j, "");
  if (f.has("output_dir")) {
    std::string s;
    f.string("output_dir", s);
    cfg.output_dir = s;
  }
  if (f.has("mzi")) cfg.mzi = parse_mzi(f.raw("mzi"), "mzi", cfg.mzi);
  if (f.has("budget")) cfg.budget = parse_budget(f.raw("budget"));

  if (f.has("targets")) {
    const json& t = f.raw("targets");
    if (t.is_string()) {
      if (t.get<std::string>() != "standard") throw ConfigError("targets: the only named set is 'standard'");
      cfg.targets = standard_targets();
    } else if (t.is_array()) {
      for (std::size_t i = 0; i < t.size(); ++i) {
        cfg.targets.push_back(parse_target(t[i], "targets[" + std::to_string(i) + "]", cfg.mzi));
      }
    } else {
      throw ConfigError("targets: expected an array or \"standard\"");
    }
  } else {
    Target t;
    t.name = "balanced";
    t.qubit = {1.0 / std::numbers::sqrt2, 1.0 / std::numbers::sqrt2, 0.0};
    cfg.targets.push_back(t);
  }

  if (f.has("sampling")) {
    Fields s(f.raw("sampling"), "sampling");
    s.unsigned_integer("samples", cfg.sampling.samples);
    s.unsigned_integer("seed", cfg.sampling.seed);
    s.unsigned_integer("workers", cfg.sampling.workers);
    s.finish();
  }
  if (f.has("mle")) {
    Fields m(f.raw("mle"), "mle");
    m.integer("dim_per_mode", cfg.mle.dim_per_mode);
    m.number("x_bin_width", cfg.mle.x_bin_width);
    m.number("x_range", cfg.mle.x_range);
    m.integer("theta_bins", cfg.mle.theta_bins);
    m.integer("max_iterations", cfg.mle.max_iterations);
    m.number("convergence_tol", cfg.mle.convergence_tol);
    m.boolean("dilution", cfg.mle.dilution);
    m.boolean("accelerate", cfg.mle.accelerate);
    m.finish();
  }
  if (f.has("analysis")) {
    Fields a(f.raw("analysis"), "analysis");
    a.integer("single_mode_dim", cfg.analysis.single_mode_dim);
    a.integer("fringe_points", cfg.analysis.fringe_points);
    a.number("wigner_min", cfg.analysis.wigner_min);
    a.number("wigner_max", cfg.analysis.wigner_max);
    a.number("wigner_step", cfg.analysis.wigner_step);
    a.unsigned_integer("trace_trials", cfg.analysis.trace_trials);
    a.number("trace_step_s", cfg.analysis.trace_step_s);
    a.number("trace_margin_gammas", cfg.analysis.trace_margin_gammas);
    a.finish();
  }
  f.finish();
  return cfg;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  try {
    return parse_config(j);
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void apply_overrides(ExperimentConfig& cfg, const Overrides& o) {
  if (o.seed) cfg.sampling.seed = *o.seed;
  if (o.out) cfg.output_dir = *o.out;
  if (o.dim) cfg.mle.dim_per_mode = *o.dim;
  if (o.samples) {
    if (*o.samples < 1) throw ConfigError("--samples: must be >= 1");
    cfg.sampling.samples = static_cast<std::size_t>(*o.samples);
  }
  if (o.target) {
    const auto it = std::find_if(cfg.targets.begin(), cfg.targets.end(),
                                 [&](const Target& t) { return t.name == *o.target; });
    if (it == cfg.targets.end()) throw ConfigError("--target: no target named '" + *o.target + "'");
    cfg.targets = {*it};
  }
}

std::optional<Command> command_from_name(const std::string& name) {
  for (Command c : {Command::generate, Command::sample, Command::reconstruct, Command::report, Command::all}) {
    if (name == command_name(c)) return c;
  }
  return std::nullopt;
}

const char* command_name(Command c) {
  switch (c) {
    case Command::generate:
      return "generate";
    case Command::sample:
      return "sample";
    case Command::reconstruct:
      return "reconstruct";
    case Command::report:
      return "report";
    case Command::all:
      return "all";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Commands

RunResult run(Command cmd, const ExperimentConfig& cfg, std::ostream* log) {
  cfg.validate();
  const fs::path root = cfg.output_dir;
  const int d = cfg.mle.dim_per_mode;
  const bool gen = cmd == Command::generate || cmd == Command::all;
  const bool smp = cmd == Command::sample || cmd == Command::all;
  const bool rec = cmd == Command::reconstruct || cmd == Command::all;
  const bool rep = cmd == Command::report || cmd == Command::all;

  Outputs outputs(root);
  Clock clock;
  RunResult result;
  const auto say = [&](const std::string& s) {
    if (log) *log << s << '\n' << std::flush;
  };

  for (const auto& t : cfg.targets) {
    const Paths p{root / t.name};

    std::optional<fock::TwoModeDensityMatrix> physical;
    if (gen) {
      say(t.name + ": generating states");
      auto ideal = fock::TwoModeDensityMatrix::from_ket(t.qubit.ket(d));
      physical = generation::build_physical_state(t.qubit, cfg.budget, d);
      outputs.add(p.ideal(), [ideal = std::move(ideal), f = p.ideal()] { io::write_json_file(f, io::state_to_json(ideal)); });
      outputs.add(p.physical(), [s = *physical, f = p.physical()] { io::write_json_file(f, io::state_to_json(s)); });
      clock.lap(t.name + "/generate");
    } else if (smp) {
      physical = load_state(p.physical());
    }

    std::vector<eightport::QuadratureSample> samples;
    std::vector<eightport::TomographyDatum> tomo;
    if (smp) {
      say(t.name + ": sampling " + std::to_string(cfg.sampling.samples) + " eight-port records");
      samples = eightport::sample_q_function(*physical, cfg.sampling.samples, stage_seed(cfg, "sample", t),
                                             {cfg.sampling.workers});
      tomo = eightport::make_tomography_data(samples, stage_seed(cfg, "tomography", t));
      outputs.add(p.samples(), [s = samples, f = p.samples()] { csv::write_samples(f, s); });
      outputs.add(p.tomography(), [s = tomo, f = p.tomography()] { csv::write_tomography(f, s); });
      clock.lap(t.name + "/sample");
    } else {
      if (rec) tomo = read_existing(p.tomography(), csv::read_tomography);
      if (rep) samples = read_existing(p.samples(), csv::read_samples);
    }

    std::optional<fock::TwoModeDensityMatrix> reconstructed;
    if (rec) {
      say(t.name + ": reconstructing from " + std::to_string(tomo.size()) + " quadrature pairs");
      auto r = reconstruct(cfg, tomo);
      result.all_converged = result.all_converged && r.converged;
      if (!r.converged) say(t.name + ": reconstruction did not converge");
      json doc = io::state_to_json(r.rho);
      doc["metadata"] = r.metadata;
      reconstructed = std::move(r.rho);
      outputs.add(p.reconstructed(), [doc = std::move(doc), f = p.reconstructed()] { io::write_json_file(f, doc); });
      clock.lap(t.name + "/reconstruct");
    } else if (rep) {
      reconstructed = read_existing(p.reconstructed(), load_state);
    }

    if (rep) {
      say(t.name + ": analysing");
      auto r = report(cfg, t, samples, *reconstructed);
      result.all_converged = result.all_converged && r.converged;
      outputs.add(p.report(), [j = std::move(r.summary), f = p.report()] { io::write_json_file(f, j); });
      std::vector<std::vector<double>> fringe_rows;
      for (std::size_t i = 0; i < r.fringe.phis.size(); ++i) {
        fringe_rows.push_back({r.fringe.phis[i], r.fringe.p1_d1[i], r.fringe.p1_d2[i]});
      }
      outputs.add(p.fringe(), [rows = std::move(fringe_rows), f = p.fringe()] {
        csv::write_table(f, {"phi_rad", "p1_d1", "p1_d2"}, rows);
      });
      outputs.add(p.wigner_a(), [rows = wigner_rows(r.wigner_a), f = p.wigner_a()] {
        csv::write_table(f, {"x", "p", "w"}, rows);
      });
      outputs.add(p.wigner_b(), [rows = wigner_rows(r.wigner_b), f = p.wigner_b()] {
        csv::write_table(f, {"x", "p", "w"}, rows);
      });
      outputs.add(p.trace(), [tr = std::move(r.trace), f = p.trace()] { csv::write_trace(f, tr); });
      clock.lap(t.name + "/report");
    }
  }

  result.files = outputs.flush();
  clock.lap("write");

  json files = json::array();
  for (const auto& f : result.files) files.push_back(f.generic_string());
  const json manifest{{"command", command_name(cmd)},
                      {"seed", cfg.sampling.seed},
                      {"config", cfg.to_json()},
                      {"versions", versions()},
                      {"files", std::move(files)},
                      {"all_converged", result.all_converged},
                      {"timings_s", clock.to_json()}};
  io::write_json_file(root / "manifest.json", manifest);
  return result;
}

}  // namespace timebin::pipeline
