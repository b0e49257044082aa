#include "timebin/generation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "timebin/error.hpp"

namespace timebin::generation {

using fock::Complex;
using fock::FockKet;
using fock::Matrix;
using fock::TwoModeDensityMatrix;

namespace {

double wrap_phase(double phi) {
  double w = std::remainder(phi, 2.0 * std::numbers::pi);  // [-pi, pi]
  if (w <= -std::numbers::pi) w += 2.0 * std::numbers::pi;
  return w;
}

void check_splitter(double tau, double rho, const char* name) {
  if (std::abs(tau * tau + rho * rho - 1.0) > 1e-10) {
    std::ostringstream os;
    os << name << ": tau^2 + rho^2 = " << tau * tau + rho * rho << ", expected 1";
    throw InvalidArgument(os.str());
  }
}

void check_unit(double v, const char* name) {
  if (!(v >= 0.0 && v <= 1.0)) {
    std::ostringstream os;
    os << name << " must lie in [0, 1], got " << v;
    throw InvalidArgument(os.str());
  }
}

}  // namespace

void MziConfig::validate() const {
  check_splitter(tau1, rho1, "BS-1");
  check_splitter(tau2, rho2, "BS-2");
  if (!(delta_t > 0.0)) throw InvalidArgument("delta_t must be positive");
  if (!(gamma > 0.0)) throw InvalidArgument("gamma must be positive");
  if (!std::isfinite(phi2)) throw InvalidArgument("phi2 must be finite");
}

ModeFunction early_bin_mode(const MziConfig& cfg) { return {cfg.gamma, cfg.delta_t}; }
ModeFunction late_bin_mode(const MziConfig& cfg) { return {cfg.gamma, 0.0}; }

// ---------------------------------------------------------------------------
// Budget

ImperfectionBudget ImperfectionBudget::ideal() { return {}; }

ImperfectionBudget ImperfectionBudget::measured() {
  ImperfectionBudget b;
  b.eta_nopo = 0.98;
  b.eta_vis = 0.98;
  b.eta_pr = 0.96;
  b.eta_det = 0.95;
  b.eta_apd = 0.98;
  // 0.05 / (eta_apd * eta_opt^2) puts 5% of the heralds in the multiphoton sector.
  b.p_multi = 0.069;
  // Balanced-qubit fringe visibility 0.960 (exact, 64-point phase scan).
  b.phase_jitter = 0.27;
  return b;
}

double ImperfectionBudget::herald_purity(double zeta_tot, double zeta_dark) {
  if (!(zeta_tot > 0.0) || !(zeta_dark >= 0.0) || zeta_dark > zeta_tot) {
    throw InvalidArgument("count rates need zeta_tot > 0 and 0 <= zeta_dark <= zeta_tot");
  }
  return (zeta_tot - zeta_dark) / zeta_tot;
}

double ImperfectionBudget::optical_efficiency() const { return eta_nopo * eta_vis * eta_vis * eta_pr * eta_det; }

void ImperfectionBudget::validate() const {
  check_unit(eta_nopo, "eta_nopo");
  check_unit(eta_vis, "eta_vis");
  check_unit(eta_pr, "eta_pr");
  check_unit(eta_det, "eta_det");
  check_unit(eta_apd, "eta_apd");
  check_unit(p_multi, "p_multi");
  if (!(phase_jitter >= 0.0) || !std::isfinite(phase_jitter)) throw InvalidArgument("phase_jitter must be >= 0");
  if (zeta_tot.has_value() != zeta_dark.has_value()) {
    throw InvalidArgument("zeta_tot and zeta_dark must be given together");
  }
  if (zeta_tot) {
    const double purity = herald_purity(*zeta_tot, *zeta_dark);
    if (std::abs(purity - eta_apd) > 1e-6) {
      std::ostringstream os;
      os << "eta_apd = " << eta_apd << " disagrees with count rates, which give " << purity;
      throw InvalidArgument(os.str());
    }
  }
}

double overall_efficiency(const ImperfectionBudget& b) { return b.optical_efficiency() * b.eta_apd; }

// ---------------------------------------------------------------------------
// Qubits

TimeBinQubitSpec TimeBinQubitSpec::from_amplitudes(Complex a10, Complex a01) {
  const double n = std::sqrt(std::norm(a10) + std::norm(a01));
  if (n == 0.0) throw InvalidArgument("both qubit amplitudes vanish");
  TimeBinQubitSpec s;
  s.c0 = std::abs(a10) / n;
  s.c1 = std::abs(a01) / n;
  if (s.c0 > 0.0 && s.c1 > 0.0) {
    s.phi = wrap_phase(std::arg(a01) - std::arg(a10));
  } else {
    s.phi = 0.0;
  }
  return s;
}

FockKet TimeBinQubitSpec::ket(int dim_per_mode) const {
  validate();
  if (dim_per_mode < 2) throw InvalidArgument("a time-bin qubit needs d >= 2");
  fock::Vector v = fock::Vector::Zero(dim_per_mode * dim_per_mode);
  v(1 * dim_per_mode + 0) = c0;
  v(0 * dim_per_mode + 1) = c1 * std::polar(1.0, phi);
  return FockKet(std::move(v), dim_per_mode, 2);
}

void TimeBinQubitSpec::validate() const {
  if (c0 < 0.0 || c1 < 0.0) throw InvalidArgument("qubit amplitudes must be non-negative");
  if (std::abs(c0 * c0 + c1 * c1 - 1.0) > 1e-10) throw InvalidArgument("qubit amplitudes must satisfy c0^2 + c1^2 = 1");
}

TimeBinQubitSpec qubit_from_mzi(const MziConfig& cfg) {
  cfg.validate();
  const Complex a10 = cfg.tau1 * cfg.tau2;
  const Complex a01 = -cfg.rho1 * cfg.rho2 * std::polar(1.0, cfg.phi2);
  if (std::abs(a10) == 0.0 && std::abs(a01) == 0.0) {
    throw InvalidArgument("MZI blocks both time bins (tau1 tau2 = rho1 rho2 = 0)");
  }
  return TimeBinQubitSpec::from_amplitudes(a10, a01);
}

TimeBinQubitSpec other_port_qubit(const MziConfig& cfg) {
  cfg.validate();
  const Complex a10 = cfg.tau1 * cfg.rho2;
  const Complex a01 = cfg.rho1 * cfg.tau2 * std::polar(1.0, cfg.phi2);
  if (std::abs(a10) == 0.0 && std::abs(a01) == 0.0) {
    throw InvalidArgument("MZI blocks both time bins at the other port");
  }
  return TimeBinQubitSpec::from_amplitudes(a10, a01);
}

MziConfig mzi_for_qubit(const TimeBinQubitSpec& target, double tau1, const MziConfig& base) {
  target.validate();
  if (!(tau1 > 0.0 && tau1 < 1.0)) throw InvalidArgument("tau1 must lie strictly inside (0, 1)");
  MziConfig cfg = base;
  cfg.tau1 = tau1;
  cfg.rho1 = std::sqrt(1.0 - tau1 * tau1);
  if (target.c1 == 0.0) {
    cfg.tau2 = 1.0;
    cfg.rho2 = 0.0;
  } else {
    // tau2 / rho2 = (c0 / c1) (rho1 / tau1)
    const double r = target.c0 * cfg.rho1 / (target.c1 * cfg.tau1);
    cfg.tau2 = r / std::sqrt(1.0 + r * r);
    cfg.rho2 = 1.0 / std::sqrt(1.0 + r * r);
  }
  cfg.phi2 = wrap_phase(target.phi - std::numbers::pi);
  return cfg;
}

// ---------------------------------------------------------------------------
// Temporal modes

double temporal_mode_eval(const ModeFunction& f, double t) {
  return std::sqrt(f.gamma) * std::exp(-f.gamma * std::abs(t + f.offset));
}

double integrate_mode_product(const ModeFunction& f, const ModeFunction& g) {
  if (!(f.gamma > 0.0) || !(g.gamma > 0.0)) throw InvalidArgument("mode functions need gamma > 0");
  const double tail = 60.0 / std::min(f.gamma, g.gamma);
  std::vector<double> knots = {-f.offset, -g.offset};
  std::sort(knots.begin(), knots.end());
  std::vector<double> edges = {knots.front() - tail, knots.front()};
  if (knots.back() > knots.front()) edges.push_back(knots.back());
  edges.push_back(knots.back() + tail);

  auto integrand = [&](double t) { return temporal_mode_eval(f, t) * temporal_mode_eval(g, t); };
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    total += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, edges[i], edges[i + 1], 20,
                                                                           1e-14);
  }
  return total;
}

double mode_overlap(const MziConfig& cfg) {
  const double x = cfg.gamma * cfg.delta_t;
  return (1.0 + x) * std::exp(-x);
}

// ---------------------------------------------------------------------------
// Physical state

FockKet two_photon_state(const TimeBinQubitSpec& spec, int d) {
  spec.validate();
  if (d < 3) throw InvalidArgument("the two-photon admixture needs d >= 3");
  const Complex e = std::polar(1.0, spec.phi);
  fock::Vector v = fock::Vector::Zero(d * d);
  v(2 * d + 0) = spec.c0 * spec.c0;
  v(1 * d + 1) = std::numbers::sqrt2 * spec.c0 * spec.c1 * e;
  v(0 * d + 2) = spec.c1 * spec.c1 * e * e;
  return FockKet(std::move(v), d, 2);
}

TwoModeDensityMatrix apply_phase_jitter(const TwoModeDensityMatrix& rho, double sigma) {
  if (!(sigma >= 0.0)) throw InvalidArgument("phase jitter must be non-negative");
  if (sigma == 0.0) return rho;
  const int d = rho.dim_per_mode();
  Matrix m = rho.matrix();
  for (int k = 0; k < d; ++k) {
    for (int l = 0; l < d; ++l) {
      for (int mm = 0; mm < d; ++mm) {
        for (int n = 0; n < d; ++n) {
          const double dn = l - n;
          m(k * d + l, mm * d + n) *= std::exp(-0.5 * sigma * sigma * dn * dn);
        }
      }
    }
  }
  return TwoModeDensityMatrix::from_matrix_normalized(std::move(m), d);
}

TwoModeDensityMatrix build_physical_state(const TimeBinQubitSpec& spec, const ImperfectionBudget& b, int d) {
  spec.validate();
  b.validate();
  if (d < 2) throw InvalidArgument("physical state needs d >= 2");
  if (b.p_multi > 0.0 && d < 3) throw InvalidArgument("p_multi > 0 needs d >= 3 to hold the two-photon term");

  const fock::Vector psi = spec.ket(d).amplitudes();
  Matrix m = (1.0 - b.p_multi) * psi * psi.adjoint();
  if (b.p_multi > 0.0) {
    const fock::Vector psi2 = two_photon_state(spec, d).amplitudes();
    m += b.p_multi * psi2 * psi2.adjoint();
  }
  TwoModeDensityMatrix rho = TwoModeDensityMatrix::from_matrix(std::move(m), d);
  rho = apply_phase_jitter(rho, b.phase_jitter);
  rho = fock::apply_loss_channel(rho, b.optical_efficiency());

  Matrix out = b.eta_apd * rho.matrix();
  out(0, 0) += 1.0 - b.eta_apd;
  return TwoModeDensityMatrix::from_matrix_normalized(std::move(out), d);
}

}  // namespace timebin::generation
