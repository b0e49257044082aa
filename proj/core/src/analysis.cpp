#include "timebin/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "timebin/error.hpp"
#include "timebin/rng.hpp"

namespace timebin::analysis {

using eightport::QuadratureSample;
using fock::Complex;
using fock::Matrix;

namespace {

double wrap_phase(double phi) {
  double w = std::remainder(phi, 2.0 * std::numbers::pi);
  if (w <= -std::numbers::pi) w += 2.0 * std::numbers::pi;
  return w;
}

double single_photon_probability(const fock::SingleModeDensityMatrix& rho) {
  return rho.dim_per_mode() > 1 ? rho.matrix()(1, 1).real() : 0.0;
}

}  // namespace

void VirtualBsParams::validate() const {
  if (std::abs(tau_p * tau_p + rho_p * rho_p - 1.0) > 1e-10) {
    throw InvalidArgument("virtual beam splitter needs tau'^2 + rho'^2 = 1");
  }
  if (!std::isfinite(phi)) throw InvalidArgument("virtual beam splitter phase must be finite");
}

VirtualBsParams VirtualBsParams::inverse() const { return {tau_p, rho_p, phi + std::numbers::pi}; }

VirtualBsParams VirtualBsParams::optimal_for(const generation::TimeBinQubitSpec& spec) {
  spec.validate();
  return {spec.c0, spec.c1, wrap_phase(-spec.phi)};
}

QuadratureSample virtual_beamsplitter(const QuadratureSample& s, const VirtualBsParams& p) {
  const Complex a1(s.x1, s.p1);
  const Complex a2(s.x2, s.p2);
  const Complex e = std::polar(1.0, p.phi);
  // The sqrt2 scaling between (x, p) and alpha is common to both sides.
  const Complex b1 = p.tau_p * a1 + p.rho_p * e * a2;
  const Complex b2 = -p.rho_p * std::conj(e) * a1 + p.tau_p * a2;
  return {b1.real(), b1.imag(), b2.real(), b2.imag()};
}

std::vector<QuadratureSample> virtual_beamsplitter(std::span<const QuadratureSample> s, const VirtualBsParams& p) {
  p.validate();
  std::vector<QuadratureSample> out;
  out.reserve(s.size());
  for (const auto& q : s) out.push_back(virtual_beamsplitter(q, p));
  return out;
}

SinusoidFit fit_sinusoid(std::span<const double> phis, std::span<const double> values) {
  if (phis.size() != values.size() || phis.size() < 3) throw InvalidArgument("sinusoid fit needs >= 3 points");
  Eigen::MatrixXd a(phis.size(), 3);
  Eigen::VectorXd y(phis.size());
  for (std::size_t i = 0; i < phis.size(); ++i) {
    a(i, 0) = 1.0;
    a(i, 1) = std::cos(phis[i]);
    a(i, 2) = std::sin(phis[i]);
    y(i) = values[i];
  }
  const Eigen::Vector3d c = a.colPivHouseholderQr().solve(y);
  SinusoidFit fit;
  fit.offset = c(0);
  fit.amplitude = std::hypot(c(1), c(2));
  fit.phase_of_max = wrap_phase(std::atan2(c(2), c(1)));
  fit.phase_of_min = wrap_phase(fit.phase_of_max + std::numbers::pi);
  fit.visibility = fit.offset != 0.0 ? fit.amplitude / fit.offset : 0.0;
  return fit;
}

double grid_visibility(std::span<const double> values) {
  if (values.empty()) throw InvalidArgument("visibility of an empty curve");
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double sum = *hi + *lo;
  return sum > 0.0 ? (*hi - *lo) / sum : 0.0;
}

std::vector<double> phase_grid(int n) {
  if (n < 1) throw InvalidArgument("phase grid needs n >= 1");
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) out[i] = -std::numbers::pi + 2.0 * std::numbers::pi * i / n;
  return out;
}

Decomposition decompose_with(std::span<const QuadratureSample> samples, const VirtualBsParams& params,
                             const tomography::MleConfig& single_cfg, std::uint64_t seed) {
  params.validate();
  if (samples.empty()) throw InvalidArgument("no samples to decompose");
  const auto mixed = virtual_beamsplitter(samples, params);
  const auto data_a = eightport::make_single_mode_data(mixed, 1, rng::derive_seed(seed, "output-a"));
  const auto data_b = eightport::make_single_mode_data(mixed, 2, rng::derive_seed(seed, "output-b"));
  return {params, tomography::mle_reconstruct_single(data_a, single_cfg),
          tomography::mle_reconstruct_single(data_b, single_cfg)};
}

Decomposition decompose_at_optimum(std::span<const QuadratureSample> samples,
                                   const generation::TimeBinQubitSpec& spec,
                                   const tomography::MleConfig& single_cfg, std::uint64_t seed) {
  return decompose_with(samples, VirtualBsParams::optimal_for(spec), single_cfg, seed);
}

FringeScan fringe_scan(std::span<const QuadratureSample> samples, std::span<const double> phis,
                       const tomography::MleConfig& single_cfg, std::uint64_t seed) {
  if (samples.empty()) throw InvalidArgument("fringe scan needs samples");
  if (phis.size() < 2) throw InvalidArgument("fringe scan needs at least two phases");
  FringeScan scan;
  scan.phis.assign(phis.begin(), phis.end());
  for (std::size_t i = 0; i < phis.size(); ++i) {
    const VirtualBsParams p{1.0 / std::numbers::sqrt2, 1.0 / std::numbers::sqrt2, phis[i]};
    const auto dec = decompose_with(samples, p, single_cfg, rng::splitmix64(seed + i));
    scan.p1_d1.push_back(single_photon_probability(dec.output_a.rho));
    scan.p1_d2.push_back(single_photon_probability(dec.output_b.rho));
  }
  scan.visibility_d1 = grid_visibility(scan.p1_d1);
  scan.visibility_d2 = grid_visibility(scan.p1_d2);
  scan.visibility = 0.5 * (scan.visibility_d1 + scan.visibility_d2);
  if (phis.size() >= 3) {
    scan.fit_d1 = fit_sinusoid(scan.phis, scan.p1_d1);
    scan.fit_d2 = fit_sinusoid(scan.phis, scan.p1_d2);
  }
  return scan;
}

Populations populations(const fock::TwoModeDensityMatrix& rho) {
  if (rho.dim_per_mode() < 2) throw InvalidArgument("populations need d >= 2");
  Populations p;
  p.vacuum = rho.element(0, 0, 0, 0).real();
  p.qubit = rho.element(1, 0, 1, 0).real() + rho.element(0, 1, 0, 1).real();
  p.multiphoton = 1.0 - p.vacuum - p.qubit;
  return p;
}

Matrix qubit_submatrix(const fock::TwoModeDensityMatrix& rho) {
  if (rho.dim_per_mode() < 2) throw InvalidArgument("qubit submatrix needs d >= 2");
  const int idx[2] = {1 * rho.dim_per_mode() + 0, 0 * rho.dim_per_mode() + 1};
  Matrix s(2, 2);
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) s(a, b) = rho.matrix()(idx[a], idx[b]);
  }
  const double tr = s.trace().real();
  if (!(tr > 1e-12)) throw InvalidArgument("qubit population vanishes; submatrix undefined");
  return (0.5 * (s + s.adjoint()) / tr).eval();
}

QubitReport qubit_report(const fock::TwoModeDensityMatrix& rho, const generation::TimeBinQubitSpec& target) {
  target.validate();
  QubitReport r;
  r.populations = populations(rho);
  r.submatrix = qubit_submatrix(rho);
  r.target = target;
  r.fidelity = qubit_fidelity(r);
  return r;
}

double qubit_fidelity(const QubitReport& report) {
  fock::Vector psi(2);
  psi(0) = report.target.c0;
  psi(1) = report.target.c1 * std::polar(1.0, report.target.phi);
  psi.normalize();
  const double f = (psi.adjoint() * report.submatrix * psi)(0, 0).real();
  return std::clamp(f, 0.0, 1.0);
}

WignerGrid wigner_grid(const fock::SingleModeDensityMatrix& rho, double lo, double hi, double step) {
  if (!(hi > lo) || !(step > 0.0)) throw InvalidArgument("Wigner grid needs lo < hi and step > 0");
  const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
  WignerGrid g;
  for (std::size_t i = 0; i < n; ++i) g.xs.push_back(lo + step * static_cast<double>(i));
  g.ps = g.xs;
  g.values.reserve(n * n);
  for (double x : g.xs) {
    for (double p : g.ps) g.values.push_back(fock::wigner_function(rho, x, p));
  }
  return g;
}

double parity_wigner_origin(const fock::SingleModeDensityMatrix& rho) {
  const auto pn = fock::photon_number_distribution(rho);
  double s = 0.0;
  for (std::size_t n = 0; n < pn.size(); ++n) s += (n % 2 == 0 ? 1.0 : -1.0) * pn[n];
  return s / std::numbers::pi;
}

}  // namespace timebin::analysis
