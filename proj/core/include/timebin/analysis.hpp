#pragma once

// Post-measurement analysis: numerical recombination of the two time bins,
// fringe scans, qubit submatrices and phase-space summaries.

#include <cstdint>
#include <span>
#include <vector>

#include "timebin/eightport.hpp"
#include "timebin/generation.hpp"
#include "timebin/tomography.hpp"

namespace timebin::analysis {

/// Beam splitter applied to recorded complex amplitudes:
///   a1' = tau_p a1 + rho_p e^{i phi} a2,   a2' = -rho_p e^{-i phi} a1 + tau_p a2.
/// It is the classical image of fock::beamsplitter_unitary(d, tau_p, rho_p, phi).
struct VirtualBsParams {
  double tau_p = 1.0 / 1.4142135623730951;
  double rho_p = 1.0 / 1.4142135623730951;
  double phi = 0.0;

  void validate() const;
  /// (tau_p, rho_p, phi + pi).
  VirtualBsParams inverse() const;
  /// (c0, c1, -Phi): routes the whole qubit into output a.
  static VirtualBsParams optimal_for(const generation::TimeBinQubitSpec& spec);
};

eightport::QuadratureSample virtual_beamsplitter(const eightport::QuadratureSample& s, const VirtualBsParams& p);
std::vector<eightport::QuadratureSample> virtual_beamsplitter(std::span<const eightport::QuadratureSample> s,
                                                              const VirtualBsParams& p);

/// A + B cos(phi) + C sin(phi), least squares.
struct SinusoidFit {
  double offset = 0.0;
  double amplitude = 0.0;
  double phase_of_max = 0.0;  // (-pi, pi]
  double phase_of_min = 0.0;  // (-pi, pi]
  double visibility = 0.0;    // amplitude / offset
};

SinusoidFit fit_sinusoid(std::span<const double> phis, std::span<const double> values);

/// (max - min) / (max + min); 0 for an all-zero curve.
double grid_visibility(std::span<const double> values);

struct FringeScan {
  std::vector<double> phis;
  std::vector<double> p1_d1;
  std::vector<double> p1_d2;
  double visibility_d1 = 0.0;
  double visibility_d2 = 0.0;
  double visibility = 0.0;  // mean of the two detectors
  SinusoidFit fit_d1;
  SinusoidFit fit_d2;
};

/// `n` equally spaced phases on [-pi, pi).
std::vector<double> phase_grid(int n);

/// For each phi, recombines with tau_p = rho_p = 1/sqrt2 and reconstructs
/// both outputs from single-mode data. Every point reuses the same samples.
FringeScan fringe_scan(std::span<const eightport::QuadratureSample> samples, std::span<const double> phis,
                       const tomography::MleConfig& single_cfg, std::uint64_t seed);

struct Decomposition {
  VirtualBsParams params;
  tomography::ReconstructionResult<1> output_a;
  tomography::ReconstructionResult<1> output_b;
};

Decomposition decompose_with(std::span<const eightport::QuadratureSample> samples, const VirtualBsParams& params,
                             const tomography::MleConfig& single_cfg, std::uint64_t seed);

/// decompose_with at VirtualBsParams::optimal_for(spec).
Decomposition decompose_at_optimum(std::span<const eightport::QuadratureSample> samples,
                                   const generation::TimeBinQubitSpec& spec,
                                   const tomography::MleConfig& single_cfg, std::uint64_t seed);

struct Populations {
  double vacuum = 0.0;       // rho_{00,00}
  double qubit = 0.0;        // rho_{10,10} + rho_{01,01}
  double multiphoton = 0.0;  // the rest
};

Populations populations(const fock::TwoModeDensityMatrix& rho);

struct QubitReport {
  Populations populations;
  fock::Matrix submatrix;  // basis (|1,0>, |0,1>), unit trace
  generation::TimeBinQubitSpec target;
  double fidelity = 0.0;
};

/// Qubit block of rho, renormalized. InvalidArgument when the qubit population vanishes.
fock::Matrix qubit_submatrix(const fock::TwoModeDensityMatrix& rho);

QubitReport qubit_report(const fock::TwoModeDensityMatrix& rho, const generation::TimeBinQubitSpec& target);

/// <psi|sigma|psi> on the submatrix, psi = (c0, c1 e^{i Phi}).
double qubit_fidelity(const QubitReport& report);

struct WignerGrid {
  std::vector<double> xs;
  std::vector<double> ps;
  std::vector<double> values;  // row-major, x outer
};

WignerGrid wigner_grid(const fock::SingleModeDensityMatrix& rho, double lo = -4.0, double hi = 4.0,
                       double step = 0.05);

/// sum_n (-1)^n P(n) / pi.
double parity_wigner_origin(const fock::SingleModeDensityMatrix& rho);

}  // namespace timebin::analysis
