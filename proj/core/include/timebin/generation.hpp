#pragma once

// From interferometer settings to heralded two-mode states.
//
// A weakly pumped NOPO heralded through an unbalanced Mach-Zehnder in the idler
// arm leaves the signal in
//     tau1 tau2 |1,0> - rho1 rho2 e^{i Phi2} |0,1>
// where mode 1 has the mode function f1(t) = sqrt(gamma) exp(-gamma |t|) and
// mode 2 is the same pulse advanced by the interferometer delay,
// f2(t) = sqrt(gamma) exp(-gamma |t + delta_t|).

#include <optional>

#include "timebin/fock.hpp"

namespace timebin::generation {

struct MziConfig {
  double tau1 = 1.0 / 1.4142135623730951;
  double rho1 = 1.0 / 1.4142135623730951;
  double tau2 = 1.0 / 1.4142135623730951;
  double rho2 = 1.0 / 1.4142135623730951;
  double phi2 = 0.0;       // BS-2 relative phase [rad]
  double delta_t = 242e-9; // [s]
  double gamma = 2.0 * 3.14159265358979323846 * 6.2e6;  // NOPO HWHM [rad/s]

  /// Throws InvalidArgument on non-normalized splitters or non-positive delay/bandwidth.
  void validate() const;
};

struct ModeFunction {
  double gamma = 0.0;   // [rad/s]
  double offset = 0.0;  // [s]; the pulse peaks at t = -offset
};

ModeFunction early_bin_mode(const MziConfig& cfg);  // mode 2, peaks at -delta_t
ModeFunction late_bin_mode(const MziConfig& cfg);   // mode 1, peaks at 0

struct ImperfectionBudget {
  double eta_nopo = 1.0;
  double eta_vis = 1.0;
  double eta_pr = 1.0;
  double eta_det = 1.0;
  double eta_apd = 1.0;  // herald purity; derived from count rates when those are given
  std::optional<double> zeta_tot;   // [1/s]
  std::optional<double> zeta_dark;  // [1/s]
  double p_multi = 0.0;             // two-photon admixture before loss
  double phase_jitter = 0.0;        // std-dev of the relative phase across heralds [rad]

  /// Lossless, dark-count free, single-photon.
  static ImperfectionBudget ideal();

  /// Measured efficiencies (herald purity quoted as 0.98), with the two free
  /// parameters of the model pinned to observed quantities: p_multi gives a 5%
  /// multiphoton population and phase_jitter gives a 96% fringe visibility
  /// for the balanced qubit.
  static ImperfectionBudget measured();

  /// Herald purity from count rates, (zeta_tot - zeta_dark) / zeta_tot.
  static double herald_purity(double zeta_tot, double zeta_dark);

  /// eta_nopo * eta_vis^2 * eta_pr * eta_det: transmission seen by the photon.
  double optical_efficiency() const;

  void validate() const;
};

/// c0 |1,0> + c1 e^{i Phi} |0,1> with c0, c1 >= 0.
struct TimeBinQubitSpec {
  double c0 = 1.0;
  double c1 = 0.0;
  double phi = 0.0;  // wrapped to (-pi, pi]

  static TimeBinQubitSpec from_amplitudes(fock::Complex a10, fock::Complex a01);

  fock::FockKet ket(int dim_per_mode) const;
  void validate() const;
};

/// Qubit heralded by the detector port used in the experiment.
TimeBinQubitSpec qubit_from_mzi(const MziConfig& cfg);

/// Qubit heralded by the other output port of BS-2.
TimeBinQubitSpec other_port_qubit(const MziConfig& cfg);

/// MZI settings that herald `target` through the detector port, with BS-1
/// set to `tau1`.
MziConfig mzi_for_qubit(const TimeBinQubitSpec& target, double tau1 = 1.0 / 1.4142135623730951,
                        const MziConfig& base = {});

double temporal_mode_eval(const ModeFunction& f, double t);

/// Numerical overlap integral of two mode functions (adaptive Gauss-Kronrod,
/// split at both kinks).
double integrate_mode_product(const ModeFunction& f, const ModeFunction& g);

/// Closed form of the time-bin overlap, (1 + gamma dt) exp(-gamma dt).
double mode_overlap(const MziConfig& cfg);

double overall_efficiency(const ImperfectionBudget& b);

/// Two-photon partner of the qubit, normalized:
/// (c0 a1^dag + c1 e^{iPhi} a2^dag)^2 |0,0> / sqrt(2).
fock::FockKet two_photon_state(const TimeBinQubitSpec& spec, int dim_per_mode);

/// Physical heralded state: multiphoton admixture, then phase jitter, then
/// optical loss on both modes, then the dark-count vacuum mixture.
fock::TwoModeDensityMatrix build_physical_state(const TimeBinQubitSpec& spec, const ImperfectionBudget& b,
                                                int dim_per_mode);

/// Average of the state over a Gaussian-distributed phase on mode 2.
fock::TwoModeDensityMatrix apply_phase_jitter(const fock::TwoModeDensityMatrix& rho, double sigma);

}  // namespace timebin::generation
