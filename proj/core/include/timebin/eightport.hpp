#pragma once

// Eight-port (dual-homodyne) measurement of the two time bins.
//
// Each time bin is split 50/50 and x, p are measured on the two halves. The
// record is stored at unit signal gain, so every coordinate carries one extra
// vacuum unit: for vacuum input Var(x1) = Var(p1) = 1, and in general
// Var_record(x) = Var_homodyne(x) + 1/2. The outcome (x1, p1, x2, p2) is
// distributed as the two-mode Q function with alpha_j = (x_j + i p_j)/sqrt(2).

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "timebin/fock.hpp"
#include "timebin/generation.hpp"

namespace timebin::eightport {

struct QuadratureSample {
  double x1 = 0.0;
  double p1 = 0.0;
  double x2 = 0.0;
  double p2 = 0.0;
  friend bool operator==(const QuadratureSample&, const QuadratureSample&) = default;
};

/// Two-mode tomography datum: x1 measured at theta1, x2 at theta2, both in [0, pi).
struct TomographyDatum {
  double theta1 = 0.0;
  double x1 = 0.0;
  double theta2 = 0.0;
  double x2 = 0.0;
  friend bool operator==(const TomographyDatum&, const TomographyDatum&) = default;
};

struct SingleModeDatum {
  double theta = 0.0;
  double x = 0.0;
  friend bool operator==(const SingleModeDatum&, const SingleModeDatum&) = default;
};

struct SamplerOptions {
  unsigned workers = 1;  // 0 = hardware concurrency; output does not depend on it
};

/// Exact rejection sampler for the Q function of `rho`. Proposal per mode is an
/// isotropic Gaussian with Var(x) = 1 + n_max, n_max the highest occupied Fock
/// level of that mode. The envelope is bounded by the largest eigenvalue of rho
/// times the truncated-Poisson ratio maximized on a fine radial grid; a
/// candidate that exceeds the envelope raises InternalError.
std::vector<QuadratureSample> sample_q_function(const fock::TwoModeDensityMatrix& rho, std::size_t n,
                                                std::uint64_t seed, const SamplerOptions& opts = {});

/// Joint homodyne outcomes (x1(theta), x2(theta)) with a common, uniformly
/// random local-oscillator phase per shot. No added vacuum.
std::vector<std::pair<double, double>> sample_homodyne(const fock::TwoModeDensityMatrix& rho, std::size_t n,
                                                       std::uint64_t seed, const SamplerOptions& opts = {});

double quadrature_at_phase(double x, double p, double theta);

/// Two data per sample: phases (theta1, theta2) drawn uniformly on [0, pi) and
/// their orthogonal partners (theta + pi/2 mod pi).
std::vector<TomographyDatum> make_tomography_data(std::span<const QuadratureSample> samples, std::uint64_t seed);

/// Single-mode counterpart for mode 1 or 2.
std::vector<SingleModeDatum> make_single_mode_data(std::span<const QuadratureSample> samples, int mode,
                                                   std::uint64_t seed);

struct TimeGrid {
  double start = 0.0;  // [s]
  double step = 0.0;   // [s]
  std::size_t count = 0;

  double at(std::size_t i) const { return start + step * static_cast<double>(i); }
  /// Grid covering both time bins with `margin_gammas` decay times on either side.
  static TimeGrid covering(const generation::MziConfig& cfg, double step, double margin_gammas = 6.0);
};

struct TimeTrace {
  TimeGrid grid;
  std::vector<double> values;
};

/// Per-time-point variance of the single-homodyne photocurrent
///   x(t_k) = sum_j f_j(t_k) sqrt(dt) x_j + vacuum of variance (1 - sum_j f_j(t_k)^2 dt)/2
/// where (x1, x2) are joint homodyne outcomes of `rho`. The vacuum floor is 1/2.
TimeTrace synthesize_variance_trace(const fock::TwoModeDensityMatrix& rho, const generation::MziConfig& cfg,
                                    std::size_t n_trials, const TimeGrid& grid, std::uint64_t seed,
                                    const SamplerOptions& opts = {});

struct TracePeak {
  double time = 0.0;    // [s]
  double height = 0.0;  // above the floor
};

/// Locates the two largest pulses in a variance trace by least-squares fitting
/// of the template exp(-2 gamma |t - c|) over candidate centres c on the grid.
/// Returned in time order.
std::vector<TracePeak> locate_trace_peaks(const TimeTrace& trace, double gamma, double floor = 0.5);

}  // namespace timebin::eightport
