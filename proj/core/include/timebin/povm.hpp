#pragma once

// Measurement operators for the eight-port record.
//
// A recorded quadrature at phase theta is the homodyne value x_theta plus an
// independent Gaussian of variance 1/2, so the bin operator is
//   <m|Pi(theta, [lo,hi])|n> = e^{i(m-n)theta} Int dy psi_m(y) psi_n(y) W(y),
//   W(y) = Phi(sqrt2 (hi - y)) - Phi(sqrt2 (lo - y)),
// with Phi the standard normal CDF. The y integral is done by Gauss-Hermite
// quadrature, exact up to rounding for the polynomial part.

#include <limits>
#include <vector>

#include "timebin/fock.hpp"

namespace timebin::tomography {

struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
};

/// Bin operator at theta = 0; real symmetric, d x d.
fock::RealMatrix quadrature_povm_reference(const Interval& bin, int d);

/// Bin operator at phase theta.
fock::Matrix quadrature_povm_element(double theta, const Interval& bin, int d);

/// Operator-valued density at a single point x (integrates over x to the identity).
fock::Matrix quadrature_povm_density(double theta, double x, int d);

/// |alpha><alpha| on the truncated space. The Q-function density is this over pi.
fock::Matrix coherent_povm_element(fock::Complex alpha, int d);

/// |alpha1, alpha2><alpha1, alpha2|. The two-mode density is this over pi^2.
fock::Matrix coherent_povm_element(fock::Complex alpha1, fock::Complex alpha2, int d);

/// Quadrature and phase discretization. The x bins tile [-x_range, x_range];
/// the two outermost bins extend to -inf and +inf so that the bin operators at
/// each phase sum to the identity. Phases are mapped to the centre of one of
/// `theta_bins` equal bins on [0, pi).
struct Binning {
  double x_range = 8.0;
  double x_width = 0.1;
  int theta_bins = 36;

  void validate() const;
  int x_bin_count() const;
  /// DataError if |x| > x_range.
  int x_index(double x) const;
  Interval x_interval(int index) const;
  /// DataError outside [0, pi]; pi itself lands in the last bin.
  int theta_index(double theta) const;
  double theta_center(int index) const;
};

/// Reference operators of every x bin, stored as columns vec(A_b) of a
/// d^2 x n_bins matrix (column-major vec).
fock::RealMatrix stacked_reference_operators(const Binning& binning, int d);

}  // namespace timebin::tomography
