#include "timebin/povm.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "gauss_hermite.hpp"
#include "timebin/error.hpp"

namespace timebin::tomography {

using fock::Complex;
using fock::Matrix;
using fock::RealMatrix;

namespace {

constexpr int kHermiteNodes = 200;

const detail::QuadratureRule& hermite_rule() {
  static const detail::QuadratureRule rule = detail::gauss_hermite(kHermiteNodes);
  return rule;
}

// Upper tail of the standard normal.
double upper_tail(double z) { return 0.5 * std::erfc(z / std::numbers::sqrt2); }

// Phi(a) - Phi(b) for a >= b, evaluated on whichever tail keeps precision.
double normal_mass(double a, double b) {
  if (b >= 0.0) return upper_tail(b) - upper_tail(a);
  if (a <= 0.0) return upper_tail(-a) - upper_tail(-b);
  return 1.0 - upper_tail(a) - upper_tail(-b);
}

// psi_n(y) exp(y^2/2): Hermite functions without the Gaussian factor.
void hermite_polys(double y, int d, double* out) {
  out[0] = 1.0 / std::pow(std::numbers::pi, 0.25);
  if (d > 1) out[1] = std::numbers::sqrt2 * y * out[0];
  for (int n = 2; n < d; ++n) out[n] = std::sqrt(2.0 / n) * y * out[n - 1] - std::sqrt((n - 1.0) / n) * out[n - 2];
}

Matrix rotate(const RealMatrix& ref, double theta) {
  const int d = static_cast<int>(ref.rows());
  Matrix out(d, d);
  for (int m = 0; m < d; ++m) {
    for (int n = 0; n < d; ++n) out(m, n) = ref(m, n) * std::polar(1.0, (m - n) * theta);
  }
  return out;
}

void check_dim(int d) {
  if (d < 1) throw InvalidArgument("dimension must be >= 1");
}

}  // namespace

RealMatrix quadrature_povm_reference(const Interval& bin, int d) {
  check_dim(d);
  if (!(bin.hi > bin.lo)) throw InvalidArgument("bin needs lo < hi");
  const auto& rule = hermite_rule();
  RealMatrix out = RealMatrix::Zero(d, d);
  std::vector<double> h(d);
  const double s = std::numbers::sqrt2;
  for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
    const double y = rule.nodes[q];
    const double mass = normal_mass(s * (bin.hi - y), s * (bin.lo - y));
    const double w = rule.weights[q] * mass;
    if (w == 0.0) continue;
    hermite_polys(y, d, h.data());
    for (int m = 0; m < d; ++m) {
      for (int n = 0; n <= m; ++n) out(m, n) += w * h[m] * h[n];
    }
  }
  for (int m = 0; m < d; ++m) {
    for (int n = m + 1; n < d; ++n) out(m, n) = out(n, m);
  }
  return out;
}

Matrix quadrature_povm_element(double theta, const Interval& bin, int d) {
  return rotate(quadrature_povm_reference(bin, d), theta);
}

Matrix quadrature_povm_density(double theta, double x, int d) {
  check_dim(d);
  // Int psi_m psi_n G(x - y) dy with G(u) = exp(-u^2)/sqrt(pi).
  const auto& rule = hermite_rule();
  RealMatrix ref = RealMatrix::Zero(d, d);
  std::vector<double> h(d);
  for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
    const double y = rule.nodes[q];
    const double w = rule.weights[q] * std::exp(-(x - y) * (x - y)) / std::sqrt(std::numbers::pi);
    hermite_polys(y, d, h.data());
    for (int m = 0; m < d; ++m) {
      for (int n = 0; n < d; ++n) ref(m, n) += w * h[m] * h[n];
    }
  }
  return rotate(ref, theta);
}

Matrix coherent_povm_element(Complex alpha, int d) {
  check_dim(d);
  const fock::Vector c = fock::coherent_amplitudes(alpha, d);
  return c * c.adjoint();
}

Matrix coherent_povm_element(Complex alpha1, Complex alpha2, int d) {
  check_dim(d);
  const fock::Vector c1 = fock::coherent_amplitudes(alpha1, d);
  const fock::Vector c2 = fock::coherent_amplitudes(alpha2, d);
  fock::Vector v(d * d);
  for (int k = 0; k < d; ++k) {
    for (int l = 0; l < d; ++l) v(k * d + l) = c1(k) * c2(l);
  }
  return v * v.adjoint();
}

void Binning::validate() const {
  if (!(x_range > 0.0) || !std::isfinite(x_range)) throw InvalidArgument("x_range must be positive");
  if (!(x_width > 0.0) || x_width > 2.0 * x_range) throw InvalidArgument("x_bin_width must lie in (0, 2 x_range]");
  const double n = 2.0 * x_range / x_width;
  if (std::abs(n - std::round(n)) > 1e-9 * n) {
    throw InvalidArgument("x_bin_width must divide 2 x_range into a whole number of bins");
  }
  if (theta_bins < 1) throw InvalidArgument("theta_bins must be >= 1");
}

int Binning::x_bin_count() const { return static_cast<int>(std::lround(2.0 * x_range / x_width)); }

int Binning::x_index(double x) const {
  if (!(std::abs(x) <= x_range)) {
    std::ostringstream os;
    os << "quadrature " << x << " outside the binning range [-" << x_range << ", " << x_range << "]";
    throw DataError(os.str());
  }
  const int n = x_bin_count();
  const int i = static_cast<int>(std::floor((x + x_range) / x_width));
  return std::clamp(i, 0, n - 1);
}

Interval Binning::x_interval(int index) const {
  const int n = x_bin_count();
  if (index < 0 || index >= n) throw InvalidArgument("x bin index out of range");
  Interval iv;
  iv.lo = index == 0 ? -std::numeric_limits<double>::infinity() : -x_range + index * x_width;
  iv.hi = index == n - 1 ? std::numeric_limits<double>::infinity() : -x_range + (index + 1) * x_width;
  return iv;
}

int Binning::theta_index(double theta) const {
  if (!(theta >= 0.0 && theta <= std::numbers::pi)) {
    std::ostringstream os;
    os << "phase " << theta << " outside [0, pi]";
    throw DataError(os.str());
  }
  const int i = static_cast<int>(std::floor(theta / std::numbers::pi * theta_bins));
  return std::clamp(i, 0, theta_bins - 1);
}

double Binning::theta_center(int index) const { return (index + 0.5) * std::numbers::pi / theta_bins; }

RealMatrix stacked_reference_operators(const Binning& binning, int d) {
  binning.validate();
  const int nb = binning.x_bin_count();
  RealMatrix out(d * d, nb);
  for (int b = 0; b < nb; ++b) {
    const RealMatrix a = quadrature_povm_reference(binning.x_interval(b), d);
    out.col(b) = Eigen::Map<const Eigen::VectorXd>(a.data(), d * d);
  }
  return out;
}

}  // namespace timebin::tomography
