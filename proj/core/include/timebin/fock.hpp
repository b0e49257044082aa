#pragma once

// Truncated Fock-space numerics.
//
// Conventions used everywhere in this library:
//  * hbar = 1, x = (a + a^dag)/sqrt(2), p = (a - a^dag)/(i sqrt(2)); the vacuum
//    has Var(x) = Var(p) = 1/2.
//  * Two-mode basis |n1, n2> is flattened mode-1-major: index = n1 * d + n2.
//    kron(A, B) therefore acts with A on mode 1 and B on mode 2.
//  * Density matrices are rho = |psi><psi|, i.e. rho(a, b) = psi(a) conj(psi(b)).
//    For (|1,0> - i|0,1>)/sqrt(2) this gives rho_{10,01} = +0.5i.
//  * Beam splitter (tau, rho, phi) acts on creation operators as
//      a1^dag -> tau a1^dag - rho e^{-i phi} a2^dag
//      a2^dag -> rho e^{i phi} a1^dag + tau a2^dag.

#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace timebin::fock {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;

struct Tolerances {
  double hermitian = 1e-10;
  double trace = 1e-10;
  double min_eigenvalue = -1e-9;
};

/// Returns a description of the first violated density-matrix invariant, or
/// nothing when `m` is Hermitian, unit-trace and positive semidefinite.
std::optional<std::string> check_density_matrix(const Matrix& m, const Tolerances& tol = {});

/// Pure state of one or two truncated bosonic modes.
class FockKet {
 public:
  FockKet(Vector amplitudes, int dim_per_mode, int mode_count);

  static FockKet vacuum(int dim_per_mode, int mode_count);
  /// |n> for one mode.
  static FockKet number(int dim_per_mode, int n);
  /// |n1, n2>.
  static FockKet number(int dim_per_mode, int n1, int n2);

  const Vector& amplitudes() const { return amplitudes_; }
  int dim_per_mode() const { return dim_; }
  int mode_count() const { return modes_; }
  double norm() const { return amplitudes_.norm(); }

  FockKet normalized() const;

 private:
  Vector amplitudes_;
  int dim_;
  int modes_;
};

FockKet operator+(const FockKet& a, const FockKet& b);
FockKet operator*(Complex c, const FockKet& k);

/// Density operator on `Modes` truncated modes (1 or 2), validated on
/// construction. Immutable.
template <int Modes>
class DensityMatrix {
  static_assert(Modes == 1 || Modes == 2);

 public:
  static constexpr int mode_count = Modes;

  /// Throws InvalidArgument if the matrix breaks any invariant.
  static DensityMatrix from_matrix(Matrix m, int dim_per_mode, const Tolerances& tol = {});
  /// Hermitizes and rescales to unit trace before validating. For outputs of
  /// iterative numerics that accumulate O(eps) asymmetry.
  static DensityMatrix from_matrix_normalized(Matrix m, int dim_per_mode);
  static DensityMatrix from_ket(const FockKet& ket);
  static DensityMatrix vacuum(int dim_per_mode);
  static DensityMatrix maximally_mixed(int dim_per_mode);

  const Matrix& matrix() const { return m_; }
  int dim_per_mode() const { return dim_; }
  int dim() const { return static_cast<int>(m_.rows()); }

  /// <k,l| rho |m,n> for two modes.
  Complex element(int k, int l, int m, int n) const
    requires(Modes == 2)
  {
    return m_(k * dim_ + l, m * dim_ + n);
  }
  Complex element(int m, int n) const
    requires(Modes == 1)
  {
    return m_(m, n);
  }

 private:
  DensityMatrix(Matrix m, int d) : m_(std::move(m)), dim_(d) {}
  Matrix m_;
  int dim_;
};

using SingleModeDensityMatrix = DensityMatrix<1>;
using TwoModeDensityMatrix = DensityMatrix<2>;

/// Truncated annihilation operator: sqrt(n) at (n-1, n).
Matrix annihilation_matrix(int d);

Matrix tensor_product(const Matrix& a, const Matrix& b);
FockKet tensor_product(const FockKet& a, const FockKet& b);
TwoModeDensityMatrix tensor_product(const SingleModeDensityMatrix& a,
                                    const SingleModeDensityMatrix& b);

/// Reduced state of mode `keep` (1 or 2).
SingleModeDensityMatrix partial_trace(const TwoModeDensityMatrix& rho, int keep);

/// Fock-space matrix of the beam splitter on two modes truncated at d.
/// Columns |n1,n2> with n1 + n2 <= d - 1 are exact; higher-photon columns
/// lose the amplitude that leaves the truncated space.
Matrix beamsplitter_unitary(int d, double tau, double rho, double phi);

TwoModeDensityMatrix apply_unitary(const TwoModeDensityMatrix& rho, const Matrix& u);

/// Pure loss with power transmission `eta` on every mode.
SingleModeDensityMatrix apply_loss_channel(const SingleModeDensityMatrix& rho, double eta);
TwoModeDensityMatrix apply_loss_channel(const TwoModeDensityMatrix& rho, double eta);

/// Loss on a single mode (1 or 2) of a two-mode state.
TwoModeDensityMatrix apply_loss_channel(const TwoModeDensityMatrix& rho, double eta, int mode);

/// Wigner function W(x, p), normalized so that it integrates to one over dx dp.
double wigner_function(const SingleModeDensityMatrix& rho, double x, double p);

/// <psi|rho|psi> with psi normalized internally.
template <int Modes>
double fidelity(const DensityMatrix<Modes>& rho, const FockKet& target);

std::vector<double> photon_number_distribution(const SingleModeDensityMatrix& rho);

/// Half the trace norm of a - b (both Hermitian).
double trace_distance(const Matrix& a, const Matrix& b);

double mean_photon_number(const SingleModeDensityMatrix& rho);

/// Position-representation number states psi_n(x), n = 0..d-1, for vacuum
/// variance 1/2: psi_0(x) = pi^{-1/4} exp(-x^2/2).
Eigen::VectorXd quadrature_wavefunctions(double x, int d);

/// Truncated coherent-state amplitudes exp(-|alpha|^2/2) alpha^n / sqrt(n!).
Vector coherent_amplitudes(Complex alpha, int d);

}  // namespace timebin::fock
