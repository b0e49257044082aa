#include "timebin/fock.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "timebin/error.hpp"

namespace timebin::fock {

namespace {

int checked_pow(int d, int modes) {
  if (d < 1) throw InvalidArgument("dimension per mode must be positive, got " + std::to_string(d));
  if (modes != 1 && modes != 2) {
    throw InvalidArgument("mode_count must be 1 or 2, got " + std::to_string(modes));
  }
  return modes == 1 ? d : d * d;
}

template <typename T>
T ipow(T base, int n) {
  T r(1.0);
  for (int i = 0; i < n; ++i) r *= base;
  return r;
}

double log_factorial(int n) { return std::lgamma(static_cast<double>(n) + 1.0); }

double binomial(int n, int k) {
  return std::exp(log_factorial(n) - log_factorial(k) - log_factorial(n - k));
}

// Kraus operators of pure loss on one truncated mode.
std::vector<RealMatrix> loss_kraus(int d, double eta) {
  std::vector<RealMatrix> ops;
  ops.reserve(d);
  for (int j = 0; j < d; ++j) {
    RealMatrix k = RealMatrix::Zero(d, d);
    for (int n = j; n < d; ++n) {
      double amp = std::sqrt(binomial(n, j));
      amp *= std::sqrt(ipow(eta, n - j) * ipow(1.0 - eta, j));
      k(n - j, n) = amp;
    }
    ops.push_back(std::move(k));
  }
  return ops;
}

void check_eta(double eta) {
  if (!(eta >= 0.0 && eta <= 1.0)) {
    std::ostringstream os;
    os << "loss efficiency must lie in [0, 1], got " << eta;
    throw InvalidArgument(os.str());
  }
}

Matrix hermitize(const Matrix& m) { return 0.5 * (m + m.adjoint()); }

}  // namespace

std::optional<std::string> check_density_matrix(const Matrix& m, const Tolerances& tol) {
  if (m.rows() != m.cols() || m.rows() == 0) return "matrix is not square and non-empty";
  if (!m.allFinite()) return "matrix has non-finite entries";
  const double herm = (m - m.adjoint()).cwiseAbs().maxCoeff();
  if (herm > tol.hermitian) {
    std::ostringstream os;
    os << "not Hermitian (max deviation " << herm << ")";
    return os.str();
  }
  const double tr = m.trace().real();
  if (std::abs(tr - 1.0) > tol.trace) {
    std::ostringstream os;
    os << "trace is " << tr << ", expected 1";
    return os.str();
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(hermitize(m), Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  if (lo < tol.min_eigenvalue) {
    std::ostringstream os;
    os << "not positive semidefinite (smallest eigenvalue " << lo << ")";
    return os.str();
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// FockKet

FockKet::FockKet(Vector amplitudes, int dim_per_mode, int mode_count)
    : amplitudes_(std::move(amplitudes)), dim_(dim_per_mode), modes_(mode_count) {
  const int n = checked_pow(dim_per_mode, mode_count);
  if (amplitudes_.size() != n) {
    throw InvalidArgument("ket length " + std::to_string(amplitudes_.size()) + " does not match d^modes = " +
                          std::to_string(n));
  }
}

FockKet FockKet::vacuum(int dim_per_mode, int mode_count) {
  Vector v = Vector::Zero(checked_pow(dim_per_mode, mode_count));
  v(0) = 1.0;
  return FockKet(std::move(v), dim_per_mode, mode_count);
}

FockKet FockKet::number(int dim_per_mode, int n) {
  if (n < 0 || n >= dim_per_mode) throw InvalidArgument("photon number outside truncation");
  Vector v = Vector::Zero(dim_per_mode);
  v(n) = 1.0;
  return FockKet(std::move(v), dim_per_mode, 1);
}

FockKet FockKet::number(int dim_per_mode, int n1, int n2) {
  if (n1 < 0 || n2 < 0 || n1 >= dim_per_mode || n2 >= dim_per_mode) {
    throw InvalidArgument("photon number outside truncation");
  }
  Vector v = Vector::Zero(dim_per_mode * dim_per_mode);
  v(n1 * dim_per_mode + n2) = 1.0;
  return FockKet(std::move(v), dim_per_mode, 2);
}

FockKet FockKet::normalized() const {
  const double n = norm();
  if (n == 0.0) throw InvalidArgument("cannot normalize the zero vector");
  return FockKet(amplitudes_ / n, dim_, modes_);
}

FockKet operator+(const FockKet& a, const FockKet& b) {
  if (a.dim_per_mode() != b.dim_per_mode() || a.mode_count() != b.mode_count()) {
    throw InvalidArgument("adding kets of different shapes");
  }
  return FockKet(a.amplitudes() + b.amplitudes(), a.dim_per_mode(), a.mode_count());
}

FockKet operator*(Complex c, const FockKet& k) {
  return FockKet(c * k.amplitudes(), k.dim_per_mode(), k.mode_count());
}

// ---------------------------------------------------------------------------
// DensityMatrix

template <int Modes>
DensityMatrix<Modes> DensityMatrix<Modes>::from_matrix(Matrix m, int dim_per_mode, const Tolerances& tol) {
  const int n = checked_pow(dim_per_mode, Modes);
  if (m.rows() != n || m.cols() != n) {
    throw InvalidArgument("density matrix has size " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                          ", expected " + std::to_string(n));
  }
  if (auto err = check_density_matrix(m, tol)) throw InvalidArgument("invalid density matrix: " + *err);
  return DensityMatrix(std::move(m), dim_per_mode);
}

template <int Modes>
DensityMatrix<Modes> DensityMatrix<Modes>::from_matrix_normalized(Matrix m, int dim_per_mode) {
  Matrix h = hermitize(m);
  const double tr = h.trace().real();
  if (!(tr > 0.0)) throw InvalidArgument("matrix has non-positive trace");
  h /= tr;
  return from_matrix(std::move(h), dim_per_mode);
}

template <int Modes>
DensityMatrix<Modes> DensityMatrix<Modes>::from_ket(const FockKet& ket) {
  if (ket.mode_count() != Modes) throw InvalidArgument("ket mode count does not match density matrix");
  const FockKet k = ket.normalized();
  Matrix m = k.amplitudes() * k.amplitudes().adjoint();
  return DensityMatrix(std::move(m), ket.dim_per_mode());
}

template <int Modes>
DensityMatrix<Modes> DensityMatrix<Modes>::vacuum(int dim_per_mode) {
  return from_ket(FockKet::vacuum(dim_per_mode, Modes));
}

template <int Modes>
DensityMatrix<Modes> DensityMatrix<Modes>::maximally_mixed(int dim_per_mode) {
  const int n = checked_pow(dim_per_mode, Modes);
  return DensityMatrix(Matrix::Identity(n, n) / static_cast<double>(n), dim_per_mode);
}

template class DensityMatrix<1>;
template class DensityMatrix<2>;

// ---------------------------------------------------------------------------
// Operators

Matrix annihilation_matrix(int d) {
  if (d < 2) throw InvalidArgument("annihilation operator needs d >= 2, got " + std::to_string(d));
  Matrix a = Matrix::Zero(d, d);
  for (int n = 1; n < d; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
  return a;
}

Matrix tensor_product(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

FockKet tensor_product(const FockKet& a, const FockKet& b) {
  if (a.mode_count() != 1 || b.mode_count() != 1 || a.dim_per_mode() != b.dim_per_mode()) {
    throw InvalidArgument("tensor product expects two single-mode kets of equal dimension");
  }
  Matrix k = tensor_product(Matrix(a.amplitudes()), Matrix(b.amplitudes()));
  return FockKet(k.col(0), a.dim_per_mode(), 2);
}

TwoModeDensityMatrix tensor_product(const SingleModeDensityMatrix& a, const SingleModeDensityMatrix& b) {
  if (a.dim_per_mode() != b.dim_per_mode()) throw InvalidArgument("tensor product of unequal truncations");
  return TwoModeDensityMatrix::from_matrix(tensor_product(a.matrix(), b.matrix()), a.dim_per_mode());
}

SingleModeDensityMatrix partial_trace(const TwoModeDensityMatrix& rho, int keep) {
  if (keep != 1 && keep != 2) throw InvalidArgument("mode index must be 1 or 2, got " + std::to_string(keep));
  const int d = rho.dim_per_mode();
  const Matrix& m = rho.matrix();
  Matrix out = Matrix::Zero(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      Complex s = 0.0;
      for (int t = 0; t < d; ++t) {
        s += keep == 1 ? m(i * d + t, j * d + t) : m(t * d + i, t * d + j);
      }
      out(i, j) = s;
    }
  }
  return SingleModeDensityMatrix::from_matrix_normalized(std::move(out), d);
}

Matrix beamsplitter_unitary(int d, double tau, double rho, double phi) {
  if (d < 1) throw InvalidArgument("dimension must be positive");
  if (std::abs(tau * tau + rho * rho - 1.0) > 1e-10) {
    std::ostringstream os;
    os << "beam splitter needs tau^2 + rho^2 = 1, got " << tau * tau + rho * rho;
    throw InvalidArgument(os.str());
  }
  const Complex e_plus = std::polar(1.0, phi);
  const Complex e_minus = std::conj(e_plus);
  Matrix u = Matrix::Zero(d * d, d * d);
  // (tau a1^dag - rho e^{-i phi} a2^dag)^n1 (rho e^{i phi} a1^dag + tau a2^dag)^n2 |0> / sqrt(n1! n2!)
  for (int n1 = 0; n1 < d; ++n1) {
    for (int n2 = 0; n2 < d; ++n2) {
      const int total = n1 + n2;
      const double col_norm = std::exp(-0.5 * (log_factorial(n1) + log_factorial(n2)));
      for (int j = 0; j <= n1; ++j) {
        const Complex cj = binomial(n1, j) * ipow(tau, j) * ipow<Complex>(-rho * e_minus, n1 - j);
        for (int k = 0; k <= n2; ++k) {
          const int out1 = j + k;
          const int out2 = total - out1;
          if (out1 >= d || out2 >= d) continue;
          const Complex ck = binomial(n2, k) * ipow<Complex>(rho * e_plus, k) * ipow(tau, n2 - k);
          const double ladder = std::exp(0.5 * (log_factorial(out1) + log_factorial(out2)));
          u(out1 * d + out2, n1 * d + n2) += col_norm * ladder * cj * ck;
        }
      }
    }
  }
  return u;
}

TwoModeDensityMatrix apply_unitary(const TwoModeDensityMatrix& rho, const Matrix& u) {
  if (u.rows() != rho.dim() || u.cols() != rho.dim()) throw InvalidArgument("unitary size mismatch");
  return TwoModeDensityMatrix::from_matrix_normalized(u * rho.matrix() * u.adjoint(), rho.dim_per_mode());
}

SingleModeDensityMatrix apply_loss_channel(const SingleModeDensityMatrix& rho, double eta) {
  check_eta(eta);
  const int d = rho.dim_per_mode();
  Matrix out = Matrix::Zero(d, d);
  for (const RealMatrix& k : loss_kraus(d, eta)) {
    const Matrix kc = k.cast<Complex>();
    out += kc * rho.matrix() * kc.adjoint();
  }
  return SingleModeDensityMatrix::from_matrix_normalized(std::move(out), d);
}

TwoModeDensityMatrix apply_loss_channel(const TwoModeDensityMatrix& rho, double eta, int mode) {
  check_eta(eta);
  if (mode != 1 && mode != 2) throw InvalidArgument("mode index must be 1 or 2");
  const int d = rho.dim_per_mode();
  const Matrix id = Matrix::Identity(d, d);
  Matrix out = Matrix::Zero(d * d, d * d);
  for (const RealMatrix& k : loss_kraus(d, eta)) {
    const Matrix kc = k.cast<Complex>();
    const Matrix full = mode == 1 ? tensor_product(kc, id) : tensor_product(id, kc);
    out += full * rho.matrix() * full.adjoint();
  }
  return TwoModeDensityMatrix::from_matrix_normalized(std::move(out), d);
}

TwoModeDensityMatrix apply_loss_channel(const TwoModeDensityMatrix& rho, double eta) {
  return apply_loss_channel(apply_loss_channel(rho, eta, 1), eta, 2);
}

double wigner_function(const SingleModeDensityMatrix& rho, double x, double p) {
  const int d = rho.dim_per_mode();
  const Matrix& m = rho.matrix();
  const Complex alpha(x / std::numbers::sqrt2, p / std::numbers::sqrt2);
  const double b = 4.0 * std::norm(alpha);
  double w = 0.0;
  for (int i = 0; i < d; ++i) {
    const double sign = (i % 2 == 0) ? 1.0 : -1.0;
    w += sign * m(i, i).real() * std::assoc_laguerre(i, 0, b);
    Complex power = 1.0;
    for (int j = i + 1; j < d; ++j) {
      power *= 2.0 * alpha;
      const double ratio = std::exp(0.5 * (log_factorial(i) - log_factorial(j)));
      w += 2.0 * sign * ratio * (m(i, j) * power).real() *
           std::assoc_laguerre(static_cast<unsigned>(i), static_cast<unsigned>(j - i), b);
    }
  }
  return w * std::exp(-0.5 * b) / std::numbers::pi;
}

template <int Modes>
double fidelity(const DensityMatrix<Modes>& rho, const FockKet& target) {
  if (target.mode_count() != Modes || target.dim_per_mode() != rho.dim_per_mode()) {
    throw InvalidArgument("fidelity: target and state have different shapes");
  }
  const FockKet t = target.normalized();
  const double f = (t.amplitudes().adjoint() * rho.matrix() * t.amplitudes())(0, 0).real();
  return std::clamp(f, 0.0, 1.0);
}

template double fidelity<1>(const DensityMatrix<1>&, const FockKet&);
template double fidelity<2>(const DensityMatrix<2>&, const FockKet&);

std::vector<double> photon_number_distribution(const SingleModeDensityMatrix& rho) {
  std::vector<double> p(static_cast<std::size_t>(rho.dim_per_mode()));
  for (int n = 0; n < rho.dim_per_mode(); ++n) p[static_cast<std::size_t>(n)] = std::max(0.0, rho.matrix()(n, n).real());
  return p;
}

double trace_distance(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw InvalidArgument("trace distance: size mismatch");
  Eigen::SelfAdjointEigenSolver<Matrix> es(hermitize(a - b), Eigen::EigenvaluesOnly);
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

double mean_photon_number(const SingleModeDensityMatrix& rho) {
  double n = 0.0;
  for (int i = 0; i < rho.dim_per_mode(); ++i) n += i * rho.matrix()(i, i).real();
  return n;
}

Eigen::VectorXd quadrature_wavefunctions(double x, int d) {
  Eigen::VectorXd psi(d);
  psi(0) = std::exp(-0.5 * x * x) / std::pow(std::numbers::pi, 0.25);
  if (d > 1) psi(1) = std::numbers::sqrt2 * x * psi(0);
  for (int n = 2; n < d; ++n) {
    psi(n) = std::sqrt(2.0 / n) * x * psi(n - 1) - std::sqrt((n - 1.0) / n) * psi(n - 2);
  }
  return psi;
}

Vector coherent_amplitudes(Complex alpha, int d) {
  Vector c(d);
  c(0) = std::exp(-0.5 * std::norm(alpha));
  for (int n = 1; n < d; ++n) c(n) = c(n - 1) * alpha / std::sqrt(static_cast<double>(n));
  return c;
}

}  // namespace timebin::fock
