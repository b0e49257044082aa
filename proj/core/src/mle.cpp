#include "timebin/tomography.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "timebin/error.hpp"

namespace timebin::tomography {

using fock::Complex;
using fock::Matrix;
using fock::RealMatrix;
using fock::Vector;

namespace {

constexpr double kProbabilityFloor = 1e-300;
constexpr double kLikelihoodSlack = 1e-10;
constexpr double kEigenFloor = 1e-12;

Matrix hermitize(const Matrix& m) { return 0.5 * (m + m.adjoint()); }

Matrix normalized_sandwich(const Matrix& r, const Matrix& rho) {
  Matrix next = hermitize(r * rho * r);
  const double tr = next.trace().real();
  if (!(tr > 0.0)) throw InternalError("RrhoR produced a state with non-positive trace");
  return next / tr;
}

double sum_log(const std::vector<double>& f, const std::vector<double>& p) {
  double total = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) total += f[i] * std::log(std::max(p[i], kProbabilityFloor));
  return total;
}

// Counts per sorted key, as (key, count) runs.
std::vector<std::pair<std::uint64_t, std::size_t>> count_keys(std::vector<std::uint64_t> keys) {
  std::sort(keys.begin(), keys.end());
  std::vector<std::pair<std::uint64_t, std::size_t>> runs;
  for (std::uint64_t k : keys) {
    if (!runs.empty() && runs.back().first == k) {
      ++runs.back().second;
    } else {
      runs.emplace_back(k, 1);
    }
  }
  return runs;
}

Vector phase_vector(int d, double theta) {
  Vector v(d);
  for (int n = 0; n < d; ++n) v(n) = std::polar(1.0, n * theta);
  return v;
}

}  // namespace

void MleConfig::validate() const {
  if (dim_per_mode < 1) throw InvalidArgument("dim_per_mode must be >= 1");
  binning().validate();
  if (max_iterations < 1) throw InvalidArgument("max_iterations must be >= 1");
  if (!(convergence_tol > 0.0)) throw InvalidArgument("convergence_tol must be positive");
}

// ---------------------------------------------------------------------------
// Two-mode quadrature model.
//
// Within a phase group, rho' = V^dag rho V with V = diag(e^{i(k t1 + l t2)}) and
// p(b1, b2) = sum X_{(k,l),(m,n)} A_b1[k,m] A_b2[l,n], X = Re rho'. Regrouping X
// as Y_{(k,m),(l,n)} turns the contraction over mode 1 into one small matrix
// product for all x bins at once.

TwoModeQuadratureModel::TwoModeQuadratureModel(std::span<const eightport::TomographyDatum> data,
                                               const MleConfig& cfg)
    : d_(cfg.dim_per_mode) {
  cfg.validate();
  if (data.empty()) throw DataError("no tomography data");
  const Binning bins = cfg.binning();
  const std::uint64_t nx = bins.x_bin_count();
  const std::uint64_t nt = bins.theta_bins;
  std::vector<std::uint64_t> keys;
  keys.reserve(data.size());
  for (const auto& dt : data) {
    const std::uint64_t t1 = bins.theta_index(dt.theta1);
    const std::uint64_t t2 = bins.theta_index(dt.theta2);
    const std::uint64_t b1 = bins.x_index(dt.x1);
    const std::uint64_t b2 = bins.x_index(dt.x2);
    keys.push_back(((t1 * nt + t2) * nx + b1) * nx + b2);
  }
  const auto runs = count_keys(std::move(keys));
  const double total = static_cast<double>(data.size());

  stack_ = stacked_reference_operators(bins, d_);
  std::uint64_t current = std::numeric_limits<std::uint64_t>::max();
  for (const auto& [key, count] : runs) {
    const std::uint64_t group = key / (nx * nx);
    if (group != current) {
      if (!groups_.empty()) groups_.back().end = freq_.size();
      current = group;
      const double th1 = bins.theta_center(static_cast<int>(group / nt));
      const double th2 = bins.theta_center(static_cast<int>(group % nt));
      Group g;
      g.phase = Vector(d_ * d_);
      for (int k = 0; k < d_; ++k) {
        for (int l = 0; l < d_; ++l) g.phase(k * d_ + l) = std::polar(1.0, k * th1 + l * th2);
      }
      g.begin = freq_.size();
      groups_.push_back(std::move(g));
    }
    b1_.push_back(static_cast<int>((key / nx) % nx));
    b2_.push_back(static_cast<int>(key % nx));
    freq_.push_back(static_cast<double>(count) / total);
  }
  groups_.back().end = freq_.size();
}

void TwoModeQuadratureModel::probabilities(const Matrix& rho, std::vector<double>& p) const {
  const int d = d_;
  const int dd = d * d;
  p.resize(freq_.size());
  RealMatrix y(dd, dd);
  for (const auto& g : groups_) {
    for (int k = 0; k < d; ++k) {
      for (int l = 0; l < d; ++l) {
        const int a = k * d + l;
        for (int m = 0; m < d; ++m) {
          for (int n = 0; n < d; ++n) {
            const int b = m * d + n;
            y(k + m * d, l + n * d) = (std::conj(g.phase(a)) * rho(a, b) * g.phase(b)).real();
          }
        }
      }
    }
    const RealMatrix t = y.transpose() * stack_;
    for (std::size_t i = g.begin; i < g.end; ++i) p[i] = t.col(b1_[i]).dot(stack_.col(b2_[i]));
  }
}

Matrix TwoModeQuadratureModel::weighted_sum(const std::vector<double>& w) const {
  const int d = d_;
  const int dd = d * d;
  Matrix r = Matrix::Zero(dd, dd);
  RealMatrix c(dd, stack_.cols());
  for (const auto& g : groups_) {
    c.setZero();
    for (std::size_t i = g.begin; i < g.end; ++i) c.col(b1_[i]) += w[i] * stack_.col(b2_[i]);
    const RealMatrix kv = stack_ * c.transpose();
    for (int k = 0; k < d; ++k) {
      for (int l = 0; l < d; ++l) {
        const int a = k * d + l;
        for (int m = 0; m < d; ++m) {
          for (int n = 0; n < d; ++n) {
            const int b = m * d + n;
            r(a, b) += g.phase(a) * kv(k + m * d, l + n * d) * std::conj(g.phase(b));
          }
        }
      }
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// Single-mode quadrature model.

SingleModeQuadratureModel::SingleModeQuadratureModel(std::span<const eightport::SingleModeDatum> data,
                                                     const MleConfig& cfg)
    : d_(cfg.dim_per_mode) {
  cfg.validate();
  if (data.empty()) throw DataError("no tomography data");
  const Binning bins = cfg.binning();
  const std::uint64_t nx = bins.x_bin_count();
  std::vector<std::uint64_t> keys;
  keys.reserve(data.size());
  for (const auto& dt : data) {
    keys.push_back(static_cast<std::uint64_t>(bins.theta_index(dt.theta)) * nx + bins.x_index(dt.x));
  }
  const auto runs = count_keys(std::move(keys));
  const double total = static_cast<double>(data.size());

  stack_ = stacked_reference_operators(bins, d_);
  std::uint64_t current = std::numeric_limits<std::uint64_t>::max();
  for (const auto& [key, count] : runs) {
    const std::uint64_t t = key / nx;
    if (t != current) {
      if (!groups_.empty()) groups_.back().end = freq_.size();
      current = t;
      groups_.push_back({phase_vector(d_, bins.theta_center(static_cast<int>(t))), freq_.size(), 0});
    }
    bin_.push_back(static_cast<int>(key % nx));
    freq_.push_back(static_cast<double>(count) / total);
  }
  groups_.back().end = freq_.size();
}

void SingleModeQuadratureModel::probabilities(const Matrix& rho, std::vector<double>& p) const {
  p.resize(freq_.size());
  RealMatrix x(d_, d_);
  for (const auto& g : groups_) {
    for (int m = 0; m < d_; ++m) {
      for (int n = 0; n < d_; ++n) x(m, n) = (std::conj(g.phase(m)) * rho(m, n) * g.phase(n)).real();
    }
    const Eigen::VectorXd all = stack_.transpose() * Eigen::Map<const Eigen::VectorXd>(x.data(), d_ * d_);
    for (std::size_t i = g.begin; i < g.end; ++i) p[i] = all(bin_[i]);
  }
}

Matrix SingleModeQuadratureModel::weighted_sum(const std::vector<double>& w) const {
  Matrix r = Matrix::Zero(d_, d_);
  Eigen::VectorXd c(stack_.cols());
  for (const auto& g : groups_) {
    c.setZero();
    for (std::size_t i = g.begin; i < g.end; ++i) c(bin_[i]) += w[i];
    const Eigen::VectorXd kv = stack_ * c;
    for (int m = 0; m < d_; ++m) {
      for (int n = 0; n < d_; ++n) r(m, n) += g.phase(m) * kv(m + n * d_) * std::conj(g.phase(n));
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// Coherent-state POVM on raw samples.

CoherentSampleModel::CoherentSampleModel(std::span<const eightport::QuadratureSample> samples, int d) {
  if (d < 1) throw InvalidArgument("dim_per_mode must be >= 1");
  if (samples.empty()) throw DataError("no samples");
  v_.resize(d * d, static_cast<Eigen::Index>(samples.size()));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    const Vector c1 = fock::coherent_amplitudes(Complex(s.x1, s.p1) / std::sqrt(2.0), d);
    const Vector c2 = fock::coherent_amplitudes(Complex(s.x2, s.p2) / std::sqrt(2.0), d);
    for (int k = 0; k < d; ++k) {
      for (int l = 0; l < d; ++l) v_(k * d + l, static_cast<Eigen::Index>(i)) = c1(k) * c2(l);
    }
  }
  freq_.assign(samples.size(), 1.0 / static_cast<double>(samples.size()));
}

void CoherentSampleModel::probabilities(const Matrix& rho, std::vector<double>& p) const {
  const Matrix rv = rho * v_;
  p.resize(freq_.size());
  for (Eigen::Index i = 0; i < v_.cols(); ++i) p[i] = v_.col(i).dot(rv.col(i)).real();
}

Matrix CoherentSampleModel::weighted_sum(const std::vector<double>& w) const {
  const Eigen::Map<const Eigen::VectorXd> wv(w.data(), static_cast<Eigen::Index>(w.size()));
  return v_ * wv.asDiagonal() * v_.adjoint();
}

// ---------------------------------------------------------------------------
// Explicit operators.

ExplicitEffectsModel::ExplicitEffectsModel(std::vector<Matrix> effects, std::vector<double> counts)
    : effects_(std::move(effects)) {
  if (effects_.empty() || effects_.size() != counts.size()) {
    throw InvalidArgument("need one count per effect and at least one effect");
  }
  double total = 0.0;
  for (double c : counts) {
    if (!(c >= 0.0)) throw InvalidArgument("counts must be non-negative");
    total += c;
  }
  if (!(total > 0.0)) throw InvalidArgument("counts sum to zero");
  for (double c : counts) freq_.push_back(c / total);
}

void ExplicitEffectsModel::probabilities(const Matrix& rho, std::vector<double>& p) const {
  p.resize(effects_.size());
  for (std::size_t i = 0; i < effects_.size(); ++i) p[i] = (effects_[i] * rho).trace().real();
}

Matrix ExplicitEffectsModel::weighted_sum(const std::vector<double>& w) const {
  Matrix r = Matrix::Zero(dim(), dim());
  for (std::size_t i = 0; i < effects_.size(); ++i) r += w[i] * effects_[i];
  return r;
}

// ---------------------------------------------------------------------------
// Iteration.

namespace {

struct Iterate {
  Matrix rho;
  std::vector<double> p;
  double ll = 0.0;
};

class RrhoMap {
 public:
  RrhoMap(const LikelihoodModel& model, bool dilution)
      : model_(model), f_(model.frequencies()), dilution_(dilution), w_(f_.size()) {}

  Iterate evaluate(Matrix rho) const {
    Iterate x{std::move(rho), {}, 0.0};
    model_.probabilities(x.rho, x.p);
    x.ll = sum_log(f_, x.p);
    return x;
  }

  // One RrhoR step, diluted towards the identity if the likelihood drops.
  Iterate step(const Iterate& x) {
    for (std::size_t i = 0; i < f_.size(); ++i) w_[i] = f_[i] / std::max(x.p[i], kProbabilityFloor);
    const Matrix r = model_.weighted_sum(w_);
    Iterate next = evaluate(normalized_sandwich(r, x.rho));
    if (dilution_ && next.ll < x.ll - kLikelihoodSlack) {
      const Matrix id = Matrix::Identity(r.rows(), r.cols());
      for (double eps = 1.0; eps > 1e-8; eps *= 0.5) {
        next = evaluate(normalized_sandwich((id + eps * r) / (1.0 + eps), x.rho));
        if (next.ll >= x.ll - kLikelihoodSlack) break;
      }
    }
    return next;
  }

 private:
  const LikelihoodModel& model_;
  const std::vector<double>& f_;
  bool dilution_;
  std::vector<double> w_;
};

// Unit-trace state with eigenvalues raised to at least `floor`.
Matrix clip_to_states(const Matrix& m, double floor) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  const Eigen::VectorXd lam = es.eigenvalues().cwiseMax(floor);
  Matrix out = es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().adjoint();
  return hermitize(out) / lam.sum();
}

}  // namespace

RrhoOutcome run_rrho(const LikelihoodModel& model, const MleConfig& cfg, const std::optional<Matrix>& start) {
  cfg.validate();
  const int dim = model.dim();
  Matrix rho0 = start ? hermitize(*start) : Matrix(Matrix::Identity(dim, dim) / static_cast<double>(dim));
  if (rho0.rows() != dim || rho0.cols() != dim) throw InvalidArgument("start state has the wrong dimension");

  RrhoMap map(model, cfg.dilution);
  Iterate x = map.evaluate(std::move(rho0));
  RrhoOutcome out;
  out.likelihood_history.push_back(x.ll);
  out.final_delta = std::numeric_limits<double>::infinity();

  int steps = 0;
  while (steps < cfg.max_iterations) {
    Iterate next;
    if (!cfg.accelerate || steps + 2 > cfg.max_iterations) {
      next = map.step(x);
      steps += 1;
    } else {
      // Squared extrapolation over two steps (SQUAREM). The jump is pulled
      // back into the state space by flooring its eigenvalues, settled with
      // one more map, and kept only if it beats the plain double step.
      Iterate x1 = map.step(x);
      Iterate x2 = map.step(x1);
      steps += 2;
      next = std::move(x2);
      const Matrix r = x1.rho - x.rho;
      const Matrix v = next.rho - x1.rho - r;
      const double vn = v.norm();
      if (vn > 0.0 && steps < cfg.max_iterations) {
        double alpha = -r.norm() / vn;
        for (int tries = 0; alpha < -1.0 && tries < 6; ++tries, alpha = 0.5 * (alpha - 1.0)) {
          Matrix jump = clip_to_states(x.rho - 2.0 * alpha * r + alpha * alpha * v, kEigenFloor);
          Iterate settled = map.step(map.evaluate(std::move(jump)));
          steps += 1;
          if (settled.ll >= next.ll) {
            next = std::move(settled);
            break;
          }
          if (steps >= cfg.max_iterations) break;
        }
      }
    }

    out.final_delta = fock::trace_distance(next.rho, x.rho);
    x = std::move(next);
    out.likelihood_history.push_back(x.ll);
    if (out.final_delta < cfg.convergence_tol) {
      out.converged = true;
      break;
    }
  }
  out.iterations = steps;
  out.rho = std::move(x.rho);
  out.log_likelihood = x.ll;
  return out;
}

double log_likelihood(const LikelihoodModel& model, const Matrix& rho) {
  std::vector<double> p;
  model.probabilities(rho, p);
  const auto& f = model.frequencies();
  double total = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (f[i] == 0.0) continue;
    if (!(p[i] > 0.0)) return -std::numeric_limits<double>::infinity();
    total += f[i] * std::log(p[i]);
  }
  return total;
}

double log_likelihood(const fock::TwoModeDensityMatrix& rho, std::span<const eightport::TomographyDatum> data,
                      const MleConfig& cfg) {
  if (rho.dim_per_mode() != cfg.dim_per_mode) throw InvalidArgument("state dimension differs from the MLE config");
  return log_likelihood(TwoModeQuadratureModel(data, cfg), rho.matrix());
}

double log_likelihood(const fock::SingleModeDensityMatrix& rho, std::span<const eightport::SingleModeDatum> data,
                      const MleConfig& cfg) {
  if (rho.dim_per_mode() != cfg.dim_per_mode) throw InvalidArgument("state dimension differs from the MLE config");
  return log_likelihood(SingleModeQuadratureModel(data, cfg), rho.matrix());
}

namespace {

template <int Modes>
ReconstructionResult<Modes> finish(RrhoOutcome&& o, int d) {
  return ReconstructionResult<Modes>{fock::DensityMatrix<Modes>::from_matrix_normalized(std::move(o.rho), d),
                                     o.iterations,
                                     o.final_delta,
                                     o.log_likelihood,
                                     o.converged,
                                     std::move(o.likelihood_history)};
}

}  // namespace

ReconstructionResult<2> mle_reconstruct(std::span<const eightport::TomographyDatum> data, const MleConfig& cfg) {
  const TwoModeQuadratureModel model(data, cfg);
  return finish<2>(run_rrho(model, cfg), cfg.dim_per_mode);
}

ReconstructionResult<1> mle_reconstruct_single(std::span<const eightport::SingleModeDatum> data,
                                               const MleConfig& cfg) {
  const SingleModeQuadratureModel model(data, cfg);
  return finish<1>(run_rrho(model, cfg), cfg.dim_per_mode);
}

ReconstructionResult<2> mle_reconstruct_coherent(std::span<const eightport::QuadratureSample> samples,
                                                 const MleConfig& cfg) {
  cfg.validate();
  const CoherentSampleModel model(samples, cfg.dim_per_mode);
  return finish<2>(run_rrho(model, cfg), cfg.dim_per_mode);
}

}  // namespace timebin::tomography
