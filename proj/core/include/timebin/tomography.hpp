#pragma once

// Maximum-likelihood state reconstruction by the RrhoR fixed-point iteration.
//
// The estimator only sees binned outcome frequencies f_i and the matching
// measurement operators Pi_i; each step maps rho -> R rho R / Tr(R rho R) with
// R = sum_i (f_i / p_i) Pi_i. The extra vacuum of the eight-port record is part
// of Pi_i, so nothing is deconvolved from the data.

#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "timebin/eightport.hpp"
#include "timebin/fock.hpp"
#include "timebin/povm.hpp"

namespace timebin::tomography {

struct MleConfig {
  int dim_per_mode = 3;
  double x_bin_width = 0.1;
  double x_range = 8.0;
  int theta_bins = 36;
  int max_iterations = 2000;
  double convergence_tol = 1e-7;  // trace distance between successive iterates
  bool dilution = true;           // back off to (I + eps R)/(1 + eps) if the likelihood drops
  bool accelerate = true;         // squared extrapolation over pairs of steps

  void validate() const;
  Binning binning() const { return {x_range, x_bin_width, theta_bins}; }
};

template <int Modes>
struct ReconstructionResult {
  fock::DensityMatrix<Modes> rho;
  int iterations = 0;
  double final_delta = 0.0;
  double log_likelihood = 0.0;
  bool converged = false;
  std::vector<double> likelihood_history;  // one entry per accepted iterate, starting point included
};

/// Outcomes with nonzero counts and their operators, in a form the iteration
/// can evaluate cheaply.
class LikelihoodModel {
 public:
  virtual ~LikelihoodModel() = default;
  /// Hilbert-space dimension of rho.
  virtual int dim() const = 0;
  /// Normalized observed frequencies, one per outcome.
  virtual const std::vector<double>& frequencies() const = 0;
  /// p_i = Tr(Pi_i rho) for every outcome.
  virtual void probabilities(const fock::Matrix& rho, std::vector<double>& p) const = 0;
  /// sum_i w_i Pi_i.
  virtual fock::Matrix weighted_sum(const std::vector<double>& w) const = 0;

  std::size_t outcome_count() const { return frequencies().size(); }
};

/// Two-mode quadrature data, binned on (theta1, theta2, x1, x2).
class TwoModeQuadratureModel final : public LikelihoodModel {
 public:
  TwoModeQuadratureModel(std::span<const eightport::TomographyDatum> data, const MleConfig& cfg);
  int dim() const override { return d_ * d_; }
  const std::vector<double>& frequencies() const override { return freq_; }
  void probabilities(const fock::Matrix& rho, std::vector<double>& p) const override;
  fock::Matrix weighted_sum(const std::vector<double>& w) const override;

 private:
  struct Group {
    fock::Vector phase;  // e^{i(k theta1 + l theta2)} per basis state |k,l>
    std::size_t begin = 0, end = 0;
  };
  int d_;
  fock::RealMatrix stack_;  // vec(A_b) columns
  std::vector<Group> groups_;
  std::vector<int> b1_, b2_;
  std::vector<double> freq_;
};

/// Single-mode quadrature data, binned on (theta, x).
class SingleModeQuadratureModel final : public LikelihoodModel {
 public:
  SingleModeQuadratureModel(std::span<const eightport::SingleModeDatum> data, const MleConfig& cfg);
  int dim() const override { return d_; }
  const std::vector<double>& frequencies() const override { return freq_; }
  void probabilities(const fock::Matrix& rho, std::vector<double>& p) const override;
  fock::Matrix weighted_sum(const std::vector<double>& w) const override;

 private:
  struct Group {
    fock::Vector phase;
    std::size_t begin = 0, end = 0;
  };
  int d_;
  fock::RealMatrix stack_;
  std::vector<Group> groups_;
  std::vector<int> bin_;
  std::vector<double> freq_;
};

/// Raw eight-port samples, each one an outcome of the coherent-state POVM.
class CoherentSampleModel final : public LikelihoodModel {
 public:
  CoherentSampleModel(std::span<const eightport::QuadratureSample> samples, int dim_per_mode);
  int dim() const override { return static_cast<int>(v_.rows()); }
  const std::vector<double>& frequencies() const override { return freq_; }
  void probabilities(const fock::Matrix& rho, std::vector<double>& p) const override;
  fock::Matrix weighted_sum(const std::vector<double>& w) const override;

 private:
  fock::Matrix v_;  // column i = truncated |alpha1_i, alpha2_i>
  std::vector<double> freq_;
};

/// Arbitrary operators with counts.
class ExplicitEffectsModel final : public LikelihoodModel {
 public:
  ExplicitEffectsModel(std::vector<fock::Matrix> effects, std::vector<double> counts);
  int dim() const override { return static_cast<int>(effects_.front().rows()); }
  const std::vector<double>& frequencies() const override { return freq_; }
  void probabilities(const fock::Matrix& rho, std::vector<double>& p) const override;
  fock::Matrix weighted_sum(const std::vector<double>& w) const override;

 private:
  std::vector<fock::Matrix> effects_;
  std::vector<double> freq_;
};

struct RrhoOutcome {
  fock::Matrix rho;
  int iterations = 0;
  double final_delta = 0.0;
  double log_likelihood = 0.0;
  bool converged = false;
  std::vector<double> likelihood_history;
};

/// Runs the iteration from `start` (maximally mixed when absent).
/// `iterations` in the outcome counts RrhoR maps applied, including the ones
/// spent on extrapolated points.
RrhoOutcome run_rrho(const LikelihoodModel& model, const MleConfig& cfg,
                     const std::optional<fock::Matrix>& start = std::nullopt);

/// sum_i f_i ln p_i; -infinity when an observed outcome has zero probability.
double log_likelihood(const LikelihoodModel& model, const fock::Matrix& rho);
double log_likelihood(const fock::TwoModeDensityMatrix& rho, std::span<const eightport::TomographyDatum> data,
                      const MleConfig& cfg);
double log_likelihood(const fock::SingleModeDensityMatrix& rho, std::span<const eightport::SingleModeDatum> data,
                      const MleConfig& cfg);

ReconstructionResult<2> mle_reconstruct(std::span<const eightport::TomographyDatum> data, const MleConfig& cfg);
ReconstructionResult<1> mle_reconstruct_single(std::span<const eightport::SingleModeDatum> data,
                                               const MleConfig& cfg);
/// Reconstruction from the raw samples with the coherent-state POVM.
ReconstructionResult<2> mle_reconstruct_coherent(std::span<const eightport::QuadratureSample> samples,
                                                 const MleConfig& cfg);

}  // namespace timebin::tomography
