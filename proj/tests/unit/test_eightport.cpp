#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "stats.hpp"
#include "timebin/eightport.hpp"
#include "timebin/error.hpp"
#include "timebin/generation.hpp"

using namespace timebin;
using eightport::QuadratureSample;

namespace {

fock::TwoModeDensityMatrix number_state(int d, int n1, int n2) {
  return fock::TwoModeDensityMatrix::from_ket(fock::FockKet::number(d, n1, n2));
}

fock::TwoModeDensityMatrix qubit(double c0, double c1, double phi, int d = 2) {
  return fock::TwoModeDensityMatrix::from_ket(generation::TimeBinQubitSpec{c0, c1, phi}.ket(d));
}

std::vector<double> radial(const std::vector<QuadratureSample>& s, int mode) {
  std::vector<double> r;
  r.reserve(s.size());
  for (const auto& q : s) r.push_back(mode == 1 ? 0.5 * (q.x1 * q.x1 + q.p1 * q.p1) : 0.5 * (q.x2 * q.x2 + q.p2 * q.p2));
  return r;
}

// |alpha|^2 for the Q function of |n> follows Gamma(n + 1, 1).
double gamma_cdf(int n, double r) {
  double term = 1.0, sum = 1.0;
  for (int k = 1; k <= n; ++k) {
    term *= r / k;
    sum += term;
  }
  return 1.0 - std::exp(-r) * sum;
}

}  // namespace

TEST(QSampler, VacuumHasUnitRecordVariance) {
  const auto s = eightport::sample_q_function(number_state(2, 0, 0), 50000, 1);
  std::vector<double> x1, p2;
  for (const auto& q : s) {
    x1.push_back(q.x1);
    p2.push_back(q.p2);
  }
  const auto a = testkit::mean_and_variance(x1);
  const auto b = testkit::mean_and_variance(p2);
  EXPECT_NEAR(a.mean, 0.0, 4 * a.standard_error);
  EXPECT_NEAR(a.variance, 1.0, 0.03);
  EXPECT_NEAR(b.variance, 1.0, 0.03);
}

TEST(QSampler, NumberStateRadialDistributions) {
  const auto s = eightport::sample_q_function(number_state(3, 1, 0), 20000, 2);
  EXPECT_GT(testkit::ks_pvalue(radial(s, 1), [](double r) { return gamma_cdf(1, r); }), 1e-3);
  EXPECT_GT(testkit::ks_pvalue(radial(s, 2), [](double r) { return gamma_cdf(0, r); }), 1e-3);

  const auto t = eightport::sample_q_function(number_state(3, 2, 1), 20000, 3);
  EXPECT_GT(testkit::ks_pvalue(radial(t, 1), [](double r) { return gamma_cdf(2, r); }), 1e-3);
  EXPECT_GT(testkit::ks_pvalue(radial(t, 2), [](double r) { return gamma_cdf(1, r); }), 1e-3);
}

TEST(QSampler, KsDetectsWrongState) {
  const auto s = eightport::sample_q_function(number_state(3, 1, 0), 20000, 2);
  EXPECT_LT(testkit::ks_pvalue(radial(s, 1), [](double r) { return gamma_cdf(0, r); }), 1e-6);
}

TEST(QSampler, QubitMixtureMarginal) {
  const auto s = eightport::sample_q_function(qubit(1 / std::numbers::sqrt2, 1 / std::numbers::sqrt2, 0.3), 20000, 4);
  const auto cdf = [](double r) { return 0.5 * gamma_cdf(0, r) + 0.5 * gamma_cdf(1, r); };
  EXPECT_GT(testkit::ks_pvalue(radial(s, 1), cdf), 1e-3);
  EXPECT_GT(testkit::ks_pvalue(radial(s, 2), cdf), 1e-3);
}

TEST(QSampler, CrossMomentEncodesQubitPhase) {
  // Q moments are antinormally ordered: E[alpha1 conj(alpha2)] = <a2^dag a1> = c0 c1 e^{-i Phi}.
  for (const double phi : {0.0, std::numbers::pi / 2, -2.0}) {
    const double c0 = 2.0 / std::sqrt(5.0), c1 = 1.0 / std::sqrt(5.0);
    const auto s = eightport::sample_q_function(qubit(c0, c1, phi), 40000, 5);
    std::vector<double> re, im;
    for (const auto& q : s) {
      const std::complex<double> m = std::complex<double>(q.x1, q.p1) * std::complex<double>(q.x2, -q.p2) / 2.0;
      re.push_back(m.real());
      im.push_back(m.imag());
    }
    const auto r = testkit::mean_and_variance(re);
    const auto i = testkit::mean_and_variance(im);
    EXPECT_NEAR(r.mean, c0 * c1 * std::cos(phi), 4.5 * r.standard_error) << "phi=" << phi;
    EXPECT_NEAR(i.mean, -c0 * c1 * std::sin(phi), 4.5 * i.standard_error) << "phi=" << phi;
  }
}

TEST(QSampler, DeterministicAndWorkerIndependent) {
  const auto rho = generation::build_physical_state({0.6, 0.8, 1.0}, generation::ImperfectionBudget::measured(), 3);
  const auto a = eightport::sample_q_function(rho, 10000, 99, {1});
  const auto b = eightport::sample_q_function(rho, 10000, 99, {3});
  const auto c = eightport::sample_q_function(rho, 10000, 100, {1});
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
}

TEST(QSampler, RejectsZeroSamples) {
  EXPECT_THROW(eightport::sample_q_function(number_state(2, 0, 0), 0, 1), InvalidArgument);
}

TEST(HomodyneSampler, SinglePhotonQuadratureDistribution) {
  const auto shots = eightport::sample_homodyne(number_state(3, 1, 0), 20000, 6);
  std::vector<double> x1, x2;
  for (const auto& [a, b] : shots) {
    x1.push_back(a);
    x2.push_back(b);
  }
  const auto one = [](double x) { return 0.5 * (1.0 + std::erf(x)) - x * std::exp(-x * x) / std::sqrt(std::numbers::pi); };
  const auto vac = [](double x) { return 0.5 * (1.0 + std::erf(x)); };
  EXPECT_GT(testkit::ks_pvalue(x1, one), 1e-3);
  EXPECT_GT(testkit::ks_pvalue(x2, vac), 1e-3);
  EXPECT_NEAR(testkit::mean_and_variance(x2).variance, 0.5, 0.02);
}

TEST(TomographyData, PhasesAndValuesAreConsistent) {
  const auto s = eightport::sample_q_function(number_state(2, 1, 0), 3000, 7);
  const auto data = eightport::make_tomography_data(s, 8);
  ASSERT_EQ(data.size(), 2 * s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto& a = data[2 * i];
    const auto& b = data[2 * i + 1];
    for (const auto& t : {a, b}) {
      EXPECT_GE(t.theta1, 0.0);
      EXPECT_LT(t.theta1, std::numbers::pi);
      EXPECT_GE(t.theta2, 0.0);
      EXPECT_LT(t.theta2, std::numbers::pi);
      EXPECT_NEAR(t.x1, eightport::quadrature_at_phase(s[i].x1, s[i].p1, t.theta1), 1e-12);
      EXPECT_NEAR(t.x2, eightport::quadrature_at_phase(s[i].x2, s[i].p2, t.theta2), 1e-12);
    }
    EXPECT_NEAR(std::abs(b.theta1 - a.theta1), std::numbers::pi / 2, 1e-12);
    EXPECT_NEAR(std::abs(b.theta2 - a.theta2), std::numbers::pi / 2, 1e-12);
  }
}

TEST(TomographyData, PhasesAreUniform) {
  const auto s = eightport::sample_q_function(number_state(2, 0, 0), 20000, 9);
  const auto data = eightport::make_tomography_data(s, 10);
  std::vector<double> th;
  for (std::size_t i = 0; i < data.size(); i += 2) th.push_back(data[i].theta1);
  EXPECT_GT(testkit::ks_pvalue(th, [](double t) { return t / std::numbers::pi; }), 1e-3);
}

TEST(TomographyData, SingleModeDataUsesRequestedMode) {
  const auto s = eightport::sample_q_function(number_state(2, 1, 0), 1000, 11);
  const auto d2 = eightport::make_single_mode_data(s, 2, 12);
  ASSERT_EQ(d2.size(), 2 * s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    EXPECT_NEAR(d2[2 * i].x, eightport::quadrature_at_phase(s[i].x2, s[i].p2, d2[2 * i].theta), 1e-12);
  }
  EXPECT_THROW(eightport::make_single_mode_data(s, 3, 12), InvalidArgument);
}

TEST(VarianceTrace, VacuumFloorIsOneHalf) {
  const generation::MziConfig cfg;
  const auto grid = eightport::TimeGrid::covering(cfg, 2e-9);
  const auto trace = eightport::synthesize_variance_trace(number_state(2, 0, 0), cfg, 20000, grid, 13);
  double mean = 0.0;
  for (double v : trace.values) mean += v;
  mean /= static_cast<double>(trace.values.size());
  EXPECT_NEAR(mean, 0.5, 0.002);
}

TEST(VarianceTrace, SinglePhotonPeaksAtItsBin) {
  const generation::MziConfig cfg;
  const auto grid = eightport::TimeGrid::covering(cfg, 2e-9);
  const auto trace = eightport::synthesize_variance_trace(qubit(0.8, 0.6, 0.0), cfg, 40000, grid, 14);
  const auto peaks = eightport::locate_trace_peaks(trace, cfg.gamma);
  ASSERT_EQ(peaks.size(), 2u);
  EXPECT_NEAR(peaks[0].time, -cfg.delta_t, 2e-9);
  EXPECT_NEAR(peaks[1].time, 0.0, 2e-9);
  // Heights scale with the bin populations: 0.36 early, 0.64 late.
  EXPECT_NEAR(peaks[1].height / peaks[0].height, 0.64 / 0.36, 0.3);
}

TEST(VarianceTrace, RejectsCoarseOrShortGrid) {
  const generation::MziConfig cfg;
  const auto rho = number_state(2, 0, 0);
  EXPECT_THROW(eightport::synthesize_variance_trace(rho, cfg, 100, eightport::TimeGrid::covering(cfg, 1e-8), 1),
               InvalidArgument);
  eightport::TimeGrid shorty{-1e-7, 1e-9, 50};
  EXPECT_THROW(eightport::synthesize_variance_trace(rho, cfg, 100, shorty, 1), InvalidArgument);
  EXPECT_THROW(eightport::synthesize_variance_trace(rho, cfg, 1, eightport::TimeGrid::covering(cfg, 2e-9), 1),
               InvalidArgument);
}

TEST(VarianceTrace, DeterministicAcrossWorkers) {
  const generation::MziConfig cfg;
  const auto grid = eightport::TimeGrid::covering(cfg, 2e-9);
  const auto rho = qubit(0.8, 0.6, 0.0);
  const auto a = eightport::synthesize_variance_trace(rho, cfg, 9000, grid, 15, {1});
  const auto b = eightport::synthesize_variance_trace(rho, cfg, 9000, grid, 15, {2});
  EXPECT_EQ(a.values, b.values);
}
