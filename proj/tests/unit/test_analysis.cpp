#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "stats.hpp"
#include "timebin/analysis.hpp"
#include "timebin/error.hpp"
#include "timebin/generation.hpp"

using namespace timebin;
using analysis::VirtualBsParams;
using fock::Complex;

namespace {

constexpr double kS = 1.0 / std::numbers::sqrt2;

fock::TwoModeDensityMatrix pure_qubit(double c0, double c1, double phi, int d = 3) {
  return fock::TwoModeDensityMatrix::from_ket(generation::TimeBinQubitSpec{c0, c1, phi}.ket(d));
}

tomography::MleConfig single_cfg() {
  tomography::MleConfig c;
  c.dim_per_mode = 5;
  return c;
}

}  // namespace

TEST(VirtualBeamSplitter, InverseUndoesMixing) {
  const VirtualBsParams p{0.6, 0.8, 1.2};
  const eightport::QuadratureSample s{0.3, -1.1, 2.0, 0.4};
  const auto back = analysis::virtual_beamsplitter(analysis::virtual_beamsplitter(s, p), p.inverse());
  EXPECT_NEAR(back.x1, s.x1, 1e-14);
  EXPECT_NEAR(back.p1, s.p1, 1e-14);
  EXPECT_NEAR(back.x2, s.x2, 1e-14);
  EXPECT_NEAR(back.p2, s.p2, 1e-14);
}

TEST(VirtualBeamSplitter, MatchesPhysicalBeamSplitterMoments) {
  // Samples mixed numerically follow the Q function of U rho U^dag.
  const auto rho = generation::build_physical_state({0.8, 0.6, 0.9}, generation::ImperfectionBudget::measured(), 3);
  const VirtualBsParams p{0.6, 0.8, -0.7};
  const auto mixed = analysis::virtual_beamsplitter(eightport::sample_q_function(rho, 60000, 40), p);
  const auto out = fock::apply_unitary(rho, fock::beamsplitter_unitary(3, p.tau_p, p.rho_p, p.phi));

  const fock::Matrix a = fock::annihilation_matrix(3);
  const fock::Matrix id = fock::Matrix::Identity(3, 3);
  const fock::Matrix a1 = fock::tensor_product(a, id);
  const fock::Matrix a2 = fock::tensor_product(id, a);
  // Antinormal ordering: E|alpha1|^2 = <a1^dag a1> + 1, E[alpha1 conj(alpha2)] = <a2^dag a1>.
  const double n1 = (out.matrix() * a1.adjoint() * a1).trace().real() + 1.0;
  const Complex c12 = (out.matrix() * a2.adjoint() * a1).trace();

  std::vector<double> r1, re, im;
  for (const auto& q : mixed) {
    const Complex al1(q.x1 / std::numbers::sqrt2, q.p1 / std::numbers::sqrt2);
    const Complex al2(q.x2 / std::numbers::sqrt2, q.p2 / std::numbers::sqrt2);
    r1.push_back(std::norm(al1));
    re.push_back((al1 * std::conj(al2)).real());
    im.push_back((al1 * std::conj(al2)).imag());
  }
  const auto m1 = testkit::mean_and_variance(r1);
  const auto mre = testkit::mean_and_variance(re);
  const auto mim = testkit::mean_and_variance(im);
  EXPECT_NEAR(m1.mean, n1, 4.5 * m1.standard_error);
  EXPECT_NEAR(mre.mean, c12.real(), 4.5 * mre.standard_error);
  EXPECT_NEAR(mim.mean, c12.imag(), 4.5 * mim.standard_error);
}

TEST(VirtualBeamSplitter, OptimalSettingsRouteQubitToOutputA) {
  for (double phi : {0.0, std::numbers::pi, std::numbers::pi / 2, -std::numbers::pi / 2}) {
    const generation::TimeBinQubitSpec spec{2.0 / std::sqrt(5.0), 1.0 / std::sqrt(5.0), phi};
    const auto p = VirtualBsParams::optimal_for(spec);
    const fock::Matrix u = fock::beamsplitter_unitary(2, p.tau_p, p.rho_p, p.phi);
    const fock::Vector out = u * spec.ket(2).amplitudes();
    EXPECT_NEAR(std::norm(out(1 * 2 + 0)), 1.0, 1e-14) << "phi=" << phi;
  }
}

TEST(VirtualBeamSplitter, RejectsUnnormalizedSplitter) {
  EXPECT_THROW((VirtualBsParams{0.5, 0.5, 0.0}.validate()), InvalidArgument);
}

TEST(Sinusoid, FitRecoversParameters) {
  std::vector<double> phis = analysis::phase_grid(16), ys;
  for (double p : phis) ys.push_back(0.5 + 0.4 * std::cos(p - 1.0));
  const auto f = analysis::fit_sinusoid(phis, ys);
  EXPECT_NEAR(f.offset, 0.5, 1e-12);
  EXPECT_NEAR(f.amplitude, 0.4, 1e-12);
  EXPECT_NEAR(f.phase_of_max, 1.0, 1e-12);
  EXPECT_NEAR(f.phase_of_min, 1.0 - std::numbers::pi, 1e-12);
  EXPECT_NEAR(f.visibility, 0.8, 1e-12);
  EXPECT_THROW(analysis::fit_sinusoid(std::vector<double>{0.0, 1.0}, std::vector<double>{1.0, 2.0}), InvalidArgument);
}

TEST(Sinusoid, GridVisibilityAndPhaseGrid) {
  EXPECT_NEAR(analysis::grid_visibility(std::vector<double>{0.1, 0.9, 0.5}), 0.8, 1e-15);
  EXPECT_EQ(analysis::grid_visibility(std::vector<double>{0.0, 0.0}), 0.0);
  const auto g = analysis::phase_grid(4);
  ASSERT_EQ(g.size(), 4u);
  EXPECT_NEAR(g[0], -std::numbers::pi, 1e-15);
  EXPECT_NEAR(g[3], std::numbers::pi / 2, 1e-15);
}

TEST(QubitReport, SubmatrixAndFidelity) {
  const auto rho = pure_qubit(kS, kS, -std::numbers::pi / 2);
  const auto r = analysis::qubit_report(rho, {kS, kS, -std::numbers::pi / 2});
  EXPECT_NEAR(r.fidelity, 1.0, 1e-14);
  EXPECT_NEAR(r.submatrix(0, 1).imag(), 0.5, 1e-14);
  EXPECT_NEAR(r.populations.qubit, 1.0, 1e-14);
  const auto wrong = analysis::qubit_report(rho, {kS, kS, std::numbers::pi / 2});
  EXPECT_NEAR(wrong.fidelity, 0.0, 1e-14);
}

TEST(QubitReport, SubmatrixIsRenormalizedAndHermitian) {
  const auto rho = generation::build_physical_state({0.6, 0.8, 0.3}, generation::ImperfectionBudget::measured(), 3);
  const auto s = analysis::qubit_submatrix(rho);
  EXPECT_NEAR(s.trace().real(), 1.0, 1e-14);
  EXPECT_LT((s - s.adjoint()).cwiseAbs().maxCoeff(), 1e-15);
  const auto f = analysis::qubit_report(rho, {0.6, 0.8, 0.3}).fidelity;
  // Jitter sigma damps the coherence by exp(-sigma^2 / 2).
  const double damp = std::exp(-0.5 * std::pow(generation::ImperfectionBudget::measured().phase_jitter, 2));
  EXPECT_NEAR(f, 0.5 + 0.5 * (1 - 4 * 0.36 * 0.64 * (1 - damp)), 2e-3);
}

TEST(QubitReport, VacuumHasNoSubmatrix) {
  EXPECT_THROW(analysis::qubit_submatrix(fock::TwoModeDensityMatrix::vacuum(2)), InvalidArgument);
}

TEST(Wigner, GridAndParity) {
  const auto one = fock::SingleModeDensityMatrix::from_ket(fock::FockKet::number(4, 1));
  const auto g = analysis::wigner_grid(one, -1.0, 1.0, 0.5);
  ASSERT_EQ(g.xs.size(), 5u);
  ASSERT_EQ(g.values.size(), 25u);
  EXPECT_NEAR(g.values[2 * 5 + 2], -1.0 / std::numbers::pi, 1e-12);
  EXPECT_NEAR(analysis::parity_wigner_origin(one), -1.0 / std::numbers::pi, 1e-15);
  EXPECT_THROW(analysis::wigner_grid(one, 1.0, -1.0, 0.1), InvalidArgument);
}

TEST(Decomposition, LosslessQubitSendsPhotonToA) {
  const generation::TimeBinQubitSpec spec{kS, kS, -std::numbers::pi / 2};
  const auto samples = eightport::sample_q_function(pure_qubit(kS, kS, spec.phi), 20000, 41);
  const auto dec = analysis::decompose_at_optimum(samples, spec, single_cfg(), 42);
  EXPECT_GT(dec.output_a.rho.element(1, 1).real(), 0.95);
  EXPECT_GT(dec.output_b.rho.element(0, 0).real(), 0.97);
  EXPECT_LT(fock::wigner_function(dec.output_a.rho, 0, 0), -0.25);
}

TEST(FringeScan, LosslessQubitFollowsSine) {
  // (|1,0> - i|0,1>)/sqrt2: D1 sees (1 + sin phi)/2.
  const auto samples = eightport::sample_q_function(pure_qubit(kS, kS, -std::numbers::pi / 2), 30000, 43);
  const auto phis = analysis::phase_grid(8);
  const auto scan = analysis::fringe_scan(samples, phis, single_cfg(), 44);
  ASSERT_EQ(scan.p1_d1.size(), 8u);
  for (std::size_t i = 0; i < phis.size(); ++i) {
    EXPECT_NEAR(scan.p1_d1[i], 0.5 * (1 + std::sin(phis[i])), 0.06) << "phi=" << phis[i];
    EXPECT_NEAR(scan.p1_d2[i], 0.5 * (1 - std::sin(phis[i])), 0.06) << "phi=" << phis[i];
  }
  EXPECT_NEAR(scan.fit_d1.phase_of_max, std::numbers::pi / 2, 0.1);
  EXPECT_GT(scan.visibility, 0.9);
  EXPECT_THROW(analysis::fringe_scan({}, phis, single_cfg(), 1), InvalidArgument);
}

TEST(FringeScan, MeasuredBudgetStateHasTargetVisibility) {
  // Exact scan on the model state, no sampling.
  const generation::TimeBinQubitSpec spec{kS, kS, -std::numbers::pi / 2};
  const auto rho = generation::build_physical_state(spec, generation::ImperfectionBudget::measured(), 3);
  std::vector<double> d1, d2;
  for (double phi : analysis::phase_grid(64)) {
    const auto out = fock::apply_unitary(rho, fock::beamsplitter_unitary(3, kS, kS, phi));
    d1.push_back(fock::partial_trace(out, 1).element(1, 1).real());
    d2.push_back(fock::partial_trace(out, 2).element(1, 1).real());
  }
  EXPECT_NEAR(0.5 * (analysis::grid_visibility(d1) + analysis::grid_visibility(d2)), 0.96, 1e-3);
}
