#include "timebin/eightport.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "timebin/error.hpp"
#include "timebin/rng.hpp"

namespace timebin::eightport {

using fock::Complex;
using fock::Matrix;
using fock::Vector;

namespace {

constexpr double kPopulationCut = 1e-12;
constexpr double kEnvelopeSlack = 1.02;

// Highest Fock level of `mode` whose reduced population exceeds the cut.
int occupied_max(const fock::TwoModeDensityMatrix& rho, int mode) {
  const auto p = fock::photon_number_distribution(fock::partial_trace(rho, mode));
  int n_max = 0;
  for (int n = 0; n < static_cast<int>(p.size()); ++n) {
    if (p[n] > kPopulationCut) n_max = n;
  }
  return n_max;
}

// rho restricted to {|n1,n2>: n1 <= m1, n2 <= m2}, flattened with stride m2+1.
Matrix support_block(const fock::TwoModeDensityMatrix& rho, int m1, int m2) {
  const int d = rho.dim_per_mode();
  const int w = m2 + 1;
  const int dim = (m1 + 1) * w;
  Matrix out(dim, dim);
  for (int a = 0; a < dim; ++a) {
    for (int b = 0; b < dim; ++b) {
      out(a, b) = rho.matrix()((a / w) * d + a % w, (b / w) * d + b % w);
    }
  }
  return out;
}

double largest_eigenvalue(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  return std::max(es.eigenvalues().maxCoeff(), 0.0);
}

// Maximum over a grid of f on [0, hi]; the grid is fine enough that the
// relative shortfall stays well below the envelope slack.
template <class F>
double grid_max(F f, double hi, int points = 20000) {
  double best = 0.0;
  for (int i = 0; i <= points; ++i) best = std::max(best, f(hi * i / points));
  return best;
}

// s^2 exp(-r (1 - 1/s^2)) sum_{n<=m} r^n/n!, the Q-to-proposal ratio of the
// worst-case truncated coherent vector of one mode.
double q_envelope(int n_max) {
  const double s2 = 1.0 + n_max;
  auto h = [&](double r) {
    double term = 1.0, sum = 1.0;
    for (int n = 1; n <= n_max; ++n) {
      term *= r / n;
      sum += term;
    }
    return s2 * std::exp(-r * (1.0 - 1.0 / s2)) * sum;
  };
  return grid_max(h, 40.0 + 10.0 * n_max);
}

// max_x sum_{n<=m} psi_n(x)^2 / N(x; 0, s^2) for the homodyne proposal.
double homodyne_envelope(int n_max) {
  const double s2 = 1.0 + n_max;
  auto h = [&](double x) {
    const Eigen::VectorXd psi = fock::quadrature_wavefunctions(x, n_max + 1);
    return psi.squaredNorm() * std::sqrt(2.0 * std::numbers::pi * s2) * std::exp(0.5 * x * x / s2);
  };
  return grid_max(h, 12.0 + 2.0 * n_max);
}

[[noreturn]] void envelope_violation(double ratio, double bound) {
  std::ostringstream os;
  os << "rejection envelope violated: ratio " << ratio << " > bound " << bound;
  throw InternalError(os.str());
}

double wrap_half_turn(double theta) {
  while (theta >= std::numbers::pi) theta -= std::numbers::pi;
  return theta;
}

}  // namespace

std::vector<QuadratureSample> sample_q_function(const fock::TwoModeDensityMatrix& rho, std::size_t n,
                                                std::uint64_t seed, const SamplerOptions& opts) {
  if (n == 0) throw InvalidArgument("sample_q_function needs n >= 1");
  const int m1 = occupied_max(rho, 1);
  const int m2 = occupied_max(rho, 2);
  const Matrix block = support_block(rho, m1, m2);
  const double s1 = std::sqrt(1.0 + m1);
  const double s2 = std::sqrt(1.0 + m2);
  const double bound = kEnvelopeSlack * largest_eigenvalue(block) * q_envelope(m1) * q_envelope(m2);
  const double scale = (1.0 + m1) * (1.0 + m2);

  std::vector<QuadratureSample> out(n);
  rng::for_each_chunk(n, opts.workers, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
    rng::Engine eng = rng::substream(seed, chunk);
    // Re and Im of alpha_j each have variance s_j^2 / 2.
    std::normal_distribution<double> g1(0.0, s1 / std::numbers::sqrt2);
    std::normal_distribution<double> g2(0.0, s2 / std::numbers::sqrt2);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Vector v(block.rows());
    for (std::size_t i = begin; i < end; ++i) {
      for (;;) {
        const double re1 = g1(eng);
        const double im1 = g1(eng);
        const double re2 = g2(eng);
        const double im2 = g2(eng);
        const Complex a1(re1, im1);
        const Complex a2(re2, im2);
        const Vector c1 = fock::coherent_amplitudes(a1, m1 + 1);
        const Vector c2 = fock::coherent_amplitudes(a2, m2 + 1);
        for (int k = 0; k <= m1; ++k) {
          for (int l = 0; l <= m2; ++l) v(k * (m2 + 1) + l) = c1(k) * c2(l);
        }
        const double q = std::max(0.0, (v.adjoint() * block * v).real()(0, 0));
        const double ratio =
            q * scale * std::exp(std::norm(a1) / (s1 * s1) + std::norm(a2) / (s2 * s2));
        if (ratio > bound) envelope_violation(ratio, bound);
        if (u(eng) * bound < ratio) {
          out[i] = {std::numbers::sqrt2 * a1.real(), std::numbers::sqrt2 * a1.imag(),
                    std::numbers::sqrt2 * a2.real(), std::numbers::sqrt2 * a2.imag()};
          break;
        }
      }
    }
  });
  return out;
}

std::vector<std::pair<double, double>> sample_homodyne(const fock::TwoModeDensityMatrix& rho, std::size_t n,
                                                       std::uint64_t seed, const SamplerOptions& opts) {
  if (n == 0) throw InvalidArgument("sample_homodyne needs n >= 1");
  const int m1 = occupied_max(rho, 1);
  const int m2 = occupied_max(rho, 2);
  const int w = m2 + 1;
  const Matrix block = support_block(rho, m1, m2);
  const double s1 = std::sqrt(1.0 + m1);
  const double s2 = std::sqrt(1.0 + m2);
  const double bound =
      kEnvelopeSlack * largest_eigenvalue(block) * homodyne_envelope(m1) * homodyne_envelope(m2);
  const double norm1 = std::sqrt(2.0 * std::numbers::pi) * s1;
  const double norm2 = std::sqrt(2.0 * std::numbers::pi) * s2;

  std::vector<std::pair<double, double>> out(n);
  rng::for_each_chunk(n, opts.workers, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
    rng::Engine eng = rng::substream(seed, chunk);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    std::normal_distribution<double> g1(0.0, s1);
    std::normal_distribution<double> g2(0.0, s2);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Eigen::VectorXd psi(block.rows());
    for (std::size_t i = begin; i < end; ++i) {
      const double theta = phase(eng);
      // Rotated frame: rho'_{ab} = e^{-i(N_a - N_b) theta} rho_{ab}.
      Eigen::MatrixXd rot(block.rows(), block.cols());
      for (int a = 0; a < block.rows(); ++a) {
        const int na = a / w + a % w;
        for (int b = 0; b < block.cols(); ++b) {
          const int nb = b / w + b % w;
          rot(a, b) = (block(a, b) * std::polar(1.0, -(na - nb) * theta)).real();
        }
      }
      for (;;) {
        const double x1 = g1(eng);
        const double x2 = g2(eng);
        const Eigen::VectorXd f1 = fock::quadrature_wavefunctions(x1, m1 + 1);
        const Eigen::VectorXd f2 = fock::quadrature_wavefunctions(x2, m2 + 1);
        for (int k = 0; k <= m1; ++k) {
          for (int l = 0; l <= m2; ++l) psi(k * w + l) = f1(k) * f2(l);
        }
        const double p = std::max(0.0, psi.dot(rot * psi));
        const double ratio = p * norm1 * norm2 * std::exp(0.5 * (x1 * x1 / (s1 * s1) + x2 * x2 / (s2 * s2)));
        if (ratio > bound) envelope_violation(ratio, bound);
        if (u(eng) * bound < ratio) {
          out[i] = {x1, x2};
          break;
        }
      }
    }
  });
  return out;
}

double quadrature_at_phase(double x, double p, double theta) { return x * std::cos(theta) + p * std::sin(theta); }

std::vector<TomographyDatum> make_tomography_data(std::span<const QuadratureSample> samples, std::uint64_t seed) {
  if (samples.empty()) throw InvalidArgument("make_tomography_data needs at least one sample");
  std::vector<TomographyDatum> out(2 * samples.size());
  rng::for_each_chunk(samples.size(), 1, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
    rng::Engine eng = rng::substream(seed, chunk);
    std::uniform_real_distribution<double> phase(0.0, std::numbers::pi);
    for (std::size_t i = begin; i < end; ++i) {
      const auto& s = samples[i];
      const double t1 = wrap_half_turn(phase(eng));
      const double t2 = wrap_half_turn(phase(eng));
      const double u1 = wrap_half_turn(t1 + 0.5 * std::numbers::pi);
      const double u2 = wrap_half_turn(t2 + 0.5 * std::numbers::pi);
      out[2 * i] = {t1, quadrature_at_phase(s.x1, s.p1, t1), t2, quadrature_at_phase(s.x2, s.p2, t2)};
      out[2 * i + 1] = {u1, quadrature_at_phase(s.x1, s.p1, u1), u2, quadrature_at_phase(s.x2, s.p2, u2)};
    }
  });
  return out;
}

std::vector<SingleModeDatum> make_single_mode_data(std::span<const QuadratureSample> samples, int mode,
                                                   std::uint64_t seed) {
  if (samples.empty()) throw InvalidArgument("make_single_mode_data needs at least one sample");
  if (mode != 1 && mode != 2) throw InvalidArgument("mode must be 1 or 2");
  std::vector<SingleModeDatum> out(2 * samples.size());
  rng::for_each_chunk(samples.size(), 1, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
    rng::Engine eng = rng::substream(seed, chunk);
    std::uniform_real_distribution<double> phase(0.0, std::numbers::pi);
    for (std::size_t i = begin; i < end; ++i) {
      const double x = mode == 1 ? samples[i].x1 : samples[i].x2;
      const double p = mode == 1 ? samples[i].p1 : samples[i].p2;
      const double t = wrap_half_turn(phase(eng));
      const double u = wrap_half_turn(t + 0.5 * std::numbers::pi);
      out[2 * i] = {t, quadrature_at_phase(x, p, t)};
      out[2 * i + 1] = {u, quadrature_at_phase(x, p, u)};
    }
  });
  return out;
}

TimeGrid TimeGrid::covering(const generation::MziConfig& cfg, double step, double margin_gammas) {
  if (!(step > 0.0)) throw InvalidArgument("time step must be positive");
  const double margin = margin_gammas / cfg.gamma;
  const double start = -cfg.delta_t - margin;
  const double stop = margin;
  TimeGrid g;
  g.start = start;
  g.step = step;
  g.count = static_cast<std::size_t>(std::ceil((stop - start) / step)) + 1;
  return g;
}

TimeTrace synthesize_variance_trace(const fock::TwoModeDensityMatrix& rho, const generation::MziConfig& cfg,
                                    std::size_t n_trials, const TimeGrid& grid, std::uint64_t seed,
                                    const SamplerOptions& opts) {
  cfg.validate();
  if (n_trials < 2) throw InvalidArgument("variance trace needs at least two trials");
  if (grid.count < 2 || !(grid.step > 0.0)) throw InvalidArgument("time grid needs >= 2 points and a positive step");
  if (grid.step > 1.0 / (10.0 * cfg.gamma) * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "time grid too coarse: step " << grid.step << " s exceeds 1/(10 gamma) = " << 1.0 / (10.0 * cfg.gamma) << " s";
    throw InvalidArgument(os.str());
  }
  if (grid.start > -cfg.delta_t || grid.at(grid.count - 1) < 0.0) {
    throw InvalidArgument("time grid must span both time bins");
  }

  const auto f1 = generation::late_bin_mode(cfg);
  const auto f2 = generation::early_bin_mode(cfg);
  const std::size_t nt = grid.count;
  std::vector<double> w1(nt), w2(nt), wv(nt);
  for (std::size_t k = 0; k < nt; ++k) {
    const double t = grid.at(k);
    w1[k] = generation::temporal_mode_eval(f1, t) * std::sqrt(grid.step);
    w2[k] = generation::temporal_mode_eval(f2, t) * std::sqrt(grid.step);
    const double rest = 1.0 - w1[k] * w1[k] - w2[k] * w2[k];
    if (rest < 0.0) throw InvalidArgument("time step too large for the mode normalization");
    wv[k] = std::sqrt(0.5 * rest);
  }

  const auto shots = sample_homodyne(rho, n_trials, rng::derive_seed(seed, "homodyne"), opts);
  const std::uint64_t noise_seed = rng::derive_seed(seed, "vacuum");

  // Welford accumulators per chunk, merged in chunk order.
  struct Acc {
    std::vector<double> count, mean, m2;
  };
  const std::size_t chunks = (n_trials + rng::kChunkSize - 1) / rng::kChunkSize;
  std::vector<Acc> acc(chunks);
  rng::for_each_chunk(n_trials, opts.workers, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
    rng::Engine eng = rng::substream(noise_seed, chunk);
    std::normal_distribution<double> xi(0.0, 1.0);
    Acc a{std::vector<double>(nt, 0.0), std::vector<double>(nt, 0.0), std::vector<double>(nt, 0.0)};
    for (std::size_t i = begin; i < end; ++i) {
      const auto [x1, x2] = shots[i];
      for (std::size_t k = 0; k < nt; ++k) {
        const double x = w1[k] * x1 + w2[k] * x2 + wv[k] * xi(eng);
        a.count[k] += 1.0;
        const double delta = x - a.mean[k];
        a.mean[k] += delta / a.count[k];
        a.m2[k] += delta * (x - a.mean[k]);
      }
    }
    acc[chunk] = std::move(a);
  });

  std::vector<double> count(nt, 0.0), mean(nt, 0.0), m2(nt, 0.0);
  for (const auto& a : acc) {
    for (std::size_t k = 0; k < nt; ++k) {
      const double n = count[k] + a.count[k];
      const double delta = a.mean[k] - mean[k];
      mean[k] += delta * a.count[k] / n;
      m2[k] += a.m2[k] + delta * delta * count[k] * a.count[k] / n;
      count[k] = n;
    }
  }

  TimeTrace trace;
  trace.grid = grid;
  trace.values.resize(nt);
  for (std::size_t k = 0; k < nt; ++k) trace.values[k] = m2[k] / (count[k] - 1.0);
  return trace;
}

std::vector<TracePeak> locate_trace_peaks(const TimeTrace& trace, double gamma, double floor) {
  if (!(gamma > 0.0)) throw InvalidArgument("gamma must be positive");
  const std::size_t nt = trace.values.size();
  if (nt < 3 || nt != trace.grid.count) throw InvalidArgument("trace needs >= 3 points on its grid");

  // Least-squares height of the template centred at c, and the SSE reduction.
  auto fit = [&](double c) {
    double sty = 0.0, stt = 0.0;
    for (std::size_t k = 0; k < nt; ++k) {
      const double tmpl = std::exp(-2.0 * gamma * std::abs(trace.grid.at(k) - c));
      sty += tmpl * (trace.values[k] - floor);
      stt += tmpl * tmpl;
    }
    const double h = sty / stt;
    return std::pair{h, h * sty};
  };

  auto best_centre = [&](double exclude, bool use_exclude) {
    const double gap = 3.0 / gamma;
    double best_c = 0.0, best_score = -1.0;
    for (std::size_t k = 0; k < nt; ++k) {
      const double c = trace.grid.at(k);
      if (use_exclude && std::abs(c - exclude) < gap) continue;
      const auto [h, score] = fit(c);
      if (h > 0.0 && score > best_score) {
        best_score = score;
        best_c = c;
      }
    }
    if (best_score < 0.0) throw DataError("no pulse found in the variance trace");
    // Refine between the neighbouring grid points.
    const int sub = 200;
    double refined = best_c;
    for (int j = -sub; j <= sub; ++j) {
      const double c = best_c + trace.grid.step * j / sub;
      const auto [h, score] = fit(c);
      if (h > 0.0 && score > best_score) {
        best_score = score;
        refined = c;
      }
    }
    return refined;
  };

  const double c1 = best_centre(0.0, false);
  const double c2 = best_centre(c1, true);
  std::vector<TracePeak> peaks = {{c1, fit(c1).first}, {c2, fit(c2).first}};
  std::sort(peaks.begin(), peaks.end(), [](const TracePeak& a, const TracePeak& b) { return a.time < b.time; });
  return peaks;
}

}  // namespace timebin::eightport
