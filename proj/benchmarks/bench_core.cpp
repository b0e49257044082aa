#include <numbers>

#include <benchmark/benchmark.h>

#include "timebin/analysis.hpp"
#include "timebin/eightport.hpp"
#include "timebin/generation.hpp"
#include "timebin/povm.hpp"
#include "timebin/tomography.hpp"

using namespace timebin;

namespace {

const generation::TimeBinQubitSpec kSpec{1.0 / std::numbers::sqrt2, 1.0 / std::numbers::sqrt2,
                                         -std::numbers::pi / 2};

fock::TwoModeDensityMatrix measured_state(int d) {
  return generation::build_physical_state(kSpec, generation::ImperfectionBudget::measured(), d);
}

void BM_SampleQ(benchmark::State& state) {
  const auto rho = measured_state(static_cast<int>(state.range(0)));
  std::uint64_t seed = 1;
  for (auto _ : state) benchmark::DoNotOptimize(eightport::sample_q_function(rho, 10000, seed++));
  state.SetItemsProcessed(state.iterations() * 10000);
}
BENCHMARK(BM_SampleQ)->Arg(3)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_PovmStack(benchmark::State& state) {
  const tomography::Binning binning;
  const int d = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(tomography::stacked_reference_operators(binning, d));
}
BENCHMARK(BM_PovmStack)->Arg(3)->Arg(10)->Unit(benchmark::kMillisecond);

// Fixed number of RrhoR steps on 2e4 eight-port data.
void BM_MleIterations(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const auto samples = eightport::sample_q_function(measured_state(d), 10000, 7);
  const auto data = eightport::make_tomography_data(samples, 8);
  tomography::MleConfig cfg;
  cfg.dim_per_mode = d;
  cfg.max_iterations = 20;
  cfg.convergence_tol = 1e-300;
  const tomography::TwoModeQuadratureModel model(data, cfg);
  for (auto _ : state) benchmark::DoNotOptimize(tomography::run_rrho(model, cfg));
}
BENCHMARK(BM_MleIterations)->Arg(3)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_CoherentModel(benchmark::State& state) {
  const auto samples = eightport::sample_q_function(measured_state(3), 10000, 9);
  for (auto _ : state) benchmark::DoNotOptimize(tomography::CoherentSampleModel(samples, 3));
}
BENCHMARK(BM_CoherentModel)->Unit(benchmark::kMillisecond);

void BM_WignerGrid(benchmark::State& state) {
  const auto rho = fock::partial_trace(measured_state(3), 1);
  for (auto _ : state) benchmark::DoNotOptimize(analysis::wigner_grid(rho, -4.0, 4.0, 0.05));
}
BENCHMARK(BM_WignerGrid)->Unit(benchmark::kMillisecond);

void BM_VarianceTrace(benchmark::State& state) {
  const generation::MziConfig cfg;
  const auto rho = measured_state(3);
  const auto grid = eightport::TimeGrid::covering(cfg, 2e-9);
  for (auto _ : state) benchmark::DoNotOptimize(eightport::synthesize_variance_trace(rho, cfg, 2000, grid, 3));
}
BENCHMARK(BM_VarianceTrace)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
