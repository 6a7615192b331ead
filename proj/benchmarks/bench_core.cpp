#include "gibbsq/calibration.hpp"
#include "gibbsq/credible.hpp"
#include "gibbsq/gibbs.hpp"
#include "gibbsq/loss.hpp"
#include "gibbsq/quantile_solver.hpp"
#include "gibbsq/synthdata.hpp"

#include <benchmark/benchmark.h>

using namespace gibbsq;

static void BM_EmpiricalRisk(benchmark::State& state) {
  const Dataset data = sample(example1(1), static_cast<std::size_t>(state.range(0)));
  const LossSpec spec = LossSpec::median(2);
  const Vector theta = Vector::Ones(2);
  for (auto _ : state) benchmark::DoNotOptimize(empirical_risk(spec, data, theta));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EmpiricalRisk)->Arg(100)->Arg(1000)->Arg(10000);

static void BM_RiskNonEuclidean(benchmark::State& state) {
  const Dataset data = sample(example1(1), 1000);
  const LossSpec spec((Vector(2) << 0.2, 0.3).finished(), 3.0);
  const Vector theta = Vector::Ones(2);
  for (auto _ : state) benchmark::DoNotOptimize(empirical_risk(spec, data, theta));
}
BENCHMARK(BM_RiskNonEuclidean);

static void BM_Solve(benchmark::State& state) {
  const Dataset data = sample(example2(2), static_cast<std::size_t>(state.range(0)));
  const LossSpec spec = LossSpec::median(2);
  for (auto _ : state) benchmark::DoNotOptimize(solve(spec, data).theta_hat);
}
BENCHMARK(BM_Solve)->Arg(100)->Arg(1000)->Unit(benchmark::kMicrosecond);

static void BM_GibbsChain(benchmark::State& state) {
  const Dataset data = sample(example1(3), 100);
  const LossSpec spec = LossSpec::median(2);
  GibbsConfig cfg;
  cfg.n_draws = 2000;
  cfg.burn_in = 1000;
  for (auto _ : state) {
    cfg.seed++;
    benchmark::DoNotOptimize(sample(spec, data, PriorSpec::isotropic(2), cfg).draws.data());
  }
}
BENCHMARK(BM_GibbsChain)->Unit(benchmark::kMillisecond);

static void BM_EllipseFromDraws(benchmark::State& state) {
  const RowMatrix draws = sample(example1(4), 5000).rows();
  for (auto _ : state) benchmark::DoNotOptimize(ellipse_from_draws(draws, 0.05).radius);
}
BENCHMARK(BM_EllipseFromDraws)->Unit(benchmark::kMicrosecond);

static void BM_CalibrationStep(benchmark::State& state) {
  const Dataset data = sample(example1(5), 100);
  const LossSpec spec = LossSpec::median(2);
  CalibrationConfig cfg;
  cfg.threads = 1;
  for (auto _ : state) benchmark::DoNotOptimize(bootstrap_coverage(spec, data, PriorSpec::isotropic(2), 1.0, cfg));
}
BENCHMARK(BM_CalibrationStep)->Unit(benchmark::kMillisecond)->Iterations(3);

BENCHMARK_MAIN();
