#include <benchmark/benchmark.h>

#include <random>

#include "crt/balance.hpp"
#include "crt/bounds.hpp"
#include "crt/engine.hpp"
#include "crt/teststats.hpp"

namespace {

using namespace crt;

Matrix normal_matrix(int n, int p, RandomStream& rng) {
  std::normal_distribution<double> normal;
  Matrix x(n, p);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) x(i, j) = normal(rng);
  return x;
}

Vector normal_vector(int n, RandomStream& rng) {
  std::normal_distribution<double> normal;
  Vector v(n);
  for (int i = 0; i < n; ++i) v(i) = normal(rng);
  return v;
}

void BM_CompleteDraw(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  CompleteSampler sampler(n, n / 2);
  RandomStream rng(1);
  for (auto _ : state) benchmark::DoNotOptimize(sampler.draw(rng).data());
}
BENCHMARK(BM_CompleteDraw)->Arg(100)->Arg(1000);

void BM_MahalanobisAccept(benchmark::State& state) {
  const int tiers = static_cast<int>(state.range(0));
  RandomStream rng(2);
  const Matrix x = normal_matrix(100, 4, rng);
  const CovariateBalance balance(x, TierSpec::contiguous(4, tiers));
  const Assignment w_obs = draw_complete(100, 50, rng);
  const BuiltCriterion built = build_tier_criterion(balance, w_obs, BoundsConfig{}, rng);
  CompleteSampler sampler(100, 50);
  CovariateBalance::Workspace ws;
  for (auto _ : state) benchmark::DoNotOptimize(balance.accepts(sampler.draw(rng), built.criterion, ws));
}
BENCHMARK(BM_MahalanobisAccept)->Arg(1)->Arg(4);

void BM_ConditionalDraw(benchmark::State& state) {
  RandomStream rng(3);
  const Matrix x = normal_matrix(100, 4, rng);
  const CovariateBalance balance(x, TierSpec::contiguous(4, 4));
  const Assignment w_obs = draw_complete(100, 50, rng);
  const BuiltCriterion built = build_tier_criterion(balance, w_obs, BoundsConfig{}, rng);
  for (auto _ : state) benchmark::DoNotOptimize(draw_conditional(balance, built.criterion, 50, 10'000'000, rng));
}
BENCHMARK(BM_ConditionalDraw);

void BM_TauInt(benchmark::State& state) {
  RandomStream rng(4);
  const Matrix x = normal_matrix(100, 4, rng);
  const Vector y = normal_vector(100, rng);
  StatisticEvaluator eval(RegressionInteraction{}, x, y);
  const Assignment w = draw_complete(100, 50, rng);
  for (auto _ : state) benchmark::DoNotOptimize(eval(w));
}
BENCHMARK(BM_TauInt);

void BM_Pvalue(benchmark::State& state) {
  RandomStream rng(5);
  const Matrix x = normal_matrix(100, 4, rng);
  const ExperimentData data(x, draw_complete(100, 50, rng), normal_vector(100, rng));
  TestOptions opts;
  opts.draws = state.range(0);
  for (auto _ : state)
    benchmark::DoNotOptimize(randomization_pvalue(data, MeanDifference{}, CompleteRandomization{}, opts, 7).p_value);
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Pvalue)->Arg(500)->Arg(10000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
