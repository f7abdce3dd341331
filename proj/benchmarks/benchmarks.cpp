// Microbenchmarks for the hot paths: the weighted-median solver, posterior
// draws, the full credible-region test, and the classical score statistics.

#include <benchmark/benchmark.h>

#include <cstddef>

#include "loctest/bnp.hpp"
#include "loctest/classical.hpp"
#include "loctest/datagen.hpp"
#include "loctest/dp.hpp"
#include "loctest/matrix.hpp"
#include "loctest/numerics.hpp"
#include "loctest/rng.hpp"
#include "loctest/spatial.hpp"
#include "loctest/sym_matrix.hpp"

namespace {

using namespace loctest;

Sample gaussian_sample(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  return sample_mvn(Vector{0.0, 0.0}, SymMatrix::identity(2), n, rng);
}

void BM_WeightedSpatialMedian(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  const Sample data = gaussian_sample(n, 1);
  Vector weights(n, 1.0 / static_cast<double>(n));
  snap_weight_sum(weights);
  for (auto _ : state) {
    const MedianSolution sol = weighted_spatial_median({data, weights});
    benchmark::DoNotOptimize(sol.location.data());
  }
}
BENCHMARK(BM_WeightedSpatialMedian)->Arg(100)->Arg(1000);

void BM_BootstrapMedianDraw(benchmark::State& state) {
  const Sample data = gaussian_sample(100, 2);
  Rng rng(3);
  for (auto _ : state) {
    const Vector draw = draw_bootstrap_median(data, rng);
    benchmark::DoNotOptimize(draw.data());
  }
}
BENCHMARK(BM_BootstrapMedianDraw);

void BM_DPPosteriorMedianDraw(benchmark::State& state) {
  const Sample data = gaussian_sample(100, 4);
  DPPrior prior;
  prior.mass = 2.0;
  SymMatrix cov = SymMatrix::identity(2);
  cov *= 10.0;
  prior.base = GaussianBase{Vector{0.0, 0.0}, cov};
  Rng rng(5);
  for (auto _ : state) {
    const Vector draw = draw_posterior_median(data, prior, 0, rng);
    benchmark::DoNotOptimize(draw.data());
  }
}
BENCHMARK(BM_DPPosteriorMedianDraw);

void BM_OneSampleCredibleTest(benchmark::State& state) {
  const Sample data = gaussian_sample(100, 6);
  const Vector theta0{0.0, 0.0};
  TestOptions opts;
  opts.num_draws = 200;
  std::uint64_t seed = 7;
  for (auto _ : state) {
    const TestOutcome out = one_sample_test(data, theta0, BootstrapPosterior{}, opts, seed++);
    benchmark::DoNotOptimize(out.statistic);
  }
}
BENCHMARK(BM_OneSampleCredibleTest);

void BM_SignScoreStatistic(benchmark::State& state) {
  const Sample data = gaussian_sample(500, 8);
  const Vector theta0{0.0, 0.0};
  for (auto _ : state) {
    const ScoreStatistic stat = score_statistic(data, theta0, ScoreKind::sign);
    benchmark::DoNotOptimize(stat.q_sq);
  }
}
BENCHMARK(BM_SignScoreStatistic);

void BM_SignedRankScoreStatistic(benchmark::State& state) {
  const Sample data = gaussian_sample(200, 9);
  const Vector theta0{0.0, 0.0};
  for (auto _ : state) {
    const ScoreStatistic stat = score_statistic(data, theta0, ScoreKind::signed_rank);
    benchmark::DoNotOptimize(stat.q_sq);
  }
}
BENCHMARK(BM_SignedRankScoreStatistic);

void BM_TwoSampleSignTest(benchmark::State& state) {
  const Sample data1 = gaussian_sample(100, 10);
  const Sample data2 = gaussian_sample(90, 11);
  for (auto _ : state) {
    const TestOutcome out = two_sample_score_test(data1, data2, ScoreKind::sign);
    benchmark::DoNotOptimize(out.statistic);
  }
}
BENCHMARK(BM_TwoSampleSignTest);

void BM_NoncentralChi2Cdf(benchmark::State& state) {
  double x = 1.0;
  for (auto _ : state) {
    const double v = noncentral_chi2_cdf(x, 2.0, 6.2831853);
    benchmark::DoNotOptimize(v);
    x = x < 30.0 ? x + 0.1 : 1.0;
  }
}
BENCHMARK(BM_NoncentralChi2Cdf);

}  // namespace

BENCHMARK_MAIN();
