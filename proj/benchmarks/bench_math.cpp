#include <benchmark/benchmark.h>

#include "rgsvae/rg.hpp"
#include "rgsvae/rng.hpp"
#include "rgsvae/special_math.hpp"

namespace {

void BM_StdNormalCdf(benchmark::State& state) {
  rgsvae::CounterRng rng(7);
  double x = 0.0;
  for (auto _ : state) {
    x = -8.0 + 16.0 * rng.next_uniform();
    benchmark::DoNotOptimize(rgsvae::std_normal_cdf(x));
  }
}
BENCHMARK(BM_StdNormalCdf);

void BM_StdNormalLogCdf(benchmark::State& state) {
  rgsvae::CounterRng rng(7);
  for (auto _ : state) {
    const double x = -60.0 + 68.0 * rng.next_uniform();
    benchmark::DoNotOptimize(rgsvae::std_normal_log_cdf(x));
  }
}
BENCHMARK(BM_StdNormalLogCdf);

void BM_TruncatedMoments(benchmark::State& state) {
  rgsvae::CounterRng rng(7);
  for (auto _ : state) {
    const double mu = -10.0 + 20.0 * rng.next_uniform();
    benchmark::DoNotOptimize(rgsvae::truncated_moments(mu, 1.3));
  }
}
BENCHMARK(BM_TruncatedMoments);

void BM_RgKl(benchmark::State& state) {
  rgsvae::CounterRng rng(7);
  for (auto _ : state) {
    const rgsvae::UnitGaussianParams q{-2.0 + 4.0 * rng.next_uniform(),
                                       0.5 + rng.next_uniform()};
    const rgsvae::UnitGaussianParams p{-2.0 + 4.0 * rng.next_uniform(),
                                       0.5 + rng.next_uniform()};
    benchmark::DoNotOptimize(rgsvae::rg_kl(q, p));
  }
}
BENCHMARK(BM_RgKl);

void BM_NormalDraw(benchmark::State& state) {
  rgsvae::CounterRng rng(7);
  for (auto _ : state) {
    benchmark::DoNotOptimize(rng.next_normal());
  }
}
BENCHMARK(BM_NormalDraw);

}  // namespace
