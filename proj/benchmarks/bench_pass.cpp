#include <benchmark/benchmark.h>

#include "rgsvae/inference.hpp"
#include "rgsvae/model.hpp"

namespace {

using namespace rgsvae;

struct Fixture {
  ModelSpec spec;
  TensorMap params;
  TensorMap stats;
  Tensor x;

  Fixture(std::vector<int64_t> widths, int64_t data_dim, int64_t batch)
      : spec{std::move(widths), data_dim, 99} {
    params = init_params(spec);
    stats = init_bn_stats(spec);
    CounterRng rng(5);
    x = Tensor::matrix(data_dim, batch);
    for (int64_t i = 0; i < x.size(); ++i) {
      x[i] = rng.next_uniform() < 0.3 ? 1.0 : 0.0;
    }
  }
};

void run_step(Fixture& f, benchmark::State& state, bool backward) {
  CounterRng noise(11);
  for (auto _ : state) {
    Graph g;
    Binding bound = bind_params(g, f.params);
    TensorMap stats = f.stats;
    PassContext ctx{&g, &bound, &stats, PassMode::kTrain, 1e-5, 0.9};
    PosteriorPass pass = posterior_downward_pass(ctx, f.spec, f.x, &noise);
    if (backward) {
      DiffValue loss = g.neg(pass.bound_mean);
      g.backward(loss);
    }
    benchmark::DoNotOptimize(pass.bound_mean.value()[0]);
  }
}

void BM_ElboForward_Tiny(benchmark::State& state) {
  Fixture f({10, 20}, 784, 150);
  run_step(f, state, false);
}
BENCHMARK(BM_ElboForward_Tiny)->Unit(benchmark::kMillisecond);

void BM_ElboForwardBackward_Tiny(benchmark::State& state) {
  Fixture f({10, 20}, 784, 150);
  run_step(f, state, true);
}
BENCHMARK(BM_ElboForwardBackward_Tiny)->Unit(benchmark::kMillisecond);

void BM_ElboForwardBackward_Paper(benchmark::State& state) {
  Fixture f({50, 100, 200, 300}, 784, 150);
  run_step(f, state, true);
}
BENCHMARK(BM_ElboForwardBackward_Paper)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
