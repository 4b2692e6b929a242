// Per-iteration cost of the retraction-free update vs. the QR-retraction
// baseline, plus the primitives behind them.

#include <benchmark/benchmark.h>

#include <stiefel_dgt/algorithms.hpp>
#include <stiefel_dgt/problems.hpp>

using namespace stiefel_dgt;

namespace {

struct Fixture {
  Fixture(int n, int d, int r)
      : problem(make_problem(generate_synthetic_pca(n, d, r, 2 * d, 10.0, 5).first)),
        mixing(build_metropolis(ring_edges(n), n)) {
    cfg.alpha = 1e-3;
    cfg.lambda = 1.0;
    cfg.epsilon = 0.5;
    Rng rng(17);
    x0 = project_to_stiefel(rng.gaussian(d, r));
    state = init_network_state(x0, n);
    state = drfgt_step(state, problem, mixing, cfg);  // warm tracker
  }
  ProblemInstance problem;
  MixingMatrix mixing;
  AlgorithmConfig cfg;
  Matrix x0;
  NetworkState state;
};

void BM_LandingField(benchmark::State& bench) {
  const int d = static_cast<int>(bench.range(0));
  const int r = d / 4;
  Rng rng(3);
  const Matrix x = project_to_stiefel(rng.gaussian(d, r));
  const Matrix g = rng.gaussian(d, r);
  const LandingParams params(1.0, 0.5);
  for (auto _ : bench) benchmark::DoNotOptimize(landing_field(x, g, params));
  bench.SetComplexityN(d);
}
BENCHMARK(BM_LandingField)->RangeMultiplier(2)->Range(16, 256)->Complexity();

void BM_QrRetraction(benchmark::State& bench) {
  const int d = static_cast<int>(bench.range(0));
  const int r = d / 4;
  Rng rng(3);
  const Matrix x = project_to_stiefel(rng.gaussian(d, r));
  const Matrix step = 0.1 * rng.gaussian(d, r);
  for (auto _ : bench) benchmark::DoNotOptimize(qr_retraction(x, step));
  bench.SetComplexityN(d);
}
BENCHMARK(BM_QrRetraction)->RangeMultiplier(2)->Range(16, 256)->Complexity();

void BM_DrfgtStep(benchmark::State& bench) {
  Fixture f(5, static_cast<int>(bench.range(0)), 3);
  for (auto _ : bench) {
    f.state = drfgt_step(f.state, f.problem, f.mixing, f.cfg);
    benchmark::DoNotOptimize(f.state.x.front());
  }
}
BENCHMARK(BM_DrfgtStep)->Arg(20)->Arg(50)->Arg(100);

void BM_RetractionDgtStep(benchmark::State& bench) {
  Fixture f(5, static_cast<int>(bench.range(0)), 3);
  NetworkState state = init_network_state(f.x0, 5);
  for (auto _ : bench) {
    state = retraction_dgt_step(state, f.problem, f.mixing, f.cfg);
    benchmark::DoNotOptimize(state.x.front());
  }
}
BENCHMARK(BM_RetractionDgtStep)->Arg(20)->Arg(50)->Arg(100);

void BM_Mix(benchmark::State& bench) {
  const int n = static_cast<int>(bench.range(0));
  MixingMatrix w = build_metropolis(ring_edges(n), n);
  Rng rng(5);
  BlockVec blocks;
  for (int i = 0; i < n; ++i) blocks.push_back(rng.gaussian(50, 5));
  for (auto _ : bench) benchmark::DoNotOptimize(mix(w, blocks));
}
BENCHMARK(BM_Mix)->Arg(4)->Arg(16)->Arg(64);

}  // namespace

BENCHMARK_MAIN();
