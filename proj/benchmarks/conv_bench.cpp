#include <benchmark/benchmark.h>

#include "tenproj/layers.hpp"
#include "tenproj/rng.hpp"

using namespace tenproj;

static void BM_Conv2dForwardBackward(benchmark::State& state) {
  const Index hw = state.range(0), cin = state.range(1), cout = state.range(2);
  Conv2d conv({hw, hw, cin}, {cout}, 1);
  conv.set_threads(static_cast<int>(state.range(3)));
  Rng rng(3);
  Matrix x(hw * hw * cin, 100), g(hw * hw * cout, 100);
  rng.fill_uniform(x, -1, 1);
  rng.fill_uniform(g, -1, 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(conv.forward(x, RunMode::train));
    benchmark::DoNotOptimize(conv.backward(g));
  }
  state.SetItemsProcessed(state.iterations() * 100);
}
// Model (I) conv layers at batch 100
BENCHMARK(BM_Conv2dForwardBackward)->Args({28, 1, 32, 1})->Args({14, 32, 64, 1})->Unit(benchmark::kMillisecond);

static void BM_Conv2dDirect(benchmark::State& state) {
  Rng rng(4);
  Matrix x(14 * 14 * 32, 10), w(9 * 32, 64), b = Matrix::Zero(64, 1);
  rng.fill_uniform(x, -1, 1);
  rng.fill_uniform(w, -1, 1);
  for (auto _ : state) benchmark::DoNotOptimize(conv2d_direct(x, {14, 14, 32}, w, b, {64}));
}
BENCHMARK(BM_Conv2dDirect)->Unit(benchmark::kMillisecond);
