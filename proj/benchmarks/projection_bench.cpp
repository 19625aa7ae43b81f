#include <benchmark/benchmark.h>

#include "tenproj/projection_layer.hpp"
#include "tenproj/rng.hpp"

using namespace tenproj;

namespace {

struct Fixture {
  TensorProjectionLayer layer;
  std::vector<Tensor3> grads;

  Fixture(Dims3 p, Dims3 q, std::array<bool, 3> enabled, int batch)
      : layer({p, q, enabled, {0.01, 0.01, 0.01}, JacobianMode::exact}, 1) {
    Rng rng(2);
    std::vector<Tensor3> xs;
    for (int i = 0; i < batch; ++i) {
      Tensor3 x(p), g(q);
      for (double& v : x.data()) v = rng.uniform(-1, 1);
      for (double& v : g.data()) v = rng.uniform(-1, 1);
      xs.push_back(std::move(x));
      grads.push_back(std::move(g));
    }
    layer.forward(xs);
  }
};

}  // namespace

static void BM_ProjectionBackwardFast(benchmark::State& state) {
  const Index p = state.range(0);
  Fixture f({p, p, 3}, {p / 2, p / 2, 3}, {true, true, true}, 8);
  for (auto _ : state) benchmark::DoNotOptimize(f.layer.backward(f.grads));
}
BENCHMARK(BM_ProjectionBackwardFast)->Arg(4)->Arg(8)->Arg(12);

static void BM_ProjectionBackwardReference(benchmark::State& state) {
  const Index p = state.range(0);
  Fixture f({p, p, 3}, {p / 2, p / 2, 3}, {true, true, true}, 8);
  for (auto _ : state) benchmark::DoNotOptimize(f.layer.backward_reference(f.grads));
}
BENCHMARK(BM_ProjectionBackwardReference)->Arg(4)->Arg(8)->Arg(12)->Unit(benchmark::kMillisecond);

// The Model (I) layer: (14,14,64) -> (7,7,64), batch 100.
static void BM_ModelOneProjectionStep(benchmark::State& state) {
  Fixture f({14, 14, 64}, {7, 7, 64}, {true, true, false}, 100);
  std::vector<Tensor3> xs(100, Tensor3({14, 14, 64}));
  for (auto _ : state) {
    benchmark::DoNotOptimize(f.layer.forward(xs));
    benchmark::DoNotOptimize(f.layer.backward(f.grads));
  }
}
BENCHMARK(BM_ModelOneProjectionStep)->Unit(benchmark::kMillisecond);
