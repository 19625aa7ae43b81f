#include <benchmark/benchmark.h>

#include "tenproj/rng.hpp"
#include "tenproj/tensor.hpp"

using namespace tenproj;

static Tensor3 random_tensor(Dims3 d, Rng& rng) {
  Tensor3 t(d);
  for (double& v : t.data()) v = rng.uniform(-1.0, 1.0);
  return t;
}

static void BM_KmodeProduct(benchmark::State& state) {
  const int mode = static_cast<int>(state.range(0));
  const Index p = state.range(1);
  Rng rng(1);
  const Tensor3 x = random_tensor({p, p, p}, rng);
  Matrix m(p / 2, p);
  rng.fill_uniform(m, -1, 1);
  for (auto _ : state) benchmark::DoNotOptimize(kmode_product(x, mode, m));
  state.SetItemsProcessed(state.iterations() * x.size());
}
BENCHMARK(BM_KmodeProduct)->ArgsProduct({{1, 2, 3}, {16, 64}});

// Unfold-multiply-fold, the textbook route, for comparison with the mapped GEMMs.
static void BM_KmodeViaUnfold(benchmark::State& state) {
  const int mode = static_cast<int>(state.range(0));
  const Index p = state.range(1);
  Rng rng(1);
  const Tensor3 x = random_tensor({p, p, p}, rng);
  Matrix m(p / 2, p);
  rng.fill_uniform(m, -1, 1);
  Dims3 d{p, p, p};
  d[mode - 1] = p / 2;
  for (auto _ : state) benchmark::DoNotOptimize(fold(m * unfold(x, mode), mode, d));
  state.SetItemsProcessed(state.iterations() * x.size());
}
BENCHMARK(BM_KmodeViaUnfold)->ArgsProduct({{1, 2, 3}, {16, 64}});
