#include <benchmark/benchmark.h>

#include "phn/rng.hpp"
#include "phn/stats.hpp"

using namespace phn;

namespace {

std::vector<double> gaussian_series(std::size_t n, std::uint64_t seed) {
  rng::Xoshiro256pp gen(seed);
  std::vector<double> out(n);
  for (auto& v : out) v = gen.normal();
  return out;
}

void BM_W1_1D(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = gaussian_series(n, 1);
  const auto b = gaussian_series(n, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(w1_1d(a, b));
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_W1_1D)->Arg(10000)->Arg(100000);

void BM_W1VsExactLaw(benchmark::State& state) {
  const Exact1DInvariant law(1.0, 1.0);
  auto xs = gaussian_series(static_cast<std::size_t>(state.range(0)), 3);
  for (auto& x : xs) x -= 1.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(law.w1_vs_samples(xs));
  }
}
BENCHMARK(BM_W1VsExactLaw)->Arg(10000)->Arg(100000);

void BM_LongRunVariance(benchmark::State& state) {
  const auto series = gaussian_series(static_cast<std::size_t>(state.range(0)), 4);
  for (auto _ : state) {
    benchmark::DoNotOptimize(long_run_variance(series));
  }
}
BENCHMARK(BM_LongRunVariance)->Arg(100000)->Arg(1000000);

void BM_ExactQuantile(benchmark::State& state) {
  const Exact1DInvariant law(0.5, 1.0);
  double u = 0.0001;
  for (auto _ : state) {
    benchmark::DoNotOptimize(law.quantile(u));
    u += 0.0001;
    if (u >= 0.9999) u = 0.0001;
  }
}
BENCHMARK(BM_ExactQuantile);

}  // namespace
