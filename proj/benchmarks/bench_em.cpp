#include <benchmark/benchmark.h>

#include "phn/em.hpp"

using namespace phn;

namespace {

PhaseTypeService erlang(int phases) {
  Vec p = Vec::Zero(phases);
  p(0) = 1.0;
  Vec v = Vec::Constant(phases, static_cast<double>(phases));
  Mat P = Mat::Zero(phases, phases);
  for (int i = 0; i + 1 < phases; ++i) P(i, i + 1) = 1.0;
  return build_phase_type(p, P, v);
}

void BM_ChainStep(benchmark::State& state) {
  const DiffusionModel m = build_model(erlang(static_cast<int>(state.range(0))), 0.5, 1.0);
  ChainStepper stepper(m, 0.01, 42);
  Vec x = Vec::Zero(m.dim());
  std::int64_t k = 0;
  for (auto _ : state) {
    stepper.advance(x, ++k);
    benchmark::DoNotOptimize(x.data());
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_ChainStep)->Arg(1)->Arg(2)->Arg(4)->Arg(8);

void BM_SampleInvariant(benchmark::State& state) {
  const DiffusionModel m = build_model(erlang(2), 0.5, 1.0);
  for (auto _ : state) {
    const SampleSet set = sample_invariant(m, 0.01, state.range(0), 10, 1000, 7, 4);
    benchmark::DoNotOptimize(set.points.data());
  }
}
BENCHMARK(BM_SampleInvariant)->Arg(1000)->Arg(10000);

void BM_TransitionDensity(benchmark::State& state) {
  const DiffusionModel m = build_model(erlang(4), 0.5, 1.0);
  Vec x = Vec::Constant(4, 0.2), z = Vec::Constant(4, 0.1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(transition_density(m, 0.01, x, z));
  }
}
BENCHMARK(BM_TransitionDensity);

}  // namespace
