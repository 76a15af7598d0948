#include <benchmark/benchmark.h>

#include "phn/queue_sim.hpp"

using namespace phn;

namespace {

PhaseTypeService erlang2() {
  Vec p(2), v(2);
  p << 1.0, 0.0;
  v << 2.0, 2.0;
  Mat P = Mat::Zero(2, 2);
  P(0, 1) = 1.0;
  return build_phase_type(p, P, v);
}

void BM_QueueSimulate(benchmark::State& state) {
  QueueConfig cfg;
  cfg.n = static_cast<int>(state.range(0));
  cfg.pt = erlang2();
  cfg.alpha = 1.0;
  cfg.beta = 1.0;
  cfg.horizon = 200.0;
  cfg.burn_in = 10.0;
  cfg.seed = 5;
  std::int64_t events = 0;
  for (auto _ : state) {
    const QueuePath path = simulate_queue(cfg);
    events += path.events;
    benchmark::DoNotOptimize(path.states.data());
  }
  state.SetItemsProcessed(events);
}
BENCHMARK(BM_QueueSimulate)->Arg(10)->Arg(100)->Arg(1000);

}  // namespace
