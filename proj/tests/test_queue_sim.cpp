#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "phn/errors.hpp"
#include "phn/queue_sim.hpp"
#include "test_models.hpp"

using namespace phn;

namespace {
QueueConfig base_config(const PhaseTypeService& pt, int n, double alpha, double beta) {
  QueueConfig cfg;
  cfg.n = n;
  cfg.pt = pt;
  cfg.alpha = alpha;
  cfg.beta = beta;
  cfg.horizon = 200.0;
  cfg.burn_in = 50.0;
  cfg.sample_spacing = 1.0;
  cfg.seed = 4711;
  return cfg;
}
}  // namespace

TEST_CASE("queue event-count conservation is exact") {
  for (int n : {5, 25}) {
    QueueConfig cfg = base_config(erlang2_service(), n, 1.0, 1.0);
    cfg.horizon = 500.0;
    const QueuePath path = simulate_queue(cfg);
    CHECK(path.arrivals == path.departures + path.abandonments + path.in_system_at_end);
    CHECK(path.events > 0);
  }
}

TEST_CASE("queue states stay within physical bounds") {
  QueueConfig cfg = base_config(erlang2_service(), 10, 0.5, 1.0);
  const QueuePath path = simulate_queue(cfg);
  for (std::int64_t k = 0; k < path.states.rows(); ++k) {
    CHECK(path.states.row(k).minCoeff() >= 0.0);
  }
}

TEST_CASE("busy fraction strictly between 0 and 1 for Erlang-2 at n = 25") {
  QueueConfig cfg = base_config(erlang2_service(), 25, 0.5, 1.0);
  cfg.horizon = 1000.0;
  const QueuePath path = simulate_queue(cfg);
  // total in system per sample; busy servers = min(total, n)
  double busy = 0.0;
  for (std::int64_t k = 0; k < path.states.rows(); ++k)
    busy += std::min(path.states.row(k).sum(), static_cast<double>(cfg.n));
  busy /= (static_cast<double>(path.states.rows()) * cfg.n);
  CHECK(busy > 0.0);
  CHECK(busy < 1.0);
}

TEST_CASE("queue drains monotonically when arrivals are disabled") {
  // beta sqrt(n) = n makes lambda_n = 0; validate() forbids it, so drive the
  // drain through a tiny horizon simulation with a huge beta via direct state
  // evolution: use beta just below the cap so arrivals are negligible.
  QueueConfig cfg = base_config(exponential_service(), 100, 1.0, 9.99);
  cfg.horizon = 60.0;
  cfg.burn_in = 0.0;
  const QueuePath path = simulate_queue(cfg);
  // lambda = 100 - 99.9 = 0.1: the system stays essentially empty
  double mean_total = 0.0;
  for (std::int64_t k = 0; k < path.states.rows(); ++k) mean_total += path.states.row(k).sum();
  mean_total /= static_cast<double>(path.states.rows());
  CHECK(mean_total < 1.0);
}

TEST_CASE("memoryless clocks: event-time increments match the total rate") {
  // fixed-state harness: an overloaded start with arrivals dominating
  QueueConfig cfg = base_config(exponential_service(), 50, 1.0, 1.0);
  cfg.horizon = 4000.0;
  cfg.burn_in = 100.0;
  const QueuePath path = simulate_queue(cfg);
  // in steady state the event count over the horizon estimates the mean total
  // rate; for M/M/n+M with v = alpha = 1 the death rate equals the head count
  const double total_time = cfg.horizon + cfg.burn_in;
  const double events_per_time = static_cast<double>(path.events) / total_time;
  double mean_head = 0.0;
  for (std::int64_t k = 0; k < path.states.rows(); ++k) mean_head += path.states.row(k).sum();
  mean_head /= static_cast<double>(path.states.rows());
  const double expected_rate = cfg.lambda_n() + mean_head;
  CHECK(events_per_time == doctest::Approx(expected_rate).epsilon(0.01));
}

TEST_CASE("d = 1 stationary law matches the birth-death product form (chi^2)" *
          doctest::timeout(600)) {
  // n = 5, v = alpha = 1: death rate is k for every k, so pi is Poisson(lambda)
  const int n = 5;
  QueueConfig cfg = base_config(exponential_service(), n, 1.0, 1.0);
  cfg.sample_spacing = 5.0;  // wide spacing: samples nearly independent
  cfg.horizon = 220000.0;
  const QueuePath path = simulate_queue(cfg);
  CHECK(path.events > 1000000);

  const std::vector<double> pi = birth_death_stationary(cfg.lambda_n(), 1.0, 1.0, n);

  // bin by head count, merging the tail so expected counts stay above 5
  const auto n_samples = static_cast<double>(path.states.rows());
  std::vector<std::int64_t> observed(pi.size() + 1, 0);
  for (std::int64_t k = 0; k < path.states.rows(); ++k) {
    const auto state = static_cast<std::size_t>(path.states(k, 0));
    observed[std::min(state, pi.size())] += 1;
  }
  double chi2 = 0.0;
  int dof = -1;
  double acc_exp = 0.0;
  std::int64_t acc_obs = 0;
  for (std::size_t s = 0; s < observed.size(); ++s) {
    acc_exp += n_samples * (s < pi.size() ? pi[s] : 0.0);
    acc_obs += observed[s];
    const bool tail_short = acc_exp < 5.0 && s + 1 < observed.size();
    if (tail_short) continue;
    if (acc_exp > 0.0) {
      chi2 += (acc_obs - acc_exp) * (acc_obs - acc_exp) / acc_exp;
      ++dof;
    }
    acc_exp = 0.0;
    acc_obs = 0;
  }
  REQUIRE(dof >= 3);
  // chi^2 p-value via the Wilson-Hilferty cube-root normal approximation
  const double wh = (std::pow(chi2 / dof, 1.0 / 3.0) - (1.0 - 2.0 / (9.0 * dof))) /
                    std::sqrt(2.0 / (9.0 * dof));
  const double p_value = 1.0 - normal_cdf(wh);
  CHECK(p_value > 0.01);
}

TEST_CASE("diffusion_scale") {
  const DiffusionModel m = erlang2_model();
  QueuePath path;
  path.states = Mat(2, 2);
  path.states << 50.0, 50.0, 60.0, 50.0;
  SUBCASE("X = n gamma maps to zero") {
    const SampleSet scaled = diffusion_scale(path, 100, m.gamma);
    CHECK(scaled.points(0, 0) == doctest::Approx(0.0));
    CHECK(scaled.points(0, 1) == doctest::Approx(0.0));
  }
  SUBCASE("hand-computed scaling") {
    const SampleSet scaled = diffusion_scale(path, 100, m.gamma);
    CHECK(scaled.points(1, 0) == doctest::Approx(1.0));
    CHECK(scaled.points(1, 1) == doctest::Approx(0.0));
  }
  SUBCASE("scaling then unscaling is the identity") {
    const SampleSet scaled = diffusion_scale(path, 100, m.gamma);
    const Mat unscaled =
        (scaled.points * std::sqrt(100.0)).rowwise() + (100.0 * m.gamma).transpose();
    CHECK((unscaled - path.states).norm() < 1e-12);
  }
  SUBCASE("dimension mismatch") {
    CHECK_THROWS_AS(diffusion_scale(path, 100, Vec::Ones(3)), DimensionMismatchError);
  }
}

TEST_CASE("queue event log CSV matches the event accounting") {
  namespace fs = std::filesystem;
  const fs::path log = fs::temp_directory_path() / "phn_test_queue_events.csv";
  QueueConfig cfg = base_config(erlang2_service(), 5, 1.0, 1.0);
  cfg.horizon = 50.0;
  cfg.event_log_path = log.string();
  const QueuePath path = simulate_queue(cfg);

  std::ifstream in(log);
  REQUIRE(in.good());
  std::string line;
  std::getline(in, line);
  CHECK(line == "time,event_type,phase,total_in_system");
  std::int64_t arrivals = 0, departures = 0, abandonments = 0, transitions = 0;
  while (std::getline(in, line)) {
    if (line.find(",arrival,") != std::string::npos) ++arrivals;
    if (line.find(",departure,") != std::string::npos) ++departures;
    if (line.find(",abandonment,") != std::string::npos) ++abandonments;
    if (line.find(",phase_transition,") != std::string::npos) ++transitions;
  }
  CHECK(arrivals == path.arrivals);
  CHECK(departures == path.departures);
  CHECK(abandonments == path.abandonments);
  CHECK(arrivals + departures + abandonments + transitions == path.events);
  fs::remove(log);
}

TEST_CASE("steady_state_compare rejects mismatched parameters") {
  const DiffusionModel m = scalar_model(1.0, 1.0);
  const SampleSet em = sample_invariant(m, 0.01, 500, 10, 100, 3, 2);
  QueueConfig cfg = base_config(exponential_service(), 25, 0.5, 1.0);  // alpha differs
  cfg.horizon = 10.0;
  CHECK_THROWS_AS(steady_state_compare(cfg, m, em), ParameterMismatchError);
}

TEST_CASE("scaled queue approaches the exact law as n grows" * doctest::timeout(600)) {
  const DiffusionModel m = scalar_model(1.0, 1.0);
  const Exact1DInvariant law(1.0, 1.0);
  const SampleSet em = sample_invariant(m, 1e-2, 20000, 100, 10000, 2027, 8);

  double w1_small = 0.0, w1_large = 0.0;
  for (const int n : {25, 100}) {
    QueueConfig cfg = base_config(exponential_service(), n, 1.0, 1.0);
    cfg.horizon = 20000.0;
    cfg.seed = rng::derive_seed(6060, rng::SeedRole::Replication, n);
    const SteadyStateComparison cmp = steady_state_compare(cfg, m, em, &law);
    CHECK(cmp.queue_samples == 20000);
    (n == 25 ? w1_small : w1_large) = cmp.w1_vs_oracle;
  }
  CHECK(w1_large < w1_small);  // C/sqrt(n) trend
}
