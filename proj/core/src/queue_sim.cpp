#include "phn/queue_sim.hpp"

#include <cmath>
#include <cstdio>
#include <deque>
#include <fstream>
#include <limits>

#include "phn/errors.hpp"

namespace phn {

double QueueConfig::lambda_n() const {
  return static_cast<double>(n) - beta * std::sqrt(static_cast<double>(n));
}

void QueueConfig::validate() const {
  if (n < 1) throw InvalidArgument("queue needs at least one server");
  if (!(lambda_n() > 0.0)) throw InvalidArgument("arrival rate n - beta sqrt(n) must be positive");
  if (!(alpha > 0.0)) throw InvalidArgument("patience rate alpha must be positive");
  if (!pt.is_mean_one()) throw InvalidArgument("queue requires a mean-1 phase type");
  if (horizon < 0.0 || burn_in < 0.0 || !(sample_spacing > 0.0))
    throw InvalidArgument("invalid horizon, burn-in or sample spacing");
}

namespace {

struct QueueState {
  std::vector<std::int64_t> in_service;  // per current phase
  std::deque<int> waiting;               // initial phases, FIFO
  std::vector<std::int64_t> waiting_by_phase;
  std::int64_t served_total = 0;

  explicit QueueState(int d) : in_service(d, 0), waiting_by_phase(d, 0) {}

  std::int64_t in_service_total() const {
    std::int64_t s = 0;
    for (auto v : in_service) s += v;
    return s;
  }
  std::int64_t total() const { return in_service_total() + static_cast<std::int64_t>(waiting.size()); }
};

int draw_categorical(rng::Xoshiro256pp& gen, const double* weights, int count, double total) {
  double u = gen.uniform01() * total;
  int last_positive = 0;
  for (int i = 0; i < count; ++i) {
    if (weights[i] <= 0.0) continue;
    last_positive = i;
    u -= weights[i];
    if (u <= 0.0) return i;
  }
  // round-off spill: fall back to the last category that had mass
  return last_positive;
}

int draw_initial_phase(rng::Xoshiro256pp& gen, const Vec& p) {
  double u = gen.uniform01();
  for (int i = 0; i + 1 < p.size(); ++i) {
    u -= p(i);
    if (u <= 0.0) return i;
  }
  return static_cast<int>(p.size()) - 1;
}

}  // namespace

QueuePath simulate_queue(const QueueConfig& config) {
  config.validate();
  const int d = config.pt.d;
  const int n = config.n;
  const double lambda = config.lambda_n();
  const Vec& p = config.pt.p;
  const Mat& P = config.pt.P;
  const Vec& v = config.pt.v;
  Vec depart_prob(d);  // 1 - sum_j P_kj
  for (int k = 0; k < d; ++k) depart_prob(k) = 1.0 - P.row(k).sum();

  std::ofstream event_log;
  if (!config.event_log_path.empty()) {
    event_log.open(config.event_log_path);
    if (!event_log) throw InvalidArgument("cannot write " + config.event_log_path);
    event_log << "time,event_type,phase,total_in_system\n";
  }

  rng::Xoshiro256pp gen(config.seed);
  QueueState state(d);

  const double t_end = config.burn_in + config.horizon;
  const auto n_samples =
      static_cast<std::int64_t>(std::floor(config.horizon / config.sample_spacing));
  QueuePath path;
  path.spacing = config.sample_spacing;
  path.states.resize(n_samples, d);
  std::int64_t next_sample = 0;

  auto record_until = [&](double t) {
    while (next_sample < n_samples &&
           config.burn_in + (next_sample + 1) * config.sample_spacing <= t) {
      for (int k = 0; k < d; ++k)
        path.states(next_sample, k) =
            static_cast<double>(state.in_service[k] + state.waiting_by_phase[k]);
      ++next_sample;
    }
  };

  auto admit_head_if_any = [&] {
    if (state.waiting.empty() || state.in_service_total() >= n) return;
    const int phase = state.waiting.front();
    state.waiting.pop_front();
    --state.waiting_by_phase[phase];
    ++state.in_service[phase];
  };

  std::vector<double> weights(d + 2, 0.0);
  double t = 0.0;
  while (t < t_end) {
    double total = lambda;
    weights[0] = lambda;
    for (int k = 0; k < d; ++k) {
      weights[k + 1] = v(k) * static_cast<double>(state.in_service[k]);
      total += weights[k + 1];
    }
    weights[d + 1] = config.alpha * static_cast<double>(state.waiting.size());
    total += weights[d + 1];

    // exponential clock of the superposed process
    const double dt = -std::log(gen.uniform01()) / total;
    const double t_next = t + dt;
    record_until(std::min(t_next, t_end));
    if (t_next >= t_end) break;
    t = t_next;
    ++path.events;

    auto log_event = [&](const char* type, int phase) {
      if (!event_log.is_open()) return;
      char buf[96];
      std::snprintf(buf, sizeof(buf), "%.17g,%s,%d,%lld\n", t, type, phase + 1,
                    static_cast<long long>(state.total()));
      event_log << buf;
    };

    const int ev = draw_categorical(gen, weights.data(), d + 2, total);
    if (ev == 0) {  // arrival
      ++path.arrivals;
      const int phase = draw_initial_phase(gen, p);
      if (state.in_service_total() < n) {
        ++state.in_service[phase];
      } else {
        state.waiting.push_back(phase);
        ++state.waiting_by_phase[phase];
      }
      log_event("arrival", phase);
    } else if (ev <= d) {  // phase completion in phase k
      const int k = ev - 1;
      --state.in_service[k];
      const double u = gen.uniform01();
      double acc = depart_prob(k);
      if (u <= acc) {  // service complete, departure
        ++path.departures;
        admit_head_if_any();
        log_event("departure", k);
      } else {  // route to next phase
        int j = d - 1;
        for (int cand = 0; cand < d; ++cand) {
          acc += P(k, cand);
          if (u <= acc) {
            j = cand;
            break;
          }
        }
        ++state.in_service[j];
        log_event("phase_transition", j);
      }
    } else {  // abandonment: uniformly random waiting customer
      const auto w = static_cast<std::int64_t>(state.waiting.size());
      const auto idx = std::min<std::int64_t>(
          w - 1, static_cast<std::int64_t>(gen.uniform01() * static_cast<double>(w)));
      const int phase = state.waiting[idx];
      state.waiting.erase(state.waiting.begin() + idx);
      --state.waiting_by_phase[phase];
      ++path.abandonments;
      log_event("abandonment", phase);
    }
  }
  record_until(t_end);
  path.in_system_at_end = state.total();
  return path;
}

SampleSet diffusion_scale(const QueuePath& path, int n, const Vec& gamma) {
  if (gamma.size() != path.states.cols())
    throw DimensionMismatchError("diffusion_scale: gamma dimension mismatch");
  SampleSet out;
  const double root_n = std::sqrt(static_cast<double>(n));
  out.points = (path.states.rowwise() - (static_cast<double>(n) * gamma).transpose()) / root_n;
  out.provenance.eta = 0.0;
  return out;
}

SteadyStateComparison steady_state_compare(const QueueConfig& config,
                                           const DiffusionModel& model,
                                           const SampleSet& em_samples,
                                           const Exact1DInvariant* oracle, int n_directions,
                                           std::uint64_t direction_seed) {
  if (config.pt.d != model.dim() || std::abs(config.alpha - model.alpha) > 1e-12 ||
      std::abs(config.beta - model.beta) > 1e-12 ||
      (config.pt.v - model.pt.v).norm() > 1e-12 || (config.pt.p - model.pt.p).norm() > 1e-12)
    throw ParameterMismatchError("queue and diffusion model parameters disagree");
  if (oracle && (std::abs(oracle->alpha() - model.alpha) > 1e-12 ||
                 std::abs(oracle->beta() - model.beta) > 1e-12))
    throw ParameterMismatchError("oracle parameters disagree with the model");

  const QueuePath path = simulate_queue(config);
  const SampleSet scaled = diffusion_scale(path, config.n, model.gamma);

  SteadyStateComparison cmp;
  cmp.n = config.n;
  cmp.queue_samples = scaled.size();
  cmp.w1_vs_em = w1_sliced(scaled.points, em_samples.points, n_directions, direction_seed);
  if (oracle && model.dim() == 1) {
    std::vector<double> xs(scaled.points.data(), scaled.points.data() + scaled.points.rows());
    cmp.w1_vs_oracle = oracle->w1_vs_samples(xs);
  } else {
    cmp.w1_vs_oracle = std::numeric_limits<double>::quiet_NaN();
  }
  return cmp;
}

std::vector<double> birth_death_stationary(double lambda, double v, double alpha, int n,
                                           int max_states) {
  if (!(lambda > 0.0) || !(v > 0.0) || !(alpha > 0.0) || n < 1)
    throw InvalidArgument("birth_death_stationary: invalid rates");
  std::vector<double> pi{1.0};
  double mass = 1.0;
  for (int k = 1; k < max_states; ++k) {
    const double death = std::min(k, n) * v + std::max(0, k - n) * alpha;
    const double next = pi.back() * lambda / death;
    pi.push_back(next);
    mass += next;
    if (k > n && next / mass < 1e-12) break;
  }
  for (auto& x : pi) x /= mass;
  return pi;
}

}  // namespace phn
