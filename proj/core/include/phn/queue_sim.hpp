#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "phn/em.hpp"
#include "phn/stats.hpp"

namespace phn {

/// n-server M/Ph/n+M queue in the Halfin-Whitt parameterization:
/// Poisson arrivals at rate lambda_n = n - beta sqrt(n) (requires mean-1
/// service), phase-type service, exponential patience at rate alpha, FCFS.
struct QueueConfig {
  int n = 1;
  PhaseTypeService pt;
  double alpha = 1.0;
  double beta = 0.0;
  double horizon = 0.0;         // simulated time after burn-in
  double burn_in = 50.0;        // simulated time discarded
  double sample_spacing = 1.0;  // uniform grid spacing for state samples
  std::uint64_t seed = 0;
  std::string event_log_path;   // optional per-event CSV, empty = off

  double lambda_n() const;
  void validate() const;
};

/// Per-phase head counts X sampled on the uniform time grid, with exact event
/// accounting. Waiting customers are counted in their initial phase (drawn at
/// arrival); in-service customers in their current phase.
struct QueuePath {
  Mat states;  // n_samples x d, row = X at grid time burn_in + (k+1)*spacing
  double spacing = 1.0;
  std::int64_t arrivals = 0;
  std::int64_t departures = 0;
  std::int64_t abandonments = 0;
  std::int64_t in_system_at_end = 0;
  std::int64_t events = 0;
};

/// Exact CTMC simulation by the next-event (total exponential clock) method.
QueuePath simulate_queue(const QueueConfig& config);

/// Diffusion scaling (X - n gamma) / sqrt(n) applied row-wise.
SampleSet diffusion_scale(const QueuePath& path, int n, const Vec& gamma);

struct SteadyStateComparison {
  int n = 0;
  double w1_vs_em = 0.0;      // sliced W1, scaled queue vs EM invariant samples
  double w1_vs_oracle = 0.0;  // d = 1 only; NaN otherwise
  std::int64_t queue_samples = 0;
};

/// Compares scaled queue steady-state samples with EM invariant samples (and
/// the exact d=1 law when supplied). Model parameters must match the queue's;
/// otherwise ParameterMismatchError.
SteadyStateComparison steady_state_compare(const QueueConfig& config,
                                           const DiffusionModel& model,
                                           const SampleSet& em_samples,
                                           const Exact1DInvariant* oracle = nullptr,
                                           int n_directions = 16,
                                           std::uint64_t direction_seed = 0x51ce);

/// Stationary distribution of the d=1 birth-death chain (birth lambda, death
/// min(k,n) v + (k-n)^+ alpha), truncated where the tail mass drops below
/// 1e-12. Used as the product-form oracle in tests.
std::vector<double> birth_death_stationary(double lambda, double v, double alpha, int n,
                                           int max_states = 4096);

}  // namespace phn
