#pragma once

#include <cstdint>
#include <vector>

#include "phn/model.hpp"
#include "phn/rng.hpp"

namespace phn {

/// Configuration of one Euler-Maruyama chain.
/// Requires 0 < eta < 1/e, thin >= 1 and burn_in < n_steps (burn_in == 0 when
/// n_steps == 0).
struct EMConfig {
  double eta = 0.0;
  std::int64_t n_steps = 0;
  std::int64_t burn_in = 0;
  std::int64_t thin = 1;
  Vec x0;
  std::uint64_t seed = 0;
  int n_chains = 1;

  void validate(int dim) const;
};

/// Kept states of one chain, row k is the state at step burn_in + (k+1)*thin.
struct Trajectory {
  Mat states;  // n_kept x d
  double eta = 0.0;
  Vec x0;
  std::uint64_t seed = 0;
  int chain_id = 0;

  std::int64_t n_kept() const { return states.rows(); }
};

struct SampleProvenance {
  double eta = 0.0;
  std::int64_t burn_in = 0;
  std::int64_t gap = 1;
  std::uint64_t master_seed = 0;
  std::vector<std::uint64_t> chain_seeds;
};

/// Pooled draws approximating the EM invariant measure.
struct SampleSet {
  Mat points;  // N x d
  SampleProvenance provenance;

  std::int64_t size() const { return points.rows(); }
  int dim() const { return static_cast<int>(points.cols()); }
};

/// One EM update x' = x + g(x) eta + sqrt(eta) sigma xi for a standard normal
/// draw xi. eta == 0 is allowed here (the config rejects it) so tests can
/// exercise the degenerate step.
Vec em_step(const DiffusionModel& m, const Vec& x, double eta, const Vec& xi);

/// Reusable allocation-free stepper for hot loops. Owns its generator; draws
/// are consumed coordinate-major, d per step. Aborts with NonFiniteError when
/// the state norm exceeds 1e8.
class ChainStepper {
 public:
  ChainStepper(const DiffusionModel& m, double eta, std::uint64_t seed)
      : m_(&m),
        eta_(eta),
        sqrt_eta_(std::sqrt(eta)),
        gen_(seed),
        xi_(m.dim()),
        gbuf_(m.dim()),
        nbuf_(m.dim()) {}

  void advance(Vec& x, std::int64_t step_index) {
    for (int i = 0; i < m_->dim(); ++i) xi_(i) = gen_.normal();
    drift_into(*m_, x, gbuf_);
    nbuf_.noalias() = m_->sigma * xi_;
    x += eta_ * gbuf_ + sqrt_eta_ * nbuf_;
    if (!x.allFinite() || x.norm() > 1e8)
      throw NonFiniteError("EM chain diverged", step_index);
  }

 private:
  const DiffusionModel* m_;
  double eta_, sqrt_eta_;
  rng::Xoshiro256pp gen_;
  Vec xi_, gbuf_, nbuf_;
};

/// Runs one chain. Deterministic: identical (model, config) give bit-identical
/// trajectories. Gaussian draws are consumed coordinate-major, d per step.
/// Aborts with NonFiniteError (carrying the step index) if the state norm
/// exceeds 1e8, which is unreachable for a valid model and step size.
Trajectory simulate_chain(const DiffusionModel& m, const EMConfig& config);

/// Step planner for a target Wasserstein accuracy delta: eta = delta^2 and
/// N = ceil(K delta^{-2} log(1/delta)), at least 1. K is the constant hidden
/// in the O(.) of the planner and is a caller-chosen heuristic.
struct StepPlan {
  double eta = 0.0;
  std::int64_t n_steps = 0;
};
StepPlan plan_steps(double delta, double K);

/// Draws n_samples points of the EM invariant measure, pooled over n_chains
/// independent chains started at the origin. Chain c is seeded with
/// derive_seed(seed, Chain, c) and contributes its share of samples spaced
/// `gap` steps apart after `burn_in` steps; chains merge in chain_id order, so
/// the result never depends on the worker count.
SampleSet sample_invariant(const DiffusionModel& m, double eta, std::int64_t n_samples,
                           std::int64_t gap, std::int64_t burn_in, std::uint64_t seed,
                           int n_chains, std::size_t n_workers = 0);

/// Gaussian one-step transition density of the chain: N(x + g(x) eta, eta sigma sigma')
/// evaluated at z.
double transition_density(const DiffusionModel& m, double eta, const Vec& x, const Vec& z);

struct MomentEstimate {
  double value = 0.0;
  double std_error = 0.0;
};

/// Empirical mean of |x|^ell over a sample set, with its standard error.
MomentEstimate moment_estimate(const SampleSet& samples, double ell);

}  // namespace phn
