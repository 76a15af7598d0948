#include "phn/em.hpp"

#include <cmath>

#include "phn/errors.hpp"
#include "phn/parallel.hpp"

namespace phn {

void EMConfig::validate(int dim) const {
  if (!(eta > 0.0 && eta < std::exp(-1.0)))
    throw InvalidArgument("EM step size must satisfy 0 < eta < 1/e");
  if (n_steps < 0 || burn_in < 0) throw InvalidArgument("negative step counts");
  if (n_steps > 0 && burn_in >= n_steps)
    throw InvalidArgument("burn_in must be smaller than n_steps");
  if (n_steps == 0 && burn_in != 0) throw InvalidArgument("burn_in without steps");
  if (thin < 1) throw InvalidArgument("thin must be at least 1");
  if (x0.size() != dim) throw DimensionMismatchError("x0 dimension mismatch");
  if (n_chains < 1) throw InvalidArgument("n_chains must be at least 1");
}

Vec em_step(const DiffusionModel& m, const Vec& x, double eta, const Vec& xi) {
  if (x.size() != m.dim() || xi.size() != m.dim())
    throw DimensionMismatchError("em_step: dimension mismatch");
  Vec next = x + eta * drift(m, x) + std::sqrt(eta) * (m.sigma * xi);
  if (!next.allFinite()) throw NonFiniteError("em_step produced non-finite state", 0);
  return next;
}

Trajectory simulate_chain(const DiffusionModel& m, const EMConfig& config) {
  if (config.n_steps > 0) config.validate(m.dim());

  Trajectory traj;
  traj.eta = config.eta;
  traj.x0 = config.x0.size() == m.dim() ? config.x0 : Vec::Zero(m.dim());
  traj.seed = config.seed;

  const std::int64_t n_kept =
      config.n_steps > 0 ? (config.n_steps - config.burn_in) / config.thin : 0;
  traj.states.resize(n_kept, m.dim());
  if (n_kept == 0 && config.n_steps == 0) return traj;

  ChainStepper worker(m, config.eta, config.seed);
  Vec x = traj.x0;
  std::int64_t kept = 0;
  for (std::int64_t k = 1; k <= config.n_steps; ++k) {
    worker.advance(x, k);
    if (k > config.burn_in && (k - config.burn_in) % config.thin == 0 && kept < n_kept) {
      traj.states.row(kept++) = x;
    }
  }
  return traj;
}

StepPlan plan_steps(double delta, double K) {
  if (!(delta > 0.0 && delta < 1.0)) throw BadDeltaError("plan_steps requires 0 < delta < 1");
  if (!(K > 0.0)) throw InvalidArgument("planner constant K must be positive");
  StepPlan plan;
  plan.eta = delta * delta;
  const double n = std::ceil(K * std::log(1.0 / delta) / (delta * delta));
  plan.n_steps = std::max<std::int64_t>(1, static_cast<std::int64_t>(n));
  return plan;
}

SampleSet sample_invariant(const DiffusionModel& m, double eta, std::int64_t n_samples,
                           std::int64_t gap, std::int64_t burn_in, std::uint64_t seed,
                           int n_chains, std::size_t n_workers) {
  if (n_samples < 1) throw InvalidArgument("n_samples must be at least 1");
  if (gap < 1) throw InvalidArgument("gap must be at least 1");
  if (n_chains < 1) throw InvalidArgument("n_chains must be at least 1");

  SampleSet out;
  out.provenance.eta = eta;
  out.provenance.burn_in = burn_in;
  out.provenance.gap = gap;
  out.provenance.master_seed = seed;
  out.points.resize(n_samples, m.dim());

  // Chain c takes the c-th slice of samples; seeds depend only on (seed, c).
  std::vector<std::int64_t> offset(n_chains + 1, 0);
  for (int c = 0; c < n_chains; ++c) {
    const std::int64_t share = n_samples / n_chains + (c < n_samples % n_chains ? 1 : 0);
    offset[c + 1] = offset[c] + share;
  }
  out.provenance.chain_seeds.resize(n_chains);
  for (int c = 0; c < n_chains; ++c)
    out.provenance.chain_seeds[c] = rng::derive_seed(seed, rng::SeedRole::Chain, c);

  parallel_for(static_cast<std::size_t>(n_chains), n_workers, [&](std::size_t c) {
    const std::int64_t quota = offset[c + 1] - offset[c];
    if (quota == 0) return;
    EMConfig cfg;
    cfg.eta = eta;
    cfg.burn_in = burn_in;
    cfg.thin = gap;
    cfg.n_steps = burn_in + quota * gap;
    cfg.x0 = Vec::Zero(m.dim());
    cfg.seed = out.provenance.chain_seeds[c];
    cfg.n_chains = 1;
    const Trajectory traj = simulate_chain(m, cfg);
    out.points.middleRows(offset[c], quota) = traj.states;
  });
  return out;
}

double transition_density(const DiffusionModel& m, double eta, const Vec& x, const Vec& z) {
  if (!(eta > 0.0)) throw InvalidArgument("transition density requires eta > 0");
  if (x.size() != m.dim() || z.size() != m.dim())
    throw DimensionMismatchError("transition_density: dimension mismatch");
  const int d = m.dim();
  const Vec mean = x + eta * drift(m, x);
  // sigma is the Cholesky factor, so det(sigma sigma') = prod diag(sigma)^2.
  double log_det = 0.0;
  for (int i = 0; i < d; ++i) log_det += 2.0 * std::log(m.sigma(i, i));
  const Vec w = m.sigma.triangularView<Eigen::Lower>().solve(z - mean);
  const double quad = w.squaredNorm() / eta;
  const double log_norm =
      -0.5 * (d * std::log(2.0 * M_PI) + d * std::log(eta) + log_det);
  return std::exp(log_norm - 0.5 * quad);
}

MomentEstimate moment_estimate(const SampleSet& samples, double ell) {
  if (samples.size() < 1) throw EmptySampleSetError("moment_estimate on empty sample set");
  if (!(ell >= 1.0)) throw InvalidArgument("moment order ell must be >= 1");
  const std::int64_t n = samples.size();
  double sum = 0.0, sum_sq = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    const double v = std::pow(samples.points.row(i).norm(), ell);
    sum += v;
    sum_sq += v * v;
  }
  MomentEstimate est;
  est.value = sum / static_cast<double>(n);
  const double var = std::max(0.0, sum_sq / n - est.value * est.value);
  est.std_error = n > 1 ? std::sqrt(var / static_cast<double>(n - 1)) : 0.0;
  return est;
}

}  // namespace phn
