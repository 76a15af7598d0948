#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "phn/em.hpp"
#include "phn/model.hpp"

namespace phn {

// ---------------------------------------------------------------------------
// Wasserstein-1 distances
// ---------------------------------------------------------------------------

/// Exact W1 between two 1-D empirical distributions (quantile-coupling form).
/// Handles unequal sizes by integrating the step quantile functions over the
/// merged probability breakpoints; for equal sizes this is the mean absolute
/// difference of order statistics.
double w1_1d(std::span<const double> a, std::span<const double> b);

/// Projection directions for sliced W1: e/|e| first, then the coordinate
/// axes, then unit Gaussians drawn from the seed; exact duplicates dropped.
std::vector<Vec> sliced_directions(int dim, int n_directions, std::uint64_t seed);

/// Sliced W1: mean of w1_1d over the fixed projection set.
double w1_sliced(const Mat& A, const Mat& B, int n_directions, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Exact one-dimensional invariant law
// ---------------------------------------------------------------------------

/// Closed-form stationary law of the d=1 diffusion (sigma^2 = 2,
/// g(x) = -beta - x + (1-alpha) x^+): density proportional to
/// exp(-beta x - x^2/2) on x <= 0 and exp(-beta x - alpha x^2/2) on x > 0.
/// For alpha = 1 this is exactly Normal(-beta, 1).
class Exact1DInvariant {
 public:
  Exact1DInvariant(double alpha, double beta);

  double alpha() const { return alpha_; }
  double beta() const { return beta_; }
  double normalizing_constant() const { return z_; }

  double pdf(double x) const;
  double cdf(double x) const;
  double quantile(double u) const;

  /// Deterministic stratified draw: quantiles at (i + 0.5)/n.
  std::vector<double> stratified_sample(std::int64_t n) const;

  /// Exact W1 between a 1-D empirical sample and this law, computed as the
  /// integral of |F_hat - F| (area between CDFs).
  double w1_vs_samples(std::span<const double> samples) const;

 private:
  double quantile_search(double u, double lo, double hi) const;

  double alpha_ = 0.0;
  double beta_ = 0.0;
  double z_ = 0.0;         // normalizing constant
  double left_mass_ = 0.0; // total mass of the x <= 0 branch
  std::vector<double> table_x_;  // quantiles at (k+1)/(size+2), k = 0..size-1
};

inline Exact1DInvariant exact_1d_invariant(double alpha, double beta) {
  return Exact1DInvariant(alpha, beta);
}

// ---------------------------------------------------------------------------
// Long-run variance and CLT / MDP diagnostics
// ---------------------------------------------------------------------------

/// Bartlett-windowed long-run variance
///   gamma_0 + 2 sum_{i=1}^{L} (1 - i/(L+1)) gamma_i,
/// with L = max_lag (default floor(n^{1/3})).
double long_run_variance(std::span<const double> series, std::int64_t max_lag = -1);

/// Bounded measurable test functions, addressed by string id + parameters.
struct TestFunction {
  std::string id;
  std::function<double(const Eigen::Ref<const Vec>&)> f;
};
TestFunction indicator_e(double c);                // 1{e'x > c}
TestFunction indicator_coord(int coord, double c); // 1{x_i > c}, 1-based i
TestFunction tanh_h(const Vec& a);                 // tanh(<a, x>)

/// Kolmogorov-Smirnov statistic of values against N(0, sigma2) and the
/// asymptotic p-value (with Stephens' small-sample correction).
double ks_statistic_vs_normal(std::vector<double> values, double sigma2);
double ks_p_value(double d_stat, std::size_t n);

double normal_cdf(double x);
double log_normal_sf(double x);  // log of the upper tail, stable for large x

struct CLTOptions {
  double calibration_factor = 10.0;  // calibration chain length = factor * n
  std::int64_t max_lag = -1;         // autocovariance window; -1 = automatic
  std::int64_t rep_burn_in = -1;     // burn-in per replication; -1 = ceil(2/eta)
  std::size_t n_workers = 0;
};

struct CLTReport {
  std::string h_id;
  std::int64_t n = 0;
  double eta = 0.0;
  int replications = 0;
  std::vector<double> normalized;  // sqrt(n) (E_n(h) - mu_hat)
  double mu_hat = 0.0;
  double sigma_h2_hat = 0.0;
  double ks_stat = 0.0;
  double p_value = 0.0;
  bool degenerate = false;
  double empirical_mean_h = 0.0;   // mean of E_n(h) over replications
};

/// Occupation-measure CLT experiment: replications independent chains of
/// length n; centering mu_hat and variance sigma_h2 from one longer
/// calibration chain; KS test of the normalized values against N(0, sigma_h2).
CLTReport clt_experiment(const DiffusionModel& m, const TestFunction& h, double eta,
                         std::int64_t n, int replications, std::uint64_t seed,
                         const CLTOptions& opts = {});

struct MDPRow {
  std::int64_t n = 0;
  double a_n = 0.0;
  double z = 0.0;
  std::int64_t hits = 0;
  int replications = 0;
  double p_hat = 0.0;
  double empirical_rate = 0.0;    // log(p_hat) / a_n^2
  double theoretical_rate = 0.0;  // -z^2 / (2 sigma_h2)
  bool zero_hits = false;
};

struct MDPReport {
  std::vector<MDPRow> rows;
  double mu_hat = 0.0;
  double sigma_h2_hat = 0.0;
};

/// Moderate-deviation tail check: estimates P(sqrt(n)/a_n (E_n(h) - mu_hat) >= z)
/// over replications for each n and threshold, reporting the normalized
/// log-probability against -z^2/(2 sigma_h2). Zero exceedances are reported
/// per row (zero_hits), not fatal. a_n = n^{a_exponent}, a_exponent in (0, 1/2).
MDPReport mdp_rate_check(const DiffusionModel& m, const TestFunction& h, double eta,
                         const std::vector<std::int64_t>& n_list, double a_exponent,
                         const std::vector<double>& thresholds, int replications,
                         std::uint64_t seed, const CLTOptions& opts = {});

struct GaussianSurrogateMDP {
  std::int64_t n = 0;
  double a_n = 0.0;
  double z = 0.0;
  double sigma2_hat = 0.0;      // long-run variance of the simulated iid series
  double empirical_rate = 0.0;  // log Phi_bar(a_n z) / a_n^2 (exact unit-variance tail)
  double theoretical_rate = 0.0;
  double ratio = 0.0;
};

/// iid-Gaussian surrogate for the MDP pipeline. At moderate-deviation scales
/// the exceedance probability Phi_bar(a_n z) is far below Monte Carlo reach,
/// so the exact Gaussian tail stands in for the hit count while sigma2 is
/// still estimated from a simulated series of length series_len.
GaussianSurrogateMDP mdp_gaussian_surrogate(std::int64_t n, double a_exponent, double z,
                                            std::uint64_t seed,
                                            std::int64_t series_len = 100000);

// ---------------------------------------------------------------------------
// Invariant-measure convergence sweep
// ---------------------------------------------------------------------------

struct SweepOracle {
  const Exact1DInvariant* exact = nullptr;  // d = 1
  const SampleSet* reference = nullptr;     // d >= 1, e.g. a fine-eta run
  int n_directions = 16;                    // for sliced W1 against reference
  std::uint64_t direction_seed = 0x51ce;
};

struct SweepConfig {
  std::int64_t n_samples = 100000;
  std::int64_t burn_in = 10000;  // steps
  std::int64_t gap = -1;         // -1: ceil(1/eta), about one time unit
  int n_chains = 8;
  std::uint64_t seed = 1;
  std::size_t n_workers = 0;
};

struct ConvergenceRow {
  double eta = 0.0;
  double w1 = 0.0;
  double envelope = 0.0;  // c_fit * sqrt(eta)
};

struct ConvergenceReport {
  std::vector<ConvergenceRow> rows;
  double slope = 0.0;  // log-log OLS slope of w1 against eta
  double c_fit = 0.0;  // w1 at the largest eta divided by sqrt of that eta
};

/// W1 between EM invariant samples and the oracle for each step size, with
/// the fitted sqrt-envelope and log-log slope.
ConvergenceReport w1_convergence_sweep(const DiffusionModel& m,
                                       const std::vector<double>& eta_list,
                                       const SweepConfig& config, const SweepOracle& oracle);

}  // namespace phn
