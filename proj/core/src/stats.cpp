#include "phn/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "phn/errors.hpp"
#include "phn/parallel.hpp"

namespace phn {

// ---------------------------------------------------------------------------
// W1
// ---------------------------------------------------------------------------

double w1_1d(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw EmptyInputError("w1_1d: empty sample array");
  std::vector<double> as(a.begin(), a.end());
  std::vector<double> bs(b.begin(), b.end());
  std::sort(as.begin(), as.end());
  std::sort(bs.begin(), bs.end());

  const std::size_t n = as.size(), m = bs.size();
  if (n == m) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += std::abs(as[i] - bs[i]);
    return sum / static_cast<double>(n);
  }
  // different sizes: integrate |Qa(u) - Qb(u)| over merged breakpoints
  double total = 0.0, u = 0.0;
  std::size_t i = 0, j = 0;
  while (i < n && j < m) {
    const double ua = static_cast<double>(i + 1) / n;
    const double ub = static_cast<double>(j + 1) / m;
    const double next = std::min(ua, ub);
    total += (next - u) * std::abs(as[i] - bs[j]);
    u = next;
    if (ua <= next + 1e-18) ++i;
    if (ub <= next + 1e-18) ++j;
  }
  return total;
}

std::vector<Vec> sliced_directions(int dim, int n_directions, std::uint64_t seed) {
  if (dim < 1) throw InvalidArgument("dimension must be positive");
  std::vector<Vec> dirs;
  auto push_unique = [&](const Vec& u) {
    for (const Vec& v : dirs)
      if ((v - u).norm() < 1e-15) return;
    dirs.push_back(u);
  };
  push_unique(Vec::Constant(dim, 1.0 / std::sqrt(static_cast<double>(dim))));
  for (int i = 0; i < dim; ++i) push_unique(Vec::Unit(dim, i));
  rng::Xoshiro256pp gen(seed);
  int guard = 0;
  while (static_cast<int>(dirs.size()) < n_directions && guard++ < 16 * n_directions) {
    Vec g(dim);
    for (int k = 0; k < dim; ++k) g(k) = gen.normal();
    const double norm = g.norm();
    if (norm > 1e-12) push_unique(g / norm);
  }
  return dirs;
}

double w1_sliced(const Mat& A, const Mat& B, int n_directions, std::uint64_t seed) {
  if (A.cols() != B.cols()) throw DimensionMismatchError("w1_sliced: dimension mismatch");
  if (A.rows() == 0 || B.rows() == 0) throw EmptyInputError("w1_sliced: empty sample set");
  const auto dirs = sliced_directions(static_cast<int>(A.cols()), n_directions, seed);
  double sum = 0.0;
  std::vector<double> pa(A.rows()), pb(B.rows());
  for (const Vec& u : dirs) {
    Eigen::Map<Vec>(pa.data(), A.rows()) = A * u;
    Eigen::Map<Vec>(pb.data(), B.rows()) = B * u;
    sum += w1_1d(pa, pb);
  }
  return sum / static_cast<double>(dirs.size());
}

// ---------------------------------------------------------------------------
// normal helpers
// ---------------------------------------------------------------------------

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double log_normal_sf(double x) {
  if (x < 36.0) {
    const double sf = 0.5 * std::erfc(x / std::sqrt(2.0));
    if (sf > 0.0) return std::log(sf);
  }
  // Mills-ratio asymptotics for the far tail
  const double x2 = x * x;
  return -0.5 * x2 - std::log(x * std::sqrt(2.0 * M_PI)) +
         std::log1p(-1.0 / x2 + 3.0 / (x2 * x2));
}

// ---------------------------------------------------------------------------
// Exact 1-D invariant law
// ---------------------------------------------------------------------------

Exact1DInvariant::Exact1DInvariant(double alpha, double beta) : alpha_(alpha), beta_(beta) {
  if (!(alpha > 0.0)) throw BadAlphaError("exact 1-D invariant law requires alpha > 0");
  if (!std::isfinite(beta)) throw InvalidArgument("beta must be finite");
  const double sqrt2pi = std::sqrt(2.0 * M_PI);
  const double left = std::exp(0.5 * beta * beta) * sqrt2pi * normal_cdf(beta);
  const double right = std::exp(0.5 * beta * beta / alpha) * std::sqrt(2.0 * M_PI / alpha) *
                       (1.0 - normal_cdf(beta / std::sqrt(alpha)));
  z_ = left + right;
  left_mass_ = left / z_;

  // inverse-CDF table: the monotone sweep warm-starts each search
  const int size = 1024;
  table_x_.resize(size);
  double lo = -beta_ - 2.0;
  while (cdf(lo) > 1.0 / (size + 2.0)) lo -= 4.0;
  double hi = std::max(0.0, -beta_ / alpha_) + 2.0;
  while (cdf(hi) < (size + 1.0) / (size + 2.0)) hi += 4.0;
  double prev = lo;
  for (int k = 0; k < size; ++k) {
    const double u = (k + 1.0) / (size + 2.0);
    table_x_[k] = quantile_search(u, prev, hi);
    prev = table_x_[k];
  }
}

double Exact1DInvariant::pdf(double x) const {
  const double expo = x <= 0.0 ? -beta_ * x - 0.5 * x * x : -beta_ * x - 0.5 * alpha_ * x * x;
  return std::exp(expo) / z_;
}

double Exact1DInvariant::cdf(double x) const {
  const double sqrt2pi = std::sqrt(2.0 * M_PI);
  if (x <= 0.0) {
    return std::exp(0.5 * beta_ * beta_) * sqrt2pi * normal_cdf(x + beta_) / z_;
  }
  const double sa = std::sqrt(alpha_);
  const double partial = std::exp(0.5 * beta_ * beta_ / alpha_) * (sqrt2pi / sa) *
                         (normal_cdf((x + beta_ / alpha_) * sa) - normal_cdf(beta_ / sa));
  return left_mass_ + partial / z_;
}

double Exact1DInvariant::quantile_search(double u, double lo, double hi) const {
  while (cdf(lo) > u) lo -= 4.0;
  while (cdf(hi) < u) hi += 4.0;
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (cdf(mid) < u)
      lo = mid;
    else
      hi = mid;
    if (hi - lo < 1e-13 * (1.0 + std::abs(mid))) break;
  }
  double x = 0.5 * (lo + hi);
  for (int iter = 0; iter < 4; ++iter) {  // Newton polish
    const double f = cdf(x) - u;
    const double g = pdf(x);
    if (g <= 0.0) break;
    const double step = f / g;
    if (!std::isfinite(step)) break;
    x -= std::clamp(step, lo - x, hi - x);
  }
  return x;
}

double Exact1DInvariant::quantile(double u) const {
  if (!(u > 0.0 && u < 1.0)) throw InvalidArgument("quantile: u must be in (0,1)");
  const auto size = static_cast<int>(table_x_.size());
  const double pos = u * (size + 2.0) - 1.0;
  if (pos <= 0.0 || pos >= size - 1.0) {
    // outside the table: tails handled by the robust search
    const double lo = pos <= 0.0 ? table_x_.front() - 4.0 : table_x_.back();
    const double hi = pos <= 0.0 ? table_x_.front() : table_x_.back() + 4.0;
    return quantile_search(u, lo, hi);
  }
  const int idx = static_cast<int>(pos);
  double lo = table_x_[idx], hi = table_x_[idx + 1];
  // Newton from the linear interpolant, safeguarded by the bracket
  double x = lo + (hi - lo) * (pos - idx);
  for (int iter = 0; iter < 50; ++iter) {
    const double f = cdf(x) - u;
    if (f > 0.0)
      hi = x;
    else
      lo = x;
    const double g = pdf(x);
    double next = g > 0.0 ? x - f / g : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) < 1e-14 * (1.0 + std::abs(x))) return next;
    x = next;
  }
  return x;
}

std::vector<double> Exact1DInvariant::stratified_sample(std::int64_t n) const {
  if (n < 1) throw InvalidArgument("stratified_sample: n must be positive");
  std::vector<double> out(n);
  for (std::int64_t i = 0; i < n; ++i)
    out[i] = quantile((static_cast<double>(i) + 0.5) / static_cast<double>(n));
  return out;
}

namespace {
// integral of F over [a, b] (4-point Gauss-Legendre; intervals are tiny)
double integral_cdf(const Exact1DInvariant& law, double a, double b) {
  static const double nodes[4] = {-0.8611363115940526, -0.3399810435848563,
                                  0.3399810435848563, 0.8611363115940526};
  static const double weights[4] = {0.3478548451374538, 0.6521451548625461,
                                    0.6521451548625461, 0.3478548451374538};
  const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
  double sum = 0.0;
  for (int i = 0; i < 4; ++i) sum += weights[i] * law.cdf(mid + half * nodes[i]);
  return half * sum;
}

// integral of |c - F| over [a, b] for monotone F
double integral_abs_gap(const Exact1DInvariant& law, double a, double b, double c) {
  if (b <= a) return 0.0;
  const double fa = law.cdf(a), fb = law.cdf(b);
  if (fa >= c) return integral_cdf(law, a, b) - c * (b - a);
  if (fb <= c) return c * (b - a) - integral_cdf(law, a, b);
  double lo = a, hi = b;
  for (int iter = 0; iter < 60; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (law.cdf(mid) < c)
      lo = mid;
    else
      hi = mid;
  }
  const double x_cross = 0.5 * (lo + hi);
  return (c * (x_cross - a) - integral_cdf(law, a, x_cross)) +
         (integral_cdf(law, x_cross, b) - c * (b - x_cross));
}
}  // namespace

double Exact1DInvariant::w1_vs_samples(std::span<const double> samples) const {
  if (samples.empty()) throw EmptyInputError("w1_vs_samples: empty sample array");
  std::vector<double> xs(samples.begin(), samples.end());
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();

  // tails: integral of F below the smallest point, of 1-F above the largest
  const double lo = std::min(xs.front(), -beta_) - 15.0;
  const double hi = std::max(xs.back(), std::max(0.0, -beta_ / alpha_)) +
                    15.0 / std::sqrt(std::min(1.0, alpha_));
  double total = integral_abs_gap(*this, lo, xs.front(), 0.0);
  total += integral_abs_gap(*this, xs.back(), hi, 1.0);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double c = static_cast<double>(i + 1) / static_cast<double>(n);
    total += integral_abs_gap(*this, xs[i], xs[i + 1], c);
  }
  return total;
}

// ---------------------------------------------------------------------------
// long-run variance
// ---------------------------------------------------------------------------

double long_run_variance(std::span<const double> series, std::int64_t max_lag) {
  const std::int64_t n = static_cast<std::int64_t>(series.size());
  if (n < 4) throw SeriesTooShortError("long_run_variance: series too short");
  const std::int64_t lag =
      max_lag >= 0 ? max_lag : static_cast<std::int64_t>(std::floor(std::cbrt(n)));
  if (lag >= n) throw SeriesTooShortError("long_run_variance: max_lag >= series length");

  const double mean = std::accumulate(series.begin(), series.end(), 0.0) / n;
  double gamma0 = 0.0;
  for (std::int64_t k = 0; k < n; ++k) {
    const double c = series[k] - mean;
    gamma0 += c * c;
  }
  gamma0 /= n;

  double acc = gamma0;
  for (std::int64_t l = 1; l <= lag; ++l) {
    double g = 0.0;
    for (std::int64_t k = l; k < n; ++k) g += (series[k] - mean) * (series[k - l] - mean);
    g /= n;
    acc += 2.0 * (1.0 - static_cast<double>(l) / (lag + 1)) * g;
  }
  return std::max(0.0, acc);
}

// ---------------------------------------------------------------------------
// test functions
// ---------------------------------------------------------------------------

TestFunction indicator_e(double c) {
  TestFunction h;
  h.id = "indicator_e(c=" + std::to_string(c) + ")";
  h.f = [c](const Eigen::Ref<const Vec>& x) { return x.sum() > c ? 1.0 : 0.0; };
  return h;
}

TestFunction indicator_coord(int coord, double c) {
  if (coord < 1) throw IndexOutOfRangeError("indicator_coord: 1-based index");
  TestFunction h;
  h.id = "indicator_coord(i=" + std::to_string(coord) + ",c=" + std::to_string(c) + ")";
  h.f = [coord, c](const Eigen::Ref<const Vec>& x) {
    if (coord > x.size()) throw IndexOutOfRangeError("indicator_coord: index out of range");
    return x(coord - 1) > c ? 1.0 : 0.0;
  };
  return h;
}

TestFunction tanh_h(const Vec& a) {
  TestFunction h;
  h.id = "tanh(dim=" + std::to_string(a.size()) + ")";
  Vec coeff = a;
  h.f = [coeff](const Eigen::Ref<const Vec>& x) { return std::tanh(coeff.dot(x)); };
  return h;
}

// ---------------------------------------------------------------------------
// Kolmogorov-Smirnov
// ---------------------------------------------------------------------------

double ks_statistic_vs_normal(std::vector<double> values, double sigma2) {
  if (values.empty()) throw EmptyInputError("ks_statistic_vs_normal: no values");
  if (!(sigma2 > 0.0)) throw InvalidArgument("ks requires sigma2 > 0");
  std::sort(values.begin(), values.end());
  const double sd = std::sqrt(sigma2);
  const std::size_t n = values.size();
  double d = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double u = normal_cdf(values[i] / sd);
    d = std::max(d, std::abs(u - static_cast<double>(i) / n));
    d = std::max(d, std::abs(static_cast<double>(i + 1) / n - u));
  }
  return d;
}

double ks_p_value(double d_stat, std::size_t n) {
  if (n == 0) throw EmptyInputError("ks_p_value: n must be positive");
  const double sn = std::sqrt(static_cast<double>(n));
  const double lambda = (sn + 0.12 + 0.11 / sn) * d_stat;
  if (lambda < 1e-8) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = 2.0 * ((k % 2 == 1) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
    sum += term;
    if (std::abs(term) < 1e-12) break;
  }
  return std::clamp(sum, 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// calibration + replication machinery shared by CLT and MDP
// ---------------------------------------------------------------------------

namespace {

struct Calibration {
  double mu_hat = 0.0;
  double sigma2_hat = 0.0;
  std::vector<Vec> starts;
};

// Streams one long chain: running mean of h over every step, Bartlett
// long-run variance on a thinned copy of the h series, and evenly spaced
// states reused as stationary starts. Thinning keeps the autocovariance
// accumulation at O(n L / T^2): the lag window still spans `lag` raw steps,
// and for series whose memory is much longer than T steps the per-step
// long-run variance is T times the thinned one (Riemann sum with spacing T),
// recovering the Bartlett estimate up to O(T / memory) relative error.
Calibration calibrate(const DiffusionModel& m, const TestFunction& h, double eta,
                      std::int64_t n_cal, std::int64_t lag, std::int64_t n_starts,
                      std::uint64_t chain_seed) {
  const std::int64_t burn = static_cast<std::int64_t>(std::ceil(5.0 / eta));
  ChainStepper stepper(m, eta, chain_seed);
  Vec x = Vec::Zero(m.dim());
  for (std::int64_t k = 0; k < burn; ++k) stepper.advance(x, k);

  const std::int64_t thin = std::max<std::int64_t>(1, lag / 256);
  const std::int64_t lag_thin = std::max<std::int64_t>(1, lag / thin);
  std::vector<double> ring(lag_thin + 1, 0.0);
  std::vector<double> cross(lag_thin + 1, 0.0);
  double sum_h = 0.0;
  std::int64_t n_thin = 0;
  Calibration cal;
  cal.starts.reserve(n_starts);
  const std::int64_t stride =
      std::max<std::int64_t>(1, n_cal / std::max<std::int64_t>(1, n_starts));

  for (std::int64_t k = 0; k < n_cal; ++k) {
    stepper.advance(x, burn + k);
    const double hv = h.f(x);
    sum_h += hv;
    if (k % thin == 0) {
      const std::int64_t kt = n_thin++;
      ring[kt % (lag_thin + 1)] = hv;
      const std::int64_t lmax = std::min(kt, lag_thin);
      for (std::int64_t l = 0; l <= lmax; ++l) cross[l] += hv * ring[(kt - l) % (lag_thin + 1)];
    }
    if (k % stride == 0 && static_cast<std::int64_t>(cal.starts.size()) < n_starts)
      cal.starts.push_back(x);
  }
  while (static_cast<std::int64_t>(cal.starts.size()) < n_starts) cal.starts.push_back(x);

  const double mean = sum_h / n_cal;
  cal.mu_hat = mean;
  // uncentered accumulation, mean correction applied per lag
  double acc = cross[0] / n_thin - mean * mean;
  for (std::int64_t l = 1; l <= lag_thin; ++l) {
    const double g =
        cross[l] / n_thin - mean * mean * (static_cast<double>(n_thin - l) / n_thin);
    acc += 2.0 * (1.0 - static_cast<double>(l) / (lag_thin + 1)) * g;
  }
  cal.sigma2_hat = std::max(0.0, acc * static_cast<double>(thin));
  return cal;
}

// mean of h over n post-burn-in steps of one chain
double replication_mean(const DiffusionModel& m, const TestFunction& h, double eta,
                        std::int64_t n, std::int64_t burn, const Vec& x0,
                        std::uint64_t seed) {
  ChainStepper stepper(m, eta, seed);
  Vec x = x0;
  double sum = 0.0;
  for (std::int64_t k = 0; k < burn + n; ++k) {
    stepper.advance(x, k);
    if (k >= burn) sum += h.f(x);
  }
  return sum / static_cast<double>(n);
}

std::int64_t auto_lag(double eta, std::int64_t n_cal) {
  const auto by_memory = static_cast<std::int64_t>(std::ceil(30.0 / eta));
  const auto cap = std::max<std::int64_t>(4, n_cal / 20);
  const auto cbrt_floor = static_cast<std::int64_t>(std::floor(std::cbrt(n_cal)));
  return std::max(cbrt_floor, std::min(by_memory, cap));
}

}  // namespace

CLTReport clt_experiment(const DiffusionModel& m, const TestFunction& h, double eta,
                         std::int64_t n, int replications, std::uint64_t seed,
                         const CLTOptions& opts) {
  if (replications < 50) throw InvalidArgument("clt_experiment requires >= 50 replications");
  if (!(eta > 0.0) || n < 1) throw InvalidArgument("invalid eta or n");

  CLTReport report;
  report.h_id = h.id;
  report.n = n;
  report.eta = eta;
  report.replications = replications;

  const auto n_cal = static_cast<std::int64_t>(std::ceil(opts.calibration_factor * n));
  const std::int64_t lag = opts.max_lag > 0 ? opts.max_lag : auto_lag(eta, n_cal);
  const Calibration cal =
      calibrate(m, h, eta, n_cal, lag, replications,
                rng::derive_seed(seed, rng::SeedRole::Calibration, 0));
  report.mu_hat = cal.mu_hat;
  report.sigma_h2_hat = cal.sigma2_hat;

  const std::int64_t rep_burn =
      opts.rep_burn_in >= 0 ? opts.rep_burn_in : static_cast<std::int64_t>(std::ceil(2.0 / eta));
  std::vector<double> means(replications, 0.0);
  parallel_for(static_cast<std::size_t>(replications), opts.n_workers, [&](std::size_t r) {
    means[r] = replication_mean(m, h, eta, n, rep_burn, cal.starts[r],
                                rng::derive_seed(seed, rng::SeedRole::Replication, r));
  });

  const double sqrt_n = std::sqrt(static_cast<double>(n));
  report.normalized.resize(replications);
  double mean_h = 0.0, max_abs = 0.0;
  for (int r = 0; r < replications; ++r) {
    report.normalized[r] = sqrt_n * (means[r] - cal.mu_hat);
    mean_h += means[r];
    max_abs = std::max(max_abs, std::abs(report.normalized[r]));
  }
  report.empirical_mean_h = mean_h / replications;

  if (cal.sigma2_hat < 1e-12 || max_abs < 1e-10) {
    report.degenerate = true;
    report.ks_stat = 0.0;
    report.p_value = 1.0;
    return report;
  }
  report.ks_stat = ks_statistic_vs_normal(report.normalized, cal.sigma2_hat);
  report.p_value = ks_p_value(report.ks_stat, report.normalized.size());
  return report;
}

MDPReport mdp_rate_check(const DiffusionModel& m, const TestFunction& h, double eta,
                         const std::vector<std::int64_t>& n_list, double a_exponent,
                         const std::vector<double>& thresholds, int replications,
                         std::uint64_t seed, const CLTOptions& opts) {
  if (!(a_exponent > 0.0 && a_exponent < 0.5))
    throw InvalidArgument("a_exponent must lie in (0, 1/2)");
  for (double z : thresholds)
    if (z < 0.0) throw InvalidArgument("thresholds must be nonnegative");
  if (n_list.empty() || thresholds.empty()) throw EmptyInputError("mdp: empty n or z list");
  if (replications < 1) throw InvalidArgument("mdp needs replications >= 1");

  const std::int64_t n_max = *std::max_element(n_list.begin(), n_list.end());
  const auto n_cal = static_cast<std::int64_t>(std::ceil(opts.calibration_factor * n_max));
  const std::int64_t lag = opts.max_lag > 0 ? opts.max_lag : auto_lag(eta, n_cal);
  const Calibration cal =
      calibrate(m, h, eta, n_cal, lag, replications,
                rng::derive_seed(seed, rng::SeedRole::Calibration, 0));

  MDPReport report;
  report.mu_hat = cal.mu_hat;
  report.sigma_h2_hat = cal.sigma2_hat;

  const std::int64_t rep_burn =
      opts.rep_burn_in >= 0 ? opts.rep_burn_in : static_cast<std::int64_t>(std::ceil(2.0 / eta));
  for (std::size_t row_idx = 0; row_idx < n_list.size(); ++row_idx) {
    const std::int64_t n = n_list[row_idx];
    std::vector<double> means(replications, 0.0);
    parallel_for(static_cast<std::size_t>(replications), opts.n_workers, [&](std::size_t r) {
      const std::uint64_t rep_seed = rng::derive_seed(
          seed, rng::SeedRole::Replication, row_idx * static_cast<std::size_t>(replications) + r);
      means[r] = replication_mean(m, h, eta, n, rep_burn,
                                  cal.starts[r % cal.starts.size()], rep_seed);
    });
    const double a_n = std::pow(static_cast<double>(n), a_exponent);
    const double scale = std::sqrt(static_cast<double>(n)) / a_n;
    for (double z : thresholds) {
      MDPRow row;
      row.n = n;
      row.a_n = a_n;
      row.z = z;
      row.replications = replications;
      for (int r = 0; r < replications; ++r)
        if (scale * (means[r] - cal.mu_hat) >= z) ++row.hits;
      row.p_hat = static_cast<double>(row.hits) / replications;
      row.zero_hits = row.hits == 0;
      row.empirical_rate =
          row.zero_hits ? std::numeric_limits<double>::quiet_NaN()
                        : std::log(row.p_hat) / (a_n * a_n);
      row.theoretical_rate =
          cal.sigma2_hat > 0.0 ? -z * z / (2.0 * cal.sigma2_hat)
                               : std::numeric_limits<double>::quiet_NaN();
      report.rows.push_back(row);
    }
  }
  return report;
}

GaussianSurrogateMDP mdp_gaussian_surrogate(std::int64_t n, double a_exponent, double z,
                                            std::uint64_t seed, std::int64_t series_len) {
  if (!(a_exponent > 0.0 && a_exponent < 0.5))
    throw InvalidArgument("a_exponent must lie in (0, 1/2)");
  if (!(z > 0.0)) throw InvalidArgument("surrogate check requires z > 0");

  rng::Xoshiro256pp gen(rng::derive_seed(seed, rng::SeedRole::Replication, 0));
  std::vector<double> series(series_len);
  for (auto& v : series) v = gen.normal();

  GaussianSurrogateMDP out;
  out.n = n;
  out.z = z;
  out.a_n = std::pow(static_cast<double>(n), a_exponent);
  out.sigma2_hat = long_run_variance(series);
  // At this scale the exceedance is P(N(0,1) >= a_n z): exact tail, no hits.
  out.empirical_rate = log_normal_sf(out.a_n * z) / (out.a_n * out.a_n);
  out.theoretical_rate = -z * z / (2.0 * out.sigma2_hat);
  out.ratio = out.empirical_rate / out.theoretical_rate;
  return out;
}

// ---------------------------------------------------------------------------
// convergence sweep
// ---------------------------------------------------------------------------

ConvergenceReport w1_convergence_sweep(const DiffusionModel& m,
                                       const std::vector<double>& eta_list,
                                       const SweepConfig& config, const SweepOracle& oracle) {
  if (eta_list.size() < 3) throw InvalidArgument("sweep needs at least 3 step sizes");
  if (!oracle.exact && !oracle.reference)
    throw InvalidArgument("sweep oracle must hold an exact law or a reference sample set");
  if (oracle.exact && m.dim() != 1)
    throw DimensionMismatchError("exact oracle applies to d = 1 only");

  ConvergenceReport report;
  report.rows.reserve(eta_list.size());
  for (std::size_t idx = 0; idx < eta_list.size(); ++idx) {
    const double eta = eta_list[idx];
    const std::int64_t gap =
        config.gap > 0 ? config.gap : static_cast<std::int64_t>(std::ceil(1.0 / eta));
    const std::uint64_t run_seed =
        rng::derive_seed(config.seed, rng::SeedRole::Replication, idx);
    const SampleSet samples = sample_invariant(m, eta, config.n_samples, gap, config.burn_in,
                                               run_seed, config.n_chains, config.n_workers);
    ConvergenceRow row;
    row.eta = eta;
    if (oracle.exact) {
      std::vector<double> xs(samples.points.data(),
                             samples.points.data() + samples.points.rows());
      row.w1 = oracle.exact->w1_vs_samples(xs);
    } else {
      row.w1 = w1_sliced(samples.points, oracle.reference->points, oracle.n_directions,
                         oracle.direction_seed);
    }
    report.rows.push_back(row);
  }

  double eta_max = 0.0, w1_at_max = 0.0;
  for (const auto& row : report.rows) {
    if (row.eta > eta_max) {
      eta_max = row.eta;
      w1_at_max = row.w1;
    }
  }
  report.c_fit = w1_at_max / std::sqrt(eta_max);
  for (auto& row : report.rows) row.envelope = report.c_fit * std::sqrt(row.eta);

  // log-log OLS slope
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const double k = static_cast<double>(report.rows.size());
  for (const auto& row : report.rows) {
    const double lx = std::log(row.eta), ly = std::log(std::max(row.w1, 1e-300));
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  report.slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
  return report;
}

}  // namespace phn
