#include "phn/occupation.hpp"

#include <algorithm>
#include <cmath>

#include "phn/errors.hpp"
#include "phn/parallel.hpp"

namespace phn {

double phi_eps(double y, double eps) {
  if (!(eps > 0.0)) throw BadEpsilonError("phi_eps requires eps > 0");
  if (y > eps) return (2.0 / 3.0) * eps * y - 0.25 * eps * eps;
  if (y < -eps) return -(2.0 / 3.0) * eps * y - 0.25 * eps * eps;
  const double y2 = y * y;
  return -y2 * y2 / (12.0 * eps * eps) + 0.5 * y2;
}

double phi_eps_ddot(double y, double eps) {
  if (!(eps > 0.0)) throw BadEpsilonError("phi_eps requires eps > 0");
  if (std::abs(y) > eps) return 0.0;
  return 1.0 - y * y / (eps * eps);
}

namespace {
double bump(double s, double eps) {
  return std::abs(s) <= eps ? 1.0 - s * s / (eps * eps) : 0.0;
}
}  // namespace

double weighted_occupation(const Trajectory& trajectory, double eps) {
  if (trajectory.n_kept() == 0) throw EmptyInputError("weighted_occupation: empty trajectory");
  if (!(eps > 0.0)) throw BadEpsilonError("weighted_occupation requires eps > 0");
  double sum = 0.0;
  // left endpoints: x0 and all kept states except the last
  sum += bump(trajectory.x0.sum(), eps);
  for (std::int64_t k = 0; k + 1 < trajectory.n_kept(); ++k)
    sum += bump(trajectory.states.row(k).sum(), eps);
  return trajectory.eta * sum;
}

OccupationScalingReport occupation_scaling_check(const DiffusionModel& m, const Vec& x0,
                                                 double t, double eta,
                                                 const std::vector<double>& eps_list,
                                                 std::int64_t n_paths, std::uint64_t seed,
                                                 double tolerance, std::size_t n_workers) {
  if (eps_list.size() < 3)
    throw InvalidArgument("occupation scaling check needs at least 3 epsilons");
  for (std::size_t i = 0; i + 1 < eps_list.size(); ++i)
    if (!(eps_list[i] > eps_list[i + 1]))
      throw InvalidArgument("eps_list must be strictly decreasing");
  const double eps_min = eps_list.back();
  if (!(eta <= eps_min / 10.0))
    throw ResolutionTooCoarseError("resolution condition eta <= eps_min/10 violated");
  if (!(t >= 0.0) || n_paths < 1) throw InvalidArgument("invalid horizon or path count");
  if (x0.size() != m.dim()) throw DimensionMismatchError("x0 dimension mismatch");

  const std::int64_t n_steps = static_cast<std::int64_t>(std::llround(t / eta));
  const std::size_t n_eps = eps_list.size();

  // per-path L for every epsilon, all epsilons sharing the path (CRN)
  Mat path_L = Mat::Zero(n_paths, static_cast<std::int64_t>(n_eps));
  parallel_for(static_cast<std::size_t>(n_paths), n_workers, [&](std::size_t path) {
    ChainStepper stepper(m, eta, rng::derive_seed(seed, rng::SeedRole::Replication, path));
    Vec x = x0;
    std::vector<double> acc(n_eps, 0.0);
    for (std::int64_t k = 0; k < n_steps; ++k) {
      const double s = x.sum();
      for (std::size_t e = 0; e < n_eps; ++e) acc[e] += bump(s, eps_list[e]);
      stepper.advance(x, k);
    }
    for (std::size_t e = 0; e < n_eps; ++e)
      path_L(static_cast<std::int64_t>(path), static_cast<std::int64_t>(e)) = eta * acc[e];
  });

  OccupationScalingReport report;
  report.tolerance = tolerance;
  for (std::size_t e = 0; e < n_eps; ++e) {
    OccupationEstimate est;
    est.epsilon = eps_list[e];
    est.t_horizon = t;
    est.n_paths = n_paths;
    const auto col = path_L.col(static_cast<std::int64_t>(e));
    est.mean_L = col.mean();
    const double var =
        n_paths > 1 ? (col.array() - est.mean_L).square().sum() / (n_paths - 1) : 0.0;
    est.std_error = std::sqrt(var / n_paths);
    report.estimates.push_back(est);
  }

  double gap = 0.0;
  for (std::size_t i = 0; i < n_eps; ++i) {
    for (std::size_t j = i + 1; j < n_eps; ++j) {
      const double ri = report.estimates[i].ratio_to_epsilon();
      const double rj = report.estimates[j].ratio_to_epsilon();
      if (rj != 0.0) gap = std::max(gap, std::abs(ri / rj - 1.0));
      else if (ri != 0.0) gap = std::max(gap, 1.0);
    }
  }
  report.max_pairwise_ratio_gap = gap;
  report.linear_scaling = gap <= tolerance;
  return report;
}

}  // namespace phn
