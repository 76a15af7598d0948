#pragma once

#include <cstdint>
#include <vector>

#include "phn/em.hpp"

namespace phn {

/// Antiderivative pair of the occupation bump: phi_eps is the C^2 function
/// whose second derivative is the parabolic window [1 - y^2/eps^2] 1{|y|<=eps}.
double phi_eps(double y, double eps);
double phi_eps_ddot(double y, double eps);

/// Left-endpoint Riemann estimate of the weighted occupation time
///   L_t = int_0^t [1 - (e'X_s)^2/eps^2] 1{|e'X_s| <= eps} ds
/// along an EM trajectory with uniform step eta.
double weighted_occupation(const Trajectory& trajectory, double eps);

struct OccupationEstimate {
  double epsilon = 0.0;
  double t_horizon = 0.0;
  double mean_L = 0.0;
  double std_error = 0.0;
  std::int64_t n_paths = 0;

  double ratio_to_epsilon() const { return mean_L / epsilon; }
};

struct OccupationScalingReport {
  std::vector<OccupationEstimate> estimates;  // one per epsilon, input order
  double max_pairwise_ratio_gap = 0.0;        // max |r_i/r_j - 1| over pairs
  bool linear_scaling = false;                // gap within the tolerance
  double tolerance = 0.2;
};

/// Estimates E L_t for each epsilon over n_paths EM paths started at x0,
/// evaluating every epsilon on the same paths (common random numbers), and
/// reports the ratios mean_L / epsilon with a linear-scaling verdict.
/// Requires eps_list strictly decreasing with at least 3 entries and the
/// resolution condition eta <= min(eps)/10.
OccupationScalingReport occupation_scaling_check(const DiffusionModel& m, const Vec& x0,
                                                 double t, double eta,
                                                 const std::vector<double>& eps_list,
                                                 std::int64_t n_paths, std::uint64_t seed,
                                                 double tolerance = 0.2,
                                                 std::size_t n_workers = 0);

}  // namespace phn
