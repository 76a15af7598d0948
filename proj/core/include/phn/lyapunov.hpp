#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "phn/em.hpp"
#include "phn/model.hpp"

namespace phn {

/// C^2 piecewise blend entering the Lyapunov function:
/// phi(z) = z for z >= 0, -1/2 for z <= -1, -z^4/2 - z^3 + z in between.
double phi(double z);
double phi_dot(double z);
double phi_ddot(double z);

/// Quadratic-form weight of the Lyapunov function together with the tuning
/// constants: V(y) = (e'y)^2 + kappa [y - p phi(e'y)]' Qtilde [y - p phi(e'y)] + c_hat2.
struct LyapunovSpec {
  Mat Qtilde;         // symmetric PD, sum of |entries| = 1
  double kappa = 1.0;
  double c_hat2 = 0.0;
  std::optional<std::pair<double, double>> fitted;  // (c1, c1_breve) once fitted
};

/// Largest eigenvalues of the two matrix inequalities a candidate Qtilde must
/// satisfy: ineq1 = lmax(Q(-R) + (-R)'Q) < 0 and
/// ineq2 = lmax(Q(-(I-pe')R) + (-R'(I-ep'))Q) <= 0.
struct QtildeCheck {
  double ineq1 = 0.0;
  double ineq2 = 0.0;
  bool ok(double tol = 1e-10) const { return ineq1 < 0.0 && ineq2 <= tol; }
};
QtildeCheck check_qtilde(const Mat& Qtilde, const Mat& R, const Vec& p);

/// Constructs Qtilde for the drift matrix R and initial-phase vector p:
/// solves the continuous Lyapunov equation Q(-R) + (-R)'Q = -I, normalizes
/// sum|Q_ij| = 1 and verifies both inequalities. If the second inequality
/// fails numerically, a derivative-free search over normalized PD matrices
/// runs as a fallback; Inequality2ViolatedError (with the offending
/// eigenvalue) is thrown when that also fails.
Mat solve_qtilde(const Mat& R, const Vec& p);

/// V(y), its analytic gradient and Hessian.
double lyapunov_value(const DiffusionModel& m, const LyapunovSpec& spec, const Vec& y);
Vec lyapunov_gradient(const DiffusionModel& m, const LyapunovSpec& spec, const Vec& y);
Mat lyapunov_hessian(const DiffusionModel& m, const LyapunovSpec& spec, const Vec& y);

/// A V(y) via the model generator with the analytic gradient and Hessian.
double lyapunov_generator(const DiffusionModel& m, const LyapunovSpec& spec, const Vec& y);

/// Evaluation grid for the drift audit: random points in the ball |y| <= radius
/// plus axis and diagonal rays. Rows are points.
Mat make_audit_grid(int dim, double radius, std::int64_t n_points, std::uint64_t seed);

/// Fits (c1, c1_breve) with AV_i <= -c1 V_i + c1_breve at every grid point,
/// choosing the pair minimizing the stationary bound c1_breve / c1 (ties to
/// the larger c1). Throws NoValidConstantsError when no c1 > 0 works.
std::pair<double, double> fit_linear_drift_bound(std::span<const double> V,
                                                 std::span<const double> AV);

struct DriftFit {
  double c1 = 0.0;
  double c1_breve = 0.0;
  std::size_t grid_size = 0;
  double kappa = 1.0;
  double c_hat2 = 0.0;
  std::vector<std::int64_t> violations;  // grid indices violating the fitted pair
  double grid_radius = 0.0;              // certification region
};

/// Evaluates V and AV on the grid and fits the drift inequality constants.
/// Requires at least 100 grid points.
DriftFit fit_drift_constants(const DiffusionModel& m, const LyapunovSpec& spec,
                             const Mat& grid);

/// Grid indices where AV > -c1 V + c1_breve + tol (negative-control hook).
std::vector<std::int64_t> drift_violations(const DiffusionModel& m, const LyapunovSpec& spec,
                                           const Mat& grid, double c1, double c1_breve,
                                           double tol = 1e-9);

struct LyapunovOptions {
  bool search_kappa = true;
  int kappa_points = 17;           // log-spaced on [1e-2, 1e2]
  double grid_radius = 20.0;
  std::int64_t grid_points = 10000;
  std::uint64_t grid_seed = 0x9d5ab1;
};

/// Builds a complete spec: Qtilde from solve_qtilde, c_hat2 per the V >= 0
/// shift rule and kappa maximizing the fitted c1 over a log-spaced search.
LyapunovSpec make_lyapunov_spec(const DiffusionModel& m, const LyapunovOptions& opts = {});

struct MomentBoundRow {
  double t = 0.0;
  double empirical = 0.0;  // mean of V^ell(X_t) over trajectories
  double std_error = 0.0;
  double bound = 0.0;      // e^{-c1 t} V^ell(x0) + cl_breve (1 - e^{-c1 t}) / c1
  double ratio = 0.0;
};

struct MomentBoundReport {
  std::vector<MomentBoundRow> rows;
  double max_ratio = 0.0;
  std::vector<std::int64_t> violations;  // rows with ratio > 1 beyond noise
};

/// Compares the empirical moment curve of trajectories sharing x0 against the
/// exponential-decay bound with constants (c1, cl_breve).
MomentBoundReport moment_bound_audit(const std::vector<Trajectory>& trajectories,
                                     const DiffusionModel& m, const LyapunovSpec& spec,
                                     int ell, double c1, double cl_breve);

}  // namespace phn
