#pragma once

#include <algorithm>

#include "phn/phase_type.hpp"

namespace phn {

/// Full coefficient set of the piecewise-linear limiting diffusion
///   dX = g(X) dt + sigma dB,   g(x) = -beta p - R x + (R - alpha I) p (e'x)^+.
/// All members are immutable after build_model; operations on the model are
/// pure functions, safe to share across threads.
struct DiffusionModel {
  PhaseTypeService pt;
  double alpha = 0.0;  // patience (abandonment) rate
  double beta = 0.0;   // capacity slack

  Mat R;
  Vec gamma;        // zeta R^{-1} p, sums to 1
  Mat sigma_sq;     // sigma sigma'
  Mat sigma;        // lower-triangular Cholesky factor of sigma_sq
  double c_ellip = 0.0;  // smallest eigenvalue of sigma sigma'

  Vec drift_jump;   // (R - alpha I) p, the coefficient of (e'x)^+
  double c_op = 0.0;        // ||R||_op + ||(R - alpha I) p e'||_op
  double c_op_tilde = 0.0;  // c_op + ||sigma sigma'||_HS + 1 + ||R - alpha I||_op + |beta|

  int dim() const { return pt.d; }

  /// C_m = 2 m^2 c_op_tilde for integers m >= 2.
  double moment_constant(int m) const;
};

/// Builds the diffusion coefficients from a mean-1 phase type.
/// Requires alpha > 0 and finite beta; throws NotPositiveDefiniteError when
/// the covariance is not strictly elliptic.
DiffusionModel build_model(const PhaseTypeService& pt, double alpha, double beta);

/// Piecewise-linear drift g(x).
Vec drift(const DiffusionModel& m, const Vec& x);

/// Allocation-free drift for hot loops: writes g(x) into out (size d).
inline void drift_into(const DiffusionModel& m, const Vec& x, Vec& out) {
  const double pos = std::max(0.0, x.sum());
  out = -m.beta * m.pt.p;
  out.noalias() -= m.R * x;
  if (pos > 0.0) out.noalias() += pos * m.drift_jump;
}

/// Quartic blend used by the smoothed drift: 0 below -eps, identity above
/// +eps, C^2 interpolation in between. Requires 0 < eps < 1.
double rho_eps(double y, double eps);

/// Smoothed drift g_eps(x) = -beta p - R x + rho_eps(e'x) (R - alpha I) p.
/// Satisfies ||g_eps(x) - g(x)|| <= c_op * eps for all x.
Vec smoothed_drift(const DiffusionModel& m, const Vec& x, double eps);

/// Generator application A f(x) = <grad_f, g(x)> + 1/2 <sigma sigma', hess_f>_HS
/// for caller-supplied gradient and Hessian of f at x.
double generator_apply(const DiffusionModel& m, const Vec& grad_f, const Mat& hess_f,
                       const Vec& x);

}  // namespace phn
