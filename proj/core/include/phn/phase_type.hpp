#pragma once

#include <Eigen/Dense>

namespace phn {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Phase-type service time primitives: initial-phase distribution p,
/// sub-stochastic routing matrix P (zero diagonal, I - P invertible) and
/// per-phase service rates v. Immutable after construction.
struct PhaseTypeService {
  int d = 0;
  Vec p;
  Mat P;
  Vec v;

  Mat R;        // (I - P') diag(v)
  Vec r_inv_p;  // R^{-1} p
  double zeta = 0.0;  // 1 / (e' R^{-1} p); the service mean is 1/zeta

  double mean() const { return r_inv_p.sum(); }
  bool is_mean_one(double tol = 1e-10) const { return std::abs(mean() - 1.0) <= tol; }
};

/// Validates (p, P, v) and assembles R, R^{-1}p and zeta.
/// Throws NonStochasticError, BadRoutingError or SingularError.
PhaseTypeService build_phase_type(const Vec& p, const Mat& P, const Vec& v);

/// Rescales the rates v (multiplying by e'R^{-1}p) so the service mean is 1.
/// Preserves p and P; idempotent.
PhaseTypeService normalize_mean(const PhaseTypeService& pt);

/// Routing fluctuation matrix H^(k) for phase k (1-based):
/// H_ii = P_ki (1 - P_ki), H_ij = -P_ki P_kj for i != j.
Mat routing_fluctuation(const PhaseTypeService& pt, int k);

/// Diffusion covariance
///   diag(p) + sum_k gamma_k v_k H^(k) + (I-P') diag(v) diag(gamma) (I-P)
/// for a mean-1 phase type. Throws NotPositiveDefiniteError if the smallest
/// eigenvalue is not strictly positive.
Mat covariance(const PhaseTypeService& pt);

}  // namespace phn
