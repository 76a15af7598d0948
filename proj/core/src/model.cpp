#include "phn/model.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>

#include "phn/errors.hpp"

namespace phn {

namespace {
double operator_norm(const Mat& a) {
  return Eigen::JacobiSVD<Mat>(a).singularValues()(0);
}
}  // namespace

double DiffusionModel::moment_constant(int m) const {
  if (m < 2) throw InvalidArgument("moment constant defined for integers m >= 2");
  return 2.0 * static_cast<double>(m) * static_cast<double>(m) * c_op_tilde;
}

DiffusionModel build_model(const PhaseTypeService& pt, double alpha, double beta) {
  if (!(alpha > 0.0)) throw InvalidArgument("patience rate alpha must be positive");
  if (!std::isfinite(beta)) throw InvalidArgument("slack beta must be finite");
  if (!pt.is_mean_one())
    throw InvalidArgument("build_model requires a mean-1 phase type; call normalize_mean");

  DiffusionModel m;
  m.pt = pt;
  m.alpha = alpha;
  m.beta = beta;
  m.R = pt.R;
  m.gamma = pt.zeta * pt.r_inv_p;
  m.sigma_sq = covariance(pt);

  Eigen::SelfAdjointEigenSolver<Mat> es(m.sigma_sq);
  m.c_ellip = es.eigenvalues().minCoeff();

  Eigen::LLT<Mat> llt(m.sigma_sq);
  if (llt.info() != Eigen::Success)
    throw NotPositiveDefiniteError("Cholesky factorization of sigma sigma' failed");
  m.sigma = llt.matrixL();

  const int d = pt.d;
  const Mat RmA = m.R - alpha * Mat::Identity(d, d);
  m.drift_jump = RmA * pt.p;
  m.c_op = operator_norm(m.R) + operator_norm(m.drift_jump * Vec::Ones(d).transpose());
  m.c_op_tilde = m.c_op + m.sigma_sq.norm() + 1.0 + operator_norm(RmA) + std::abs(beta);
  return m;
}

Vec drift(const DiffusionModel& m, const Vec& x) {
  if (x.size() != m.dim()) throw DimensionMismatchError("drift: state dimension mismatch");
  const double pos = std::max(0.0, x.sum());
  return -m.beta * m.pt.p - m.R * x + pos * m.drift_jump;
}

double rho_eps(double y, double eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw BadEpsilonError("rho_eps requires 0 < eps < 1");
  if (y < -eps) return 0.0;
  if (y > eps) return y;
  const double y2 = y * y;
  return 3.0 * eps / 16.0 - y2 * y2 / (16.0 * eps * eps * eps) + 3.0 * y2 / (8.0 * eps) +
         0.5 * y;
}

Vec smoothed_drift(const DiffusionModel& m, const Vec& x, double eps) {
  if (x.size() != m.dim())
    throw DimensionMismatchError("smoothed_drift: state dimension mismatch");
  return -m.beta * m.pt.p - m.R * x + rho_eps(x.sum(), eps) * m.drift_jump;
}

double generator_apply(const DiffusionModel& m, const Vec& grad_f, const Mat& hess_f,
                       const Vec& x) {
  const int d = m.dim();
  if (grad_f.size() != d || hess_f.rows() != d || hess_f.cols() != d || x.size() != d)
    throw DimensionMismatchError("generator_apply: gradient/Hessian dimension mismatch");
  return grad_f.dot(drift(m, x)) + 0.5 * m.sigma_sq.cwiseProduct(hess_f).sum();
}

}  // namespace phn
