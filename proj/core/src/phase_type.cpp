#include "phn/phase_type.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

#include "phn/errors.hpp"

namespace phn {

namespace {
constexpr double kStochTol = 1e-12;

void check_finite(const Eigen::Ref<const Mat>& a, const char* name) {
  if (!a.allFinite()) throw InvalidArgument(std::string(name) + " has non-finite entries");
}
}  // namespace

PhaseTypeService build_phase_type(const Vec& p, const Mat& P, const Vec& v) {
  const int d = static_cast<int>(p.size());
  if (d == 0) throw InvalidArgument("phase count must be positive");
  if (P.rows() != d || P.cols() != d || v.size() != d)
    throw DimensionMismatchError("p, P, v dimensions disagree");
  check_finite(p, "p");
  check_finite(P, "P");
  check_finite(v, "v");

  if (p.minCoeff() < 0.0 || std::abs(p.sum() - 1.0) > kStochTol)
    throw NonStochasticError("p must be a probability vector (sum 1, nonnegative)");
  for (int i = 0; i < d; ++i) {
    if (std::abs(P(i, i)) > kStochTol)
      throw BadRoutingError("routing matrix must have zero diagonal");
    double row = 0.0;
    for (int j = 0; j < d; ++j) {
      if (P(i, j) < -kStochTol) throw BadRoutingError("routing matrix has a negative entry");
      row += P(i, j);
    }
    if (row > 1.0 + kStochTol) throw BadRoutingError("routing matrix row sum exceeds 1");
  }
  if (v.minCoeff() <= 0.0) throw InvalidArgument("service rates must be strictly positive");

  const Mat ImP = Mat::Identity(d, d) - P;
  Eigen::FullPivLU<Mat> lu(ImP);
  if (!lu.isInvertible()) throw SingularError("I - P is not invertible");

  PhaseTypeService pt;
  pt.d = d;
  pt.p = p;
  pt.P = P;
  pt.v = v;
  pt.R = ImP.transpose() * v.asDiagonal();
  pt.r_inv_p = pt.R.fullPivLu().solve(p);
  const double mean = pt.r_inv_p.sum();
  if (!(mean > 0.0) || !std::isfinite(mean))
    throw SingularError("e'R^{-1}p is not a positive finite mean");
  pt.zeta = 1.0 / mean;
  return pt;
}

PhaseTypeService normalize_mean(const PhaseTypeService& pt) {
  const double mean = pt.mean();
  return build_phase_type(pt.p, pt.P, pt.v * mean);
}

Mat routing_fluctuation(const PhaseTypeService& pt, int k) {
  if (k < 1 || k > pt.d) throw IndexOutOfRangeError("phase index out of range");
  const auto row = pt.P.row(k - 1);
  Mat H(pt.d, pt.d);
  for (int i = 0; i < pt.d; ++i) {
    for (int j = 0; j < pt.d; ++j) {
      H(i, j) = (i == j) ? row(i) * (1.0 - row(i)) : -row(i) * row(j);
    }
  }
  return H;
}

Mat covariance(const PhaseTypeService& pt) {
  if (!pt.is_mean_one())
    throw InvalidArgument("covariance requires a mean-1 phase type; call normalize_mean");
  const int d = pt.d;
  const Vec gamma = pt.zeta * pt.r_inv_p;
  Mat cov = Mat(pt.p.asDiagonal());
  for (int k = 1; k <= d; ++k) {
    cov += gamma(k - 1) * pt.v(k - 1) * routing_fluctuation(pt, k);
  }
  const Mat ImP = Mat::Identity(d, d) - pt.P;
  cov += ImP.transpose() * pt.v.asDiagonal() * gamma.asDiagonal() * ImP;

  const Mat sym = 0.5 * (cov + cov.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(sym);
  if (es.eigenvalues().minCoeff() <= 0.0)
    throw NotPositiveDefiniteError("sigma sigma' is not positive definite (ellipticity fails)");
  return sym;
}

}  // namespace phn
