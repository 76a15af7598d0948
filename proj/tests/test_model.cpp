#include <doctest.h>

#include <cmath>

#include "phn/errors.hpp"
#include "phn/model.hpp"
#include "phn/rng.hpp"
#include "test_models.hpp"

using namespace phn;

namespace {
Vec random_point(rng::Xoshiro256pp& gen, int d, double scale) {
  Vec x(d);
  for (int i = 0; i < d; ++i) x(i) = scale * gen.normal();
  return x;
}
}  // namespace

TEST_CASE("build_phase_type: exponential and Erlang-2") {
  const PhaseTypeService exp1 = exponential_service();
  CHECK(exp1.zeta == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(exp1.r_inv_p(0) == doctest::Approx(1.0).epsilon(1e-14));

  const PhaseTypeService erl = erlang2_service();
  CHECK(erl.R(0, 0) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(erl.R(0, 1) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(erl.R(1, 0) == doctest::Approx(-2.0).epsilon(1e-14));
  CHECK(erl.R(1, 1) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(erl.zeta == doctest::Approx(1.0).epsilon(1e-12));
  const Vec gamma = erl.zeta * erl.r_inv_p;
  CHECK(gamma(0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(gamma(1) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("build_phase_type: rejects invalid inputs") {
  Vec p(2), v(2);
  p << 1.0, 0.0;
  v << 2.0, 2.0;
  Mat P = Mat::Zero(2, 2);

  SUBCASE("nonzero diagonal") {
    P(0, 0) = 0.5;
    P(0, 1) = 1.0;
    CHECK_THROWS_AS(build_phase_type(p, P, v), BadRoutingError);
  }
  SUBCASE("row sum exceeds one") {
    P(0, 1) = 1.5;
    CHECK_THROWS_AS(build_phase_type(p, P, v), BadRoutingError);
  }
  SUBCASE("negative routing entry") {
    P(0, 1) = -0.25;
    CHECK_THROWS_AS(build_phase_type(p, P, v), BadRoutingError);
  }
  SUBCASE("bad initial distribution") {
    Vec q(2);
    q << 0.7, 0.7;
    CHECK_THROWS_AS(build_phase_type(q, P, v), NonStochasticError);
  }
  SUBCASE("negative p entry") {
    Vec q(2);
    q << 1.5, -0.5;
    CHECK_THROWS_AS(build_phase_type(q, P, v), NonStochasticError);
  }
}

TEST_CASE("normalize_mean rescales rates and is idempotent") {
  SUBCASE("d=1, rate 2 has mean 1/2, rescales to rate 1") {
    Vec p(1), v(1);
    p << 1.0;
    v << 2.0;
    const PhaseTypeService pt = build_phase_type(p, Mat::Zero(1, 1), v);
    CHECK(pt.mean() == doctest::Approx(0.5).epsilon(1e-14));
    const PhaseTypeService norm = normalize_mean(pt);
    CHECK(norm.v(0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(norm.is_mean_one());
  }
  SUBCASE("already normalized Erlang-2 unchanged") {
    const PhaseTypeService erl = erlang2_service();
    const PhaseTypeService norm = normalize_mean(erl);
    CHECK((norm.v - erl.v).norm() == doctest::Approx(0.0).epsilon(1e-14));
  }
  SUBCASE("Erlang-2 with rates 4 halves to rates 2") {
    Vec p(2), v(2);
    p << 1.0, 0.0;
    v << 4.0, 4.0;
    Mat P = Mat::Zero(2, 2);
    P(0, 1) = 1.0;
    const PhaseTypeService norm = normalize_mean(build_phase_type(p, P, v));
    CHECK(norm.v(0) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(norm.v(1) == doctest::Approx(2.0).epsilon(1e-14));
  }
}

TEST_CASE("routing_fluctuation") {
  const PhaseTypeService erl = erlang2_service();
  SUBCASE("Erlang-2 row (0,1) gives the zero matrix") {
    CHECK(routing_fluctuation(erl, 1).norm() == doctest::Approx(0.0).epsilon(1e-15));
  }
  SUBCASE("zero routing row gives the zero matrix") {
    CHECK(routing_fluctuation(erl, 2).norm() == doctest::Approx(0.0).epsilon(1e-15));
  }
  SUBCASE("row with entries (0.5, 0.5): diagonal 0.25, off-diagonal -0.25") {
    Vec p(3), v(3);
    p << 1.0, 0.0, 0.0;
    v << 1.0, 1.0, 1.0;
    Mat P = Mat::Zero(3, 3);
    P(0, 1) = 0.5;
    P(0, 2) = 0.5;
    const PhaseTypeService pt = build_phase_type(p, P, v);
    const Mat h1 = routing_fluctuation(pt, 1);
    CHECK(h1(1, 1) == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(h1(2, 2) == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(h1(1, 2) == doctest::Approx(-0.25).epsilon(1e-14));
    CHECK(h1(2, 1) == doctest::Approx(-0.25).epsilon(1e-14));
    CHECK(h1(0, 0) == doctest::Approx(0.0).epsilon(1e-14));
  }
  SUBCASE("index out of range") {
    CHECK_THROWS_AS(routing_fluctuation(erl, 0), IndexOutOfRangeError);
    CHECK_THROWS_AS(routing_fluctuation(erl, 3), IndexOutOfRangeError);
  }
}

TEST_CASE("covariance oracle values") {
  SUBCASE("d=1 exponential: sigma^2 = 2") {
    const Mat cov = covariance(exponential_service());
    CHECK(cov(0, 0) == doctest::Approx(2.0).epsilon(1e-14));
  }
  SUBCASE("Erlang-2: [[2,-1],[-1,2]] with eigenvalues {1,3}") {
    const Mat cov = covariance(erlang2_service());
    CHECK(cov(0, 0) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(cov(0, 1) == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(cov(1, 0) == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(cov(1, 1) == doctest::Approx(2.0).epsilon(1e-12));
    Eigen::SelfAdjointEigenSolver<Mat> es(cov);
    CHECK(es.eigenvalues()(0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(es.eigenvalues()(1) == doctest::Approx(3.0).epsilon(1e-12));
  }
}

TEST_CASE("build_model populates coefficients") {
  SUBCASE("scalar model: sigma = sqrt(2), c_ellip = 2") {
    const DiffusionModel m = scalar_model(0.5, 1.0);
    CHECK(m.sigma(0, 0) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
    CHECK(m.c_ellip == doctest::Approx(2.0).epsilon(1e-12));
  }
  SUBCASE("Erlang-2 Cholesky factor") {
    const DiffusionModel m = erlang2_model();
    CHECK(m.sigma(0, 0) == doctest::Approx(1.41421).epsilon(1e-5));
    CHECK(m.sigma(1, 0) == doctest::Approx(-0.70711).epsilon(1e-5));
    CHECK(m.sigma(1, 1) == doctest::Approx(1.22474).epsilon(1e-5));
    CHECK(m.sigma(0, 1) == doctest::Approx(0.0).epsilon(1e-15));
  }
  SUBCASE("alpha = 0 rejected") {
    CHECK_THROWS_AS(build_model(erlang2_service(), 0.0, 1.0), InvalidArgument);
  }
  SUBCASE("sigma sigma' reconstruction and symmetry") {
    const DiffusionModel m = erlang2_model();
    CHECK((m.sigma * m.sigma.transpose() - m.sigma_sq).norm() < 1e-10);
    CHECK((m.sigma_sq - m.sigma_sq.transpose()).norm() < 1e-12);
  }
  SUBCASE("moment constants") {
    const DiffusionModel m = scalar_model(1.0, 1.0);
    CHECK(m.moment_constant(2) == doctest::Approx(8.0 * m.c_op_tilde).epsilon(1e-14));
    CHECK_THROWS_AS(m.moment_constant(1), InvalidArgument);
  }
  SUBCASE("gamma sums to one and solves R gamma = p under mean-1 service") {
    for (const DiffusionModel& m : {scalar_model(0.5, 1.0), erlang2_model()}) {
      CHECK(m.gamma.sum() == doctest::Approx(1.0).epsilon(1e-10));
      CHECK((m.R * m.gamma - m.pt.p).norm() < 1e-12);
    }
  }
}

TEST_CASE("drift values") {
  const DiffusionModel m1 = scalar_model(0.5, 1.0);
  SUBCASE("scalar examples") {
    Vec x(1);
    x << 0.0;
    CHECK(drift(m1, x)(0) == doctest::Approx(-1.0).epsilon(1e-14));
    x << 2.0;
    CHECK(drift(m1, x)(0) == doctest::Approx(-2.0).epsilon(1e-14));
    x << -1.0;
    CHECK(drift(m1, x)(0) == doctest::Approx(0.0).epsilon(1e-14));
  }
  SUBCASE("Erlang-2 examples") {
    const DiffusionModel m2 = erlang2_model(0.5, 1.0);
    Vec x(2);
    x << 1.0, 1.0;
    Vec g = drift(m2, x);
    CHECK(g(0) == doctest::Approx(0.0).epsilon(1e-13));
    CHECK(g(1) == doctest::Approx(-4.0).epsilon(1e-13));
    x << -1.0, -1.0;
    g = drift(m2, x);
    CHECK(g(0) == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(g(1) == doctest::Approx(0.0).epsilon(1e-13));
  }
}

TEST_CASE("drift Lipschitz and growth bounds with the model constants") {
  for (const DiffusionModel& m : {scalar_model(0.5, 1.0), erlang2_model()}) {
    rng::Xoshiro256pp gen(2024);
    for (int trial = 0; trial < 2000; ++trial) {
      const Vec x = random_point(gen, m.dim(), 5.0);
      const Vec y = random_point(gen, m.dim(), 5.0);
      CHECK((drift(m, x) - drift(m, y)).norm() <= m.c_op * (x - y).norm() + 1e-12);
      CHECK(drift(m, x).norm() <= m.c_op_tilde * (1.0 + x.norm()) + 1e-12);
    }
  }
}

TEST_CASE("drift continuity across the kink hyperplane") {
  const DiffusionModel m = erlang2_model();
  rng::Xoshiro256pp gen(77);
  for (int trial = 0; trial < 500; ++trial) {
    Vec x = random_point(gen, 2, 3.0);
    x(1) -= x.sum();  // project onto e'x = 0
    Vec u = random_point(gen, 2, 1.0);
    u /= u.norm();
    const double t = 1e-3 * (0.5 + gen.uniform01());
    const Vec gp = drift(m, Vec(x + t * u));
    const Vec gm = drift(m, Vec(x - t * u));
    CHECK((gp - gm).norm() <= 2.0 * m.c_op * t + 1e-12);
  }
}

TEST_CASE("rho_eps branch values") {
  CHECK(rho_eps(0.1, 0.1) == doctest::Approx(0.1).epsilon(1e-14));
  CHECK(rho_eps(-0.1, 0.1) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(rho_eps(0.0, 0.1) == doctest::Approx(3.0 * 0.1 / 16.0).epsilon(1e-14));
  CHECK(rho_eps(0.5, 0.1) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(rho_eps(-0.5, 0.1) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK_THROWS_AS(rho_eps(0.0, 0.0), BadEpsilonError);
  CHECK_THROWS_AS(rho_eps(0.0, 1.0), BadEpsilonError);
}

TEST_CASE("smoothed drift converges to the drift away from the kink") {
  const DiffusionModel m = erlang2_model();
  Vec x(2);
  x << 0.7, -0.2;  // e'x = 0.5 != 0
  for (double eps : {0.2, 0.05, 0.01, 1e-4}) {
    if (x.sum() > eps) {
      CHECK((smoothed_drift(m, x, eps) - drift(m, x)).norm() == doctest::Approx(0.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("smoothing error bound ||g_eps - g|| <= c_op eps on a random grid") {
  for (const DiffusionModel& m : {scalar_model(0.5, 1.0), erlang2_model()}) {
    rng::Xoshiro256pp gen(41);
    for (double eps : {0.1, 0.01}) {
      for (int trial = 0; trial < 10000; ++trial) {
        const Vec x = random_point(gen, m.dim(), 2.0);
        const double err = (smoothed_drift(m, x, eps) - drift(m, x)).norm();
        REQUIRE(err <= m.c_op * eps);
      }
    }
  }
}

TEST_CASE("generator_apply") {
  const DiffusionModel m = scalar_model(0.5, 1.0);
  SUBCASE("linear f: A f = <a, g>") {
    Vec a(1), x(1);
    a << 3.0;
    x << 2.0;
    const double got = generator_apply(m, a, Mat::Zero(1, 1), x);
    CHECK(got == doctest::Approx(3.0 * drift(m, x)(0)).epsilon(1e-14));
  }
  SUBCASE("f = |y|^2 at x = 0 gives 2") {
    Vec grad(1), x(1);
    grad << 0.0;
    x << 0.0;
    Mat hess(1, 1);
    hess << 2.0;
    CHECK(generator_apply(m, grad, hess, x) == doctest::Approx(2.0).epsilon(1e-14));
  }
  SUBCASE("constant f gives 0") {
    Vec x(1);
    x << 1.5;
    CHECK(generator_apply(m, Vec::Zero(1), Mat::Zero(1, 1), x) == doctest::Approx(0.0));
  }
  SUBCASE("dimension mismatch") {
    Vec x(1);
    x << 0.0;
    CHECK_THROWS_AS(generator_apply(m, Vec::Zero(2), Mat::Zero(1, 1), x),
                    DimensionMismatchError);
  }
}
