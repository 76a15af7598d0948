#include <doctest.h>

#include <cmath>

#include "phn/em.hpp"
#include "phn/errors.hpp"
#include "test_models.hpp"

using namespace phn;

TEST_CASE("em_step") {
  const DiffusionModel m = scalar_model(0.5, 1.0);
  Vec x(1), xi(1);
  SUBCASE("xi = 0 is a deterministic Euler step") {
    x << 0.4;
    xi << 0.0;
    const Vec next = em_step(m, x, 0.01, xi);
    CHECK(next(0) == doctest::Approx(0.4 + 0.01 * drift(m, x)(0)).epsilon(1e-14));
  }
  SUBCASE("scalar arithmetic example") {
    x << 0.0;
    xi << 1.0;
    const Vec next = em_step(m, x, 0.01, xi);
    CHECK(next(0) == doctest::Approx(-0.01 + 0.1 * std::sqrt(2.0)).epsilon(1e-12));
  }
  SUBCASE("eta = 0 leaves the state unchanged") {
    x << 1.7;
    xi << 0.0;
    CHECK(em_step(m, x, 0.0, xi)(0) == doctest::Approx(1.7).epsilon(1e-15));
  }
}

TEST_CASE("simulate_chain basics") {
  const DiffusionModel m = scalar_model(1.0, 1.0);
  SUBCASE("zero steps give an empty trajectory") {
    EMConfig cfg;
    cfg.eta = 0.01;
    cfg.n_steps = 0;
    cfg.seed = 1;
    const Trajectory traj = simulate_chain(m, cfg);
    CHECK(traj.n_kept() == 0);
  }
  SUBCASE("same seed gives bit-identical trajectories") {
    EMConfig cfg;
    cfg.eta = 0.05;
    cfg.n_steps = 5000;
    cfg.burn_in = 100;
    cfg.thin = 3;
    cfg.x0 = Vec::Zero(1);
    cfg.seed = 99;
    const Trajectory a = simulate_chain(m, cfg);
    const Trajectory b = simulate_chain(m, cfg);
    CHECK(a.n_kept() == (5000 - 100) / 3);
    REQUIRE(a.n_kept() == b.n_kept());
    CHECK((a.states - b.states).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("config validation") {
    EMConfig cfg;
    cfg.eta = 0.5;  // >= 1/e
    cfg.n_steps = 10;
    cfg.x0 = Vec::Zero(1);
    CHECK_THROWS_AS(simulate_chain(m, cfg), InvalidArgument);
    cfg.eta = 0.01;
    cfg.burn_in = 10;
    CHECK_THROWS_AS(simulate_chain(m, cfg), InvalidArgument);
  }
}

TEST_CASE("chain mean matches the Normal(-1,1) stationary law") {
  const DiffusionModel m = scalar_model(1.0, 1.0);
  EMConfig cfg;
  cfg.eta = 0.01;
  cfg.n_steps = 1010000;
  cfg.burn_in = 10000;
  cfg.thin = 1;
  cfg.x0 = Vec::Zero(1);
  cfg.seed = 7;
  const Trajectory traj = simulate_chain(m, cfg);
  CHECK(traj.states.col(0).mean() == doctest::Approx(-1.0).epsilon(0.02));
}

TEST_CASE("divergence guard reports the offending step") {
  const DiffusionModel m = scalar_model(1.0, 1.0);
  EMConfig cfg;
  cfg.eta = 0.01;
  cfg.n_steps = 10;
  cfg.x0 = Vec::Constant(1, 2e8);  // beyond the norm guard after one step
  cfg.seed = 1;
  try {
    simulate_chain(m, cfg);
    FAIL("expected NonFiniteError");
  } catch (const NonFiniteError& e) {
    CHECK(e.step_index == 1);
  }
}

TEST_CASE("plan_steps") {
  SUBCASE("delta = 0.1, K = 1") {
    const StepPlan plan = plan_steps(0.1, 1.0);
    CHECK(plan.eta == doctest::Approx(0.01).epsilon(1e-15));
    CHECK(plan.n_steps == 231);
  }
  SUBCASE("delta near 1 clamps to one step") {
    const StepPlan plan = plan_steps(0.999999, 1.0);
    CHECK(plan.n_steps >= 1);
  }
  SUBCASE("delta = 0.05, K = 2") {
    const StepPlan plan = plan_steps(0.05, 2.0);
    CHECK(plan.eta == doctest::Approx(0.0025).epsilon(1e-15));
    CHECK(plan.n_steps == 2397);
  }
  SUBCASE("bad delta") {
    CHECK_THROWS_AS(plan_steps(0.0, 1.0), BadDeltaError);
    CHECK_THROWS_AS(plan_steps(1.0, 1.0), BadDeltaError);
  }
}

TEST_CASE("sample_invariant") {
  const DiffusionModel m = scalar_model(1.0, 1.0);
  SUBCASE("n_chains = 1 equals a thinned chain with the derived seed") {
    const SampleSet set = sample_invariant(m, 0.01, 200, 25, 100, 4242, 1);
    EMConfig cfg;
    cfg.eta = 0.01;
    cfg.burn_in = 100;
    cfg.thin = 25;
    cfg.n_steps = 100 + 200 * 25;
    cfg.x0 = Vec::Zero(1);
    cfg.seed = rng::derive_seed(4242, rng::SeedRole::Chain, 0);
    const Trajectory traj = simulate_chain(m, cfg);
    REQUIRE(set.size() == traj.n_kept());
    CHECK((set.points - traj.states).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("chain streams depend only on (master, chain_id)") {
    const SampleSet two = sample_invariant(m, 0.01, 400, 10, 50, 9, 2);
    const SampleSet four = sample_invariant(m, 0.01, 400, 10, 50, 9, 4);
    // chain 0 draws 200 samples in the 2-chain run and 100 in the 4-chain
    // run; the first 100 coincide because the stream is seed-determined
    for (int i = 0; i < 100; ++i) CHECK(two.points(i, 0) == four.points(i, 0));
    CHECK(two.provenance.chain_seeds[0] == four.provenance.chain_seeds[0]);
    CHECK(two.provenance.chain_seeds[1] == four.provenance.chain_seeds[1]);
  }
  SUBCASE("worker count never changes the pooled set") {
    const SampleSet serial = sample_invariant(m, 0.01, 300, 10, 50, 5, 6, 1);
    const SampleSet parallel = sample_invariant(m, 0.01, 300, 10, 50, 5, 6, 6);
    CHECK((serial.points - parallel.points).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("stationary variance close to 1 at eta = 1e-3") {
    const SampleSet set = sample_invariant(m, 1e-3, 10000, 1000, 10000, 33, 8);
    const double mean = set.points.col(0).mean();
    const double var = (set.points.col(0).array() - mean).square().sum() / (set.size() - 1);
    CHECK(var == doctest::Approx(1.0).epsilon(0.03));
  }
}

TEST_CASE("transition_density") {
  const DiffusionModel m = scalar_model(0.5, 1.0);
  SUBCASE("mode value") {
    Vec x(1);
    x << 0.3;
    const Vec z = x + 0.02 * drift(m, x);
    const double det = m.sigma_sq.determinant();
    const double expected = 1.0 / std::sqrt(2.0 * M_PI * 0.02 * det);
    CHECK(transition_density(m, 0.02, x, z) == doctest::Approx(expected).epsilon(1e-12));
  }
  SUBCASE("scalar Gaussian value at the drift-free point") {
    // g(x) = 0 at x = -beta/alpha boundary... use alpha=0.5, beta=1: g(-1) = 0
    Vec x(1);
    x << -1.0;
    REQUIRE(drift(m, x)(0) == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(transition_density(m, 1.0, x, x) ==
          doctest::Approx(1.0 / std::sqrt(4.0 * M_PI)).epsilon(1e-10));
  }
  SUBCASE("d = 2 value against a dense multivariate Gaussian formula") {
    const DiffusionModel m2 = erlang2_model();
    Vec x(2), z(2);
    x << 0.3, -0.2;
    z << 0.1, 0.4;
    const double eta = 0.04;
    const Vec mean = x + eta * drift(m2, x);
    const Mat cov = eta * m2.sigma_sq;
    const Vec diff = z - mean;
    const double quad = diff.dot(cov.inverse() * diff);
    const double expected =
        std::exp(-0.5 * quad) / (2.0 * M_PI * std::sqrt(cov.determinant()));
    CHECK(transition_density(m2, eta, x, z) == doctest::Approx(expected).epsilon(1e-12));
  }
  SUBCASE("normalization by quadrature") {
    Vec x(1);
    x << 0.5;
    double integral = 0.0;
    const double lo = -20.0, hi = 20.0;
    const int panels = 4000;
    const double hstep = (hi - lo) / panels;
    for (int i = 0; i <= panels; ++i) {
      Vec z(1);
      z << lo + i * hstep;
      const double w = (i == 0 || i == panels) ? 0.5 : 1.0;
      integral += w * transition_density(m, 0.5, x, z);
    }
    integral *= hstep;
    CHECK(integral == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("moment_estimate") {
  SUBCASE("all-zero samples") {
    SampleSet set;
    set.points = Mat::Zero(10, 2);
    CHECK(moment_estimate(set, 2.0).value == doctest::Approx(0.0));
  }
  SUBCASE("empty set rejected") {
    SampleSet set;
    set.points = Mat::Zero(0, 1);
    CHECK_THROWS_AS(moment_estimate(set, 2.0), EmptySampleSetError);
  }
  SUBCASE("Gaussian moments of the stationary law") {
    const DiffusionModel m = scalar_model(1.0, 1.0);
    const SampleSet set = sample_invariant(m, 1e-3, 20000, 500, 10000, 11, 8);
    const MomentEstimate m2 = moment_estimate(set, 2.0);
    CHECK(m2.value == doctest::Approx(2.0).epsilon(0.025));
    const MomentEstimate m4 = moment_estimate(set, 4.0);
    CHECK(m4.value == doctest::Approx(10.0).epsilon(0.04));
  }
}

TEST_CASE("one-step law: empirical mean and covariance within 4 standard errors") {
  const DiffusionModel m = erlang2_model();
  Vec x(2);
  x << 0.3, -0.4;
  const double eta = 0.05;
  const int n = 100000;
  rng::Xoshiro256pp gen(606);
  Vec xi(2);
  Vec mean = Vec::Zero(2);
  Mat cov = Mat::Zero(2, 2);
  Mat draws(n, 2);
  for (int k = 0; k < n; ++k) {
    xi << gen.normal(), gen.normal();
    const Vec next = em_step(m, x, eta, xi);
    draws.row(k) = next;
    mean += next;
  }
  mean /= n;
  for (int k = 0; k < n; ++k) {
    const Vec c = draws.row(k).transpose() - mean;
    cov += c * c.transpose();
  }
  cov /= (n - 1);

  const Vec expected_mean = x + eta * drift(m, x);
  const Mat expected_cov = eta * m.sigma_sq;
  for (int i = 0; i < 2; ++i) {
    const double se_mean = std::sqrt(expected_cov(i, i) / n);
    CHECK(std::abs(mean(i) - expected_mean(i)) <= 4.0 * se_mean);
    for (int j = 0; j < 2; ++j) {
      // var of a sample covariance entry ~ (c_ii c_jj + c_ij^2)/n
      const double se_cov = std::sqrt(
          (expected_cov(i, i) * expected_cov(j, j) + expected_cov(i, j) * expected_cov(i, j)) /
          n);
      CHECK(std::abs(cov(i, j) - expected_cov(i, j)) <= 4.0 * se_cov);
    }
  }
}

TEST_CASE("moment stability: fourth moment agrees between chain halves" *
          doctest::timeout(240)) {
  for (const DiffusionModel& m : {scalar_model(1.0, 1.0), erlang2_model()}) {
    EMConfig cfg;
    cfg.eta = 0.05;
    cfg.n_steps = 2100000;
    cfg.burn_in = 100000;
    cfg.thin = 1;
    cfg.x0 = Vec::Zero(m.dim());
    cfg.seed = 3141;
    const Trajectory traj = simulate_chain(m, cfg);
    const std::int64_t half = traj.n_kept() / 2;
    double first = 0.0, second = 0.0;
    for (std::int64_t k = 0; k < half; ++k) first += std::pow(traj.states.row(k).norm(), 4.0);
    for (std::int64_t k = half; k < 2 * half; ++k)
      second += std::pow(traj.states.row(k).norm(), 4.0);
    first /= half;
    second /= half;
    CHECK(std::abs(first - second) / first < 0.05);
  }
}

TEST_CASE("one-step coupling against a 100-substep refinement scales as eta^3" *
          doctest::timeout(240)) {
  const DiffusionModel m = erlang2_model();
  Vec x(2);
  x << 0.4, 0.3;
  const int n_pairs = 10000;
  std::vector<double> log_eta, log_mse;
  for (double eta : {0.1, 0.05, 0.025}) {
    const int sub = 100;
    const double sub_eta = eta / sub;
    const double sqrt_sub = std::sqrt(sub_eta);
    double mse = 0.0;
    rng::Xoshiro256pp gen(2718);  // common random numbers across eta via fresh generator
    Vec xi(2);
    for (int pair = 0; pair < n_pairs; ++pair) {
      Vec fine = x;
      Vec total_noise = Vec::Zero(2);
      for (int s = 0; s < sub; ++s) {
        xi << gen.normal(), gen.normal();
        total_noise += sqrt_sub * xi;
        fine += sub_eta * drift(m, fine) + sqrt_sub * (m.sigma * xi);
      }
      const Vec coarse = x + eta * drift(m, x) + m.sigma * total_noise;
      mse += (fine - coarse).squaredNorm();
    }
    mse /= n_pairs;
    log_eta.push_back(std::log(eta));
    log_mse.push_back(std::log(mse));
  }
  // OLS slope over the three step sizes
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < log_eta.size(); ++i) {
    sx += log_eta[i];
    sy += log_mse[i];
    sxx += log_eta[i] * log_eta[i];
    sxy += log_eta[i] * log_mse[i];
  }
  const double k = static_cast<double>(log_eta.size());
  const double slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
  CHECK(slope >= 2.5);
  CHECK(slope <= 3.5);
}
