#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ktm/bridge.hpp"
#include "ktm/bridge_check.hpp"
#include "ktm/errors.hpp"
#include "ktm/ess.hpp"
#include "test_util.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>

using namespace ktm;

namespace {

Eigen::MatrixXd random_spd(Rng& rng, int n, double base) {
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) a(i, j) = rng.normal();
  }
  Eigen::MatrixXd s = a * a.transpose() / n;
  s.diagonal().array() += base;
  return s;
}

}  // namespace

TEST_CASE("ess recovers the prior under a constant likelihood") {
  Rng rng(1);
  const int n = 5;
  Eigen::VectorXd mean = test::random_vector(rng, n, 1.0);
  Eigen::MatrixXd cov = random_spd(rng, n, 0.3);
  Eigen::MatrixXd factor = Eigen::LLT<Eigen::MatrixXd>(cov).matrixL();

  LogLikFn flat = [](const Eigen::VectorXd&) { return 0.0; };
  Eigen::VectorXd x = mean;
  const int kept = 20000;
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(n);
  Eigen::MatrixXd sum_outer = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < kept; ++i) {
    x = ess_sample(flat, mean, factor, x, rng);
    sum += x;
    sum_outer += x * x.transpose();
  }
  Eigen::VectorXd sample_mean = sum / kept;
  Eigen::MatrixXd sample_cov =
      (sum_outer - kept * sample_mean * sample_mean.transpose()) / (kept - 1.0);

  // 3 sigma Monte Carlo bands, with a conservative effective sample size of
  // kept / 4 for chain autocorrelation.
  const double n_eff = kept / 4.0;
  for (int i = 0; i < n; ++i) {
    double band = 3.0 * std::sqrt(cov(i, i) / n_eff);
    CHECK(std::abs(sample_mean[i] - mean[i]) < band);
    // Var of a variance estimate is about 2 sigma^4 / n_eff for Gaussians.
    double var_band = 3.0 * cov(i, i) * std::sqrt(2.0 / n_eff);
    CHECK(std::abs(sample_cov(i, i) - cov(i, i)) < var_band);
  }
}

TEST_CASE("ess matches the analytic Gaussian product posterior") {
  Rng rng(2);
  const int n = 4;
  Eigen::VectorXd prior_mean = test::random_vector(rng, n, 1.0);
  Eigen::MatrixXd prior_cov = random_spd(rng, n, 0.4);
  Eigen::MatrixXd factor = Eigen::LLT<Eigen::MatrixXd>(prior_cov).matrixL();

  Eigen::VectorXd like_mean = test::random_vector(rng, n, 1.0);
  const double like_var = 0.05;  // sharply peaked
  LogLikFn quad = [&](const Eigen::VectorXd& v) {
    return -0.5 * (v - like_mean).squaredNorm() / like_var;
  };

  Eigen::MatrixXd post_prec =
      prior_cov.inverse() + Eigen::MatrixXd::Identity(n, n) / like_var;
  Eigen::MatrixXd post_cov = post_prec.inverse();
  Eigen::VectorXd post_mean =
      post_cov * (prior_cov.inverse() * prior_mean + like_mean / like_var);

  Eigen::VectorXd x = prior_mean;
  for (int i = 0; i < 1000; ++i) x = ess_sample(quad, prior_mean, factor, x, rng);
  const int kept = 20000;
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < kept; ++i) {
    x = ess_sample(quad, prior_mean, factor, x, rng);
    sum += x;
  }
  Eigen::VectorXd sample_mean = sum / kept;
  const double n_eff = kept / 10.0;  // peaked target mixes slower
  for (int i = 0; i < n; ++i) {
    double band = 3.0 * std::sqrt(post_cov(i, i) / n_eff);
    CHECK(std::abs(sample_mean[i] - post_mean[i]) < band);
  }
}

TEST_CASE("ess trajectories are deterministic given the seed") {
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(3);
  Eigen::MatrixXd factor = Eigen::MatrixXd::Identity(3, 3);
  LogLikFn lik = [](const Eigen::VectorXd& v) { return -0.1 * v.squaredNorm(); };
  Rng a(9);
  Rng b(9);
  Eigen::VectorXd xa = Eigen::VectorXd::Ones(3);
  Eigen::VectorXd xb = Eigen::VectorXd::Ones(3);
  for (int i = 0; i < 100; ++i) {
    xa = ess_sample(lik, mean, factor, xa, a);
    xb = ess_sample(lik, mean, factor, xb, b);
    CHECK(xa == xb);
  }
}

TEST_CASE("ess rejects a non-finite starting likelihood") {
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(2);
  Eigen::MatrixXd factor = Eigen::MatrixXd::Identity(2, 2);
  LogLikFn bad = [](const Eigen::VectorXd&) {
    return -std::numeric_limits<double>::infinity();
  };
  Rng rng(1);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(2);
  CHECK_THROWS_AS(ess_sample(bad, mean, factor, x, rng), Error);
}

TEST_CASE("conjugate count updates commute with the bridge round trip") {
  Rng rng(3);
  const int k = 6;
  Eigen::VectorXd alpha0 = test::random_alpha(rng, k, 0.2, 5.0);
  Eigen::VectorXd counts(k);
  counts << 3, 0, 1, 7, 2, 0;

  // Batch update.
  Eigen::VectorXd batch = alpha0 + counts;

  // One count at a time, bouncing through the Gaussian basis in between.
  DirichletBelief rolling{alpha0};
  for (int t = 0; t < k; ++t) {
    for (int i = 0; i < static_cast<int>(counts[t]); ++i) {
      Eigen::VectorXd a = rolling.alpha;
      a[t] += 1.0;
      rolling = gaussian_to_dirichlet(dirichlet_to_gaussian(DirichletBelief(a)));
    }
  }
  for (int t = 0; t < k; ++t) {
    CHECK(rolling.alpha[t] == doctest::Approx(batch[t]).epsilon(1e-9));
  }
}

TEST_CASE("bridge experiment sampling invariants") {
  Rng rng(4);
  BridgeExperiment e = sample_bridge_experiment(10, 200, rng);
  CHECK(e.prior_mean.lpNorm<Eigen::Infinity>() == 0.0);
  CHECK(e.prior_cov == Eigen::MatrixXd::Identity(10, 10));
  CHECK(std::abs(e.ground_truth.sum()) < 1e-9);
  CHECK(e.observations.size() == 200);
  for (int c : e.observations) {
    CHECK(c >= 0);
    CHECK(c < 10);
  }
  CHECK_THROWS_AS(sample_bridge_experiment(2, 10, rng), Error);
}

TEST_CASE("zero observations reproduce the prior belief") {
  Rng rng(5);
  BridgeExperiment e = sample_bridge_experiment(10, 50, rng);
  auto rows = run_bridge_vs_mcmc(e, {0}, 1000, 7);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].n_obs == 0);
  CHECK(rows[0].bridge_err ==
        doctest::Approx((e.prior_mean - e.ground_truth).norm()).epsilon(1e-12));
  // Prior sd in the bridge column is sqrt of the summed prior variances.
  CHECK(rows[0].bridge_sd == doctest::Approx(std::sqrt(10.0)).epsilon(1e-12));
}

TEST_CASE("bridge and mcmc error curves improve with data") {
  auto rows = bridge_check(10, {0, 10, 50, 100, 200}, 12, 2000, 11, 0);
  REQUIRE(rows.size() == 5);
  // Trend level: each step may wobble a hair, the ends must clearly drop.
  for (size_t i = 1; i < rows.size(); ++i) {
    CHECK(rows[i].bridge_err <= rows[i - 1].bridge_err * 1.05);
    CHECK(rows[i].mcmc_err <= rows[i - 1].mcmc_err * 1.05);
  }
  CHECK(rows.back().bridge_err < rows.front().bridge_err);
  CHECK(rows.back().mcmc_err < rows.front().mcmc_err);
  CHECK(rows.back().bridge_err <= 2.0 * rows.back().mcmc_err);

  // Calibration band: reported sd within [0.3, 3] of the observed error.
  for (const auto& r : rows) {
    CHECK(r.bridge_sd >= 0.3 * r.bridge_err);
    CHECK(r.bridge_sd <= 3.0 * r.bridge_err);
  }
}

TEST_CASE("bridge check is deterministic and respects the thread cap") {
  auto a = bridge_check(5, {0, 20}, 3, 1000, 42, 1);
  auto b = bridge_check(5, {0, 20}, 3, 1000, 42, 2);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].bridge_err == b[i].bridge_err);
    CHECK(a[i].mcmc_err == b[i].mcmc_err);
  }
}
