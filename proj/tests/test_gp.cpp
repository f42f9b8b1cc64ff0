#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ktm/errors.hpp"
#include "ktm/gp.hpp"
#include "test_util.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <memory>

using namespace ktm;

namespace {

struct RandomProblem {
  std::shared_ptr<FeatureSpace> features;
  KernelSpec spec;
  GaussianMessages msgs;
  Hyperparameters hypers;

  RandomProblem(Rng& rng, int n)
      : features(std::make_shared<FeatureSpace>(test::random_time_author_features(rng, n, 3))),
        spec(KernelSpec::rational_quadratic(0.4 + 2.0 * rng.uniform(),
                                            0.6 + 3.0 * rng.uniform(),
                                            0.4 + 1.5 * rng.uniform(),
                                            0.5 + 3.0 * rng.uniform())),
        msgs(test::random_vector(rng, n, 1.5), test::random_positive(rng, n, 0.05, 1.0),
             0.3 + rng.uniform()),
        hypers(Hyperparameters::from(spec, msgs.tau)) {}
};

}  // namespace

TEST_CASE("message invariants") {
  Eigen::Vector3d means(0.5, -1.0, 2.0);
  Eigen::Vector3d vars(0.2, 1.0, 3.0);
  GaussianMessages msgs(means, vars, 0.7);
  for (int i = 0; i < 3; ++i) {
    CHECK(msgs.variances[i] == doctest::Approx(vars[i] + 0.49).epsilon(1e-14));
    CHECK(std::abs(msgs.precisions[i] * msgs.variances[i] - 1.0) < 1e-12);
    CHECK(msgs.precision_adjusted_means[i] ==
          doctest::Approx(msgs.means[i] / msgs.variances[i]));
  }
  CHECK_THROWS_AS(GaussianMessages(means, Eigen::Vector3d(0.1, -0.2, 0.3), 0.0), Error);
}

TEST_CASE("one-point fit with a constant kernel halves the message") {
  auto features = std::make_shared<FeatureSpace>(
      FeatureSpace::euclidean(Eigen::MatrixXd::Zero(1, 1)));
  KernelSpec spec = KernelSpec::constant(1.0);
  const double m = 1.8;
  GaussianMessages msgs(Eigen::VectorXd::Constant(1, m), Eigen::VectorXd::Ones(1), 0.0);
  GpTopicModel model = fit(spec, features, msgs);
  auto [mean, var] = predict(model, QueryPoint::row(0));
  CHECK(mean == doctest::Approx(m / 2.0).epsilon(1e-8));
  CHECK(var == doctest::Approx(0.5).epsilon(1e-8));
}

TEST_CASE("vanishing message precision reverts to the prior") {
  Rng rng(3);
  auto features = std::make_shared<FeatureSpace>(test::random_time_author_features(rng, 6, 2));
  KernelSpec spec = KernelSpec::rational_quadratic(1.4, 2.0, 1.0, 2.0);
  Eigen::VectorXd means = test::random_vector(rng, 6, 2.0);
  GaussianMessages msgs(means, Eigen::VectorXd::Constant(6, 1e12), 0.0);
  GpTopicModel model = fit(spec, features, msgs);
  for (int i = 0; i < 6; ++i) {
    auto [mean, var] = predict(model, QueryPoint::row(i));
    CHECK(std::abs(mean) < 1e-5);
    CHECK(var == doctest::Approx(1.4).epsilon(1e-5));
  }
}

TEST_CASE("infinite-noise limit: scaling variances by 1e12 reverts predictions") {
  Rng rng(4);
  RandomProblem p(rng, 7);
  GaussianMessages inflated(p.msgs.means, p.msgs.variances * 1e12, 0.0);
  GpTopicModel model = fit(p.spec, p.features, inflated);
  QueryPoint q = QueryPoint::at(Eigen::Vector2d(3.3, 1.0));
  auto [mean, var] = predict(model, q);
  CHECK(std::abs(mean - 0.0) < 1e-5);
  CHECK(var == doctest::Approx(kernel_self(p.spec, *p.features, q)).epsilon(1e-5));
}

TEST_CASE("fit, predict and log evidence agree with the dense oracle") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    int n = 2 + static_cast<int>(rng.next_u64() % 9);
    RandomProblem p(rng, n);
    GpTopicModel model = fit(p.spec, p.features, p.msgs);

    test::DenseGpOracle oracle;
    oracle.h = gram(p.spec, *p.features, model.train_rows()).k;
    oracle.h.diagonal().array() += model.jitter_used();
    oracle.means = p.msgs.means;
    oracle.variances = p.msgs.variances;

    QueryPoint q = QueryPoint::at(Eigen::Vector2d(10.0 * rng.uniform(), 1.0));
    Eigen::VectorXd cross(n);
    for (int i = 0; i < n; ++i) cross[i] = kernel_query(p.spec, *p.features, q, i);
    double prior = kernel_self(p.spec, *p.features, q);

    auto [mean, var] = predict(model, q);
    CHECK(std::abs(mean - oracle.predict_mean(cross)) < 1e-8);
    CHECK(std::abs(var - oracle.predict_variance(cross, prior)) < 1e-8);
    CHECK(std::abs(log_evidence(model, p.msgs) - oracle.log_evidence()) < 1e-8);
  }
}

TEST_CASE("the factor diagonal of B never drops below one") {
  Rng rng(12);
  for (int trial = 0; trial < 30; ++trial) {
    int n = 2 + static_cast<int>(rng.next_u64() % 12);
    RandomProblem p(rng, n);
    GpTopicModel model = fit(p.spec, p.features, p.msgs);
    CHECK(model.min_factor_diagonal() >= 1.0 - 1e-9);
    CHECK(model.log_det_b() >= 0.0);
  }
}

TEST_CASE("posterior variance never exceeds the prior variance") {
  Rng rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    RandomProblem p(rng, 8);
    GpTopicModel model = fit(p.spec, p.features, p.msgs);
    for (int i = 0; i < 12; ++i) {
      QueryPoint q = QueryPoint::at(Eigen::Vector2d(12.0 * rng.uniform() - 1.0,
                                                    static_cast<double>(i % 3)));
      auto [mean, var] = predict(model, q);
      (void)mean;
      CHECK(var > 0.0);
      CHECK(var <= kernel_self(p.spec, *p.features, q) * (1.0 + 1e-12));
    }
  }
}

TEST_CASE("interpolation limit: tiny message variance pins the posterior mean") {
  Rng rng(15);
  // Well-separated inputs: conflicting messages at near-duplicate inputs
  // would rightly average instead of interpolating.
  Eigen::MatrixXd phi(5, 1);
  phi << 0.0, 2.5, 5.0, 7.5, 10.0;
  auto features = std::make_shared<FeatureSpace>(FeatureSpace::euclidean(phi));
  KernelSpec spec = KernelSpec::rational_quadratic(1.0, 1.0, 1.0, 1.0);
  Eigen::VectorXd means = test::random_vector(rng, 5, 1.0);
  GaussianMessages msgs(means, Eigen::VectorXd::Constant(5, 1e-8), 0.0);
  GpTopicModel model = fit(spec, features, msgs);
  for (int i = 0; i < 5; ++i) {
    auto [mean, var] = predict(model, QueryPoint::row(i));
    (void)var;
    CHECK(std::abs(mean - means[i]) < 1e-6);
  }
}

TEST_CASE("log evidence closed case: identity kernel matrix, unit messages") {
  // Inputs far apart with a tiny length scale make the off-diagonal kernel
  // terms numerically zero, so H = I up to 1e-16 per entry.
  const int n = 7;
  Eigen::MatrixXd phi(n, 1);
  for (int i = 0; i < n; ++i) phi(i, 0) = static_cast<double>(i) * 1e8;
  auto features = std::make_shared<FeatureSpace>(FeatureSpace::euclidean(phi));
  KernelSpec spec = KernelSpec::rational_quadratic(1.0, 1.0, 1.0, 1.0);
  GaussianMessages msgs(Eigen::VectorXd::Zero(n), Eigen::VectorXd::Ones(n), 0.0);
  JitterPolicy no_jitter{0.0, 10.0, 1e-4};
  GpTopicModel model = fit(spec, features, msgs, no_jitter);
  CHECK(std::abs(log_evidence(model, msgs) + 3.5 * std::log(2.0)) < 1e-12);
}

TEST_CASE("zero means drop the quadratic term") {
  Rng rng(21);
  RandomProblem p(rng, 6);
  GaussianMessages zero_means(Eigen::VectorXd::Zero(6), p.msgs.variances, 0.0);
  GpTopicModel model = fit(p.spec, p.features, zero_means);
  double expected =
      0.5 * (zero_means.precisions.array().log().sum() - model.log_det_b());
  CHECK(log_evidence(model, zero_means) == doctest::Approx(expected).epsilon(1e-14));
  CHECK(model.log_det_b() >= 0.0);  // all eigenvalues of B are >= 1
}

TEST_CASE("evidence gradient matches central finite differences") {
  Rng rng(33);
  for (int trial = 0; trial < 20; ++trial) {
    int n = 3 + static_cast<int>(rng.next_u64() % 8);
    RandomProblem p(rng, n);
    GpTopicModel model = fit(p.spec, p.features, p.msgs);
    Eigen::VectorXd grad = evidence_gradient(model, p.msgs, p.hypers);

    std::vector<TopicMessages> topics = {
        TopicMessages{p.msgs.means,
                      p.msgs.variances.array() - p.msgs.tau * p.msgs.tau}};
    Eigen::VectorXd fd =
        test::evidence_fd_gradient(p.spec, p.features, topics, p.hypers, {});
    for (Eigen::Index j = 0; j < grad.size(); ++j) {
      double tol = 1e-5 * std::max({std::abs(fd[j]), std::abs(grad[j]), 1e-3});
      CHECK(std::abs(grad[j] - fd[j]) <= tol);
    }
  }
}

TEST_CASE("a parameter the kernel ignores has zero gradient") {
  Rng rng(35);
  // One feature column only: the author mismatch term never fires.
  Eigen::MatrixXd phi(6, 1);
  for (int i = 0; i < 6; ++i) phi(i, 0) = rng.uniform() * 5.0;
  auto features = std::make_shared<FeatureSpace>(FeatureSpace::euclidean(phi));
  KernelSpec spec = KernelSpec::rational_quadratic(1.0, 2.0, 1.0, 3.0);
  GaussianMessages msgs(test::random_vector(rng, 6, 1.0),
                        Eigen::VectorXd::Constant(6, 0.2), 0.5);
  GpTopicModel model = fit(spec, features, msgs);
  Hyperparameters hypers = Hyperparameters::from(spec, 0.5);
  Eigen::VectorXd grad = evidence_gradient(model, msgs, hypers);
  CHECK(std::abs(grad[3]) == 0.0);  // author_mismatch_distance
}

TEST_CASE("tau gradient is negative when tau is inflated past the residuals") {
  Rng rng(37);
  const int n = 20;
  Eigen::MatrixXd phi(n, 1);
  for (int i = 0; i < n; ++i) phi(i, 0) = 10.0 * (i + 0.5) / n;
  auto features = std::make_shared<FeatureSpace>(FeatureSpace::euclidean(phi));
  KernelSpec spec = KernelSpec::rational_quadratic(1.0, 2.0, 1.0, 1.0);

  // Noise-free function values from the prior itself.
  Gram g = gram(spec, *features, all_rows(*features));
  Eigen::MatrixXd cov = g.k;
  cov.diagonal().array() += 1e-10;
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  Eigen::VectorXd f = llt.matrixL() * test::random_vector(rng, n, 1.0);

  const double tau = 1.0;  // far above the true residual scale
  GaussianMessages msgs(f, Eigen::VectorXd::Constant(n, 1e-4), tau);
  GpTopicModel model = fit(spec, features, msgs);
  Hyperparameters hypers = Hyperparameters::from(spec, tau);
  Eigen::VectorXd grad = evidence_gradient(model, msgs, hypers);
  CHECK(grad[grad.size() - 1] < 0.0);

  std::vector<TopicMessages> topics = {
      TopicMessages{f, Eigen::VectorXd::Constant(n, 1e-4)}};
  Eigen::VectorXd fd = test::evidence_fd_gradient(spec, features, topics, hypers, {});
  CHECK(fd[fd.size() - 1] < 0.0);
}

TEST_CASE("hyperparameter optimization: trace is non-decreasing and improves") {
  Rng rng(41);
  const int n = 25;
  Eigen::MatrixXd phi(n, 1);
  for (int i = 0; i < n; ++i) phi(i, 0) = 8.0 * (i + 0.5) / n;
  auto features = std::make_shared<FeatureSpace>(FeatureSpace::euclidean(phi));
  KernelSpec truth = KernelSpec::rational_quadratic(1.5, 1.0, 1.0, 1.0);
  Gram g = gram(truth, *features, all_rows(*features));
  Eigen::MatrixXd cov = g.k;
  cov.diagonal().array() += 1e-10;
  Eigen::LLT<Eigen::MatrixXd> llt(cov);

  std::vector<TopicMessages> topics;
  for (int t = 0; t < 3; ++t) {
    Eigen::VectorXd f = llt.matrixL() * test::random_vector(rng, n, 1.0);
    topics.push_back(TopicMessages{f, Eigen::VectorXd::Constant(n, 0.05)});
  }

  KernelSpec start = KernelSpec::rational_quadratic(0.5, 3.0, 1.0, 1.0);
  Hyperparameters hypers = Hyperparameters::from(start, 0.8);
  HyperOptReport report = optimize_hypers(start, features, topics, hypers, 25);

  REQUIRE(report.log_z_trace.size() >= 2);
  for (size_t i = 1; i < report.log_z_trace.size(); ++i) {
    CHECK(report.log_z_trace[i] >= report.log_z_trace[i - 1]);
  }
  CHECK(report.log_z_trace.back() > report.log_z_trace.front());

  // Re-running from the optimum barely moves.
  Hyperparameters again = hypers;
  HyperOptReport second = optimize_hypers(start, features, topics, again, 40);
  CHECK(second.log_z_trace.back() - second.log_z_trace.front() <
        0.01 * (report.log_z_trace.back() - report.log_z_trace.front()) + 1e-6);
}

TEST_CASE("length-scale recovery within a factor of two (median over seeds)") {
  const double true_scale = 2.0;
  std::vector<double> recovered;
  for (int seed = 0; seed < 10; ++seed) {
    Rng rng(100 + static_cast<std::uint64_t>(seed));
    const int n = 40;
    Eigen::MatrixXd phi(n, 1);
    for (int i = 0; i < n; ++i) phi(i, 0) = 12.0 * rng.uniform();
    auto features = std::make_shared<FeatureSpace>(FeatureSpace::euclidean(phi));
    KernelSpec truth = KernelSpec::rational_quadratic(1.0, true_scale, 1.0, 1.0);
    Gram g = gram(truth, *features, all_rows(*features));
    Eigen::MatrixXd cov = g.k;
    cov.diagonal().array() += 1e-10;
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    std::vector<TopicMessages> topics;
    for (int t = 0; t < 2; ++t) {
      Eigen::VectorXd f = llt.matrixL() * test::random_vector(rng, n, 1.0);
      topics.push_back(TopicMessages{f, Eigen::VectorXd::Constant(n, 0.01)});
    }
    KernelSpec start = KernelSpec::rational_quadratic(1.0, 0.5, 1.0, 1.0);
    Hyperparameters hypers = Hyperparameters::from(start, 0.3);
    optimize_hypers(start, features, topics, hypers, 40);
    recovered.push_back(hypers.apply(start).length_scale);
  }
  std::sort(recovered.begin(), recovered.end());
  double median = 0.5 * (recovered[4] + recovered[5]);
  CHECK(median >= true_scale / 2.0);
  CHECK(median <= true_scale * 2.0);
}

TEST_CASE("factorization diagnostics surface in errors") {
  // A 1x1 problem cannot fail, but the unfitted-model guard must hold.
  GpTopicModel empty;
  Eigen::VectorXd q(1);
  q << 0.0;
  CHECK_THROWS_AS(predict(empty, QueryPoint::at(q)), Error);
}
