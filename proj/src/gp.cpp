#include "ktm/gp.hpp"

#include "ktm/errors.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <cassert>
#include <cmath>
#include <limits>
#include <string>

namespace ktm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::VectorXd cross_covariance(const GpTopicModel& model, const QueryPoint& q) {
  const auto& rows = model.train_rows();
  Eigen::VectorXd k(static_cast<Eigen::Index>(rows.size()));
  for (size_t i = 0; i < rows.size(); ++i) {
    k[static_cast<Eigen::Index>(i)] =
        kernel_query(model.kernel(), *model.features(), q, rows[i]);
  }
  return k;
}

}  // namespace

GaussianMessages::GaussianMessages(Eigen::VectorXd means_in,
                                   const Eigen::VectorXd& bridge_variances,
                                   double tau_in)
    : means(std::move(means_in)), tau(tau_in) {
  require(means.size() == bridge_variances.size(), ErrorCode::dimension,
          "message mean/variance size mismatch");
  require(std::isfinite(tau) && tau >= 0.0, ErrorCode::invalid_argument,
          "tau must be finite and non-negative");
  require(means.allFinite(), ErrorCode::invalid_argument, "message means must be finite");
  variances = bridge_variances.array() + tau * tau;
  for (Eigen::Index i = 0; i < variances.size(); ++i) {
    require(std::isfinite(variances[i]) && variances[i] > 0.0, ErrorCode::invalid_argument,
            "message variances must be positive and finite");
  }
  precisions = variances.array().inverse();
  precision_adjusted_means = precisions.array() * means.array();
}

Hyperparameters Hyperparameters::from(const KernelSpec& spec, double tau) {
  require(std::isfinite(tau) && tau > 0.0, ErrorCode::invalid_argument,
          "tau must be positive");
  Hyperparameters h;
  h.log_kernel_params = spec.log_params();
  h.log_tau = std::log(tau);
  return h;
}

double Hyperparameters::tau() const { return std::exp(log_tau); }

KernelSpec Hyperparameters::apply(KernelSpec base) const {
  base.set_log_params(log_kernel_params);
  return base;
}

Eigen::VectorXd Hyperparameters::stacked() const {
  Eigen::VectorXd out(size());
  out.head(log_kernel_params.size()) = log_kernel_params;
  out[out.size() - 1] = log_tau;
  return out;
}

GpTopicModel fit(const KernelSpec& kernel, std::shared_ptr<const FeatureSpace> features,
                 const GaussianMessages& msgs, const JitterPolicy& jitter,
                 const std::vector<int>& subset) {
  require(features != nullptr, ErrorCode::invalid_argument, "fit needs a feature space");
  std::vector<int> rows = subset.empty() ? all_rows(*features) : subset;
  require(static_cast<int>(rows.size()) == msgs.size(), ErrorCode::dimension,
          "message count does not match training rows");

  Gram g = gram(kernel, *features, rows, /*with_derivatives=*/false);
  const double mean_diag = g.k.diagonal().mean();
  Eigen::VectorXd sqrt_prec = msgs.precisions.array().sqrt();

  double jit = jitter.initial * mean_diag;
  const double jit_max = jitter.max * mean_diag;
  Eigen::MatrixXd b;
  Eigen::LLT<Eigen::MatrixXd> llt;
  for (;;) {
    Eigen::MatrixXd h = g.k;
    h.diagonal().array() += jit;
    b = sqrt_prec.asDiagonal() * h * sqrt_prec.asDiagonal();
    b.diagonal().array() += 1.0;
    b = 0.5 * (b + b.transpose()).eval();
    llt.compute(b);
    if (llt.info() == Eigen::Success) break;
    // A zero starting jitter escalates from the standard base instead of
    // multiplying zero forever.
    jit = jit == 0.0 ? 1e-10 * mean_diag : jit * jitter.growth;
    if (jit > jit_max || jit == 0.0) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(b, Eigen::EigenvaluesOnly);
      double min_eig = es.info() == Eigen::Success ? es.eigenvalues().minCoeff()
                                                   : std::nan("");
      fail(ErrorCode::numerical,
           "GP factorization failed at maximum jitter " + std::to_string(jit_max) +
               "; smallest eigenvalue estimate " + std::to_string(min_eig));
    }
  }

  GpTopicModel model;
  model.kernel_ = kernel;
  model.features_ = std::move(features);
  model.train_rows_ = std::move(rows);
  model.chol_b_ = llt.matrixL();
  model.sqrt_precisions_ = std::move(sqrt_prec);
  model.jitter_used_ = jit;
  model.log_det_b_ = 2.0 * model.chol_b_.diagonal().array().log().sum();
  // All eigenvalues of B are >= 1, which pins the factor diagonal too.
  assert(model.chol_b_.diagonal().minCoeff() >= 1.0 - 1e-9);

  Eigen::VectorXd scaled = model.sqrt_precisions_.array() * msgs.means.array();
  Eigen::VectorXd solved = model.chol_b_.triangularView<Eigen::Lower>().solve(scaled);
  model.chol_b_.triangularView<Eigen::Lower>().transpose().solveInPlace(solved);
  model.weights_ = model.sqrt_precisions_.array() * solved.array();
  model.fitted_ = true;
  return model;
}

std::pair<double, double> predict(const GpTopicModel& model, const QueryPoint& query) {
  require(model.fitted(), ErrorCode::invalid_state, "predict needs a fitted model");
  Eigen::VectorXd k = cross_covariance(model, query);
  const double prior = kernel_self(model.kernel(), *model.features(), query);

  double mean = k.dot(model.weights_);
  Eigen::VectorXd v = model.chol_b_.triangularView<Eigen::Lower>().solve(
      (model.sqrt_precisions_.array() * k.array()).matrix());
  double variance = prior - v.squaredNorm();
  // Guard against cancellation at near-interpolation queries.
  variance = std::max(variance, 1e-15 * prior);
  return {mean, variance};
}

double log_evidence(const GpTopicModel& model, const GaussianMessages& msgs) {
  require(model.fitted(), ErrorCode::invalid_state, "log_evidence needs a fitted model");
  require(msgs.size() == static_cast<int>(model.train_rows_.size()), ErrorCode::dimension,
          "message count does not match fitted model");
  double log_det_s = msgs.precisions.array().log().sum();
  Eigen::VectorXd v = model.chol_b_.triangularView<Eigen::Lower>().solve(
      (model.sqrt_precisions_.array() * msgs.means.array()).matrix());
  return 0.5 * (log_det_s - model.log_det_b_ - v.squaredNorm());
}

SitePredictions loo_site_predictions(const GpTopicModel& model,
                                     const GaussianMessages& msgs) {
  require(model.fitted(), ErrorCode::invalid_state,
          "loo_site_predictions needs a fitted model");
  require(msgs.size() == static_cast<int>(model.train_rows_.size()), ErrorCode::dimension,
          "message count does not match fitted model");
  const Eigen::Index n = msgs.means.size();

  // diag(A^{-1}) with A = H + S^{-1}: column norms of L^{-1} rescaled.
  Eigen::MatrixXd inv_l = Eigen::MatrixXd::Identity(n, n);
  model.chol_b_.triangularView<Eigen::Lower>().solveInPlace(inv_l);
  Eigen::VectorXd b_inv_diag = inv_l.colwise().squaredNorm();
  Eigen::VectorXd a_inv_diag =
      msgs.precisions.array() * b_inv_diag.array();
  Eigen::VectorXd w = model.sqrt_precisions_.array() *
                      (inv_l.transpose() *
                       (inv_l * (model.sqrt_precisions_.array() * msgs.means.array())
                                    .matrix()))
                          .array();

  SitePredictions out;
  out.means = msgs.means.array() - w.array() / a_inv_diag.array();
  // var(y_d | rest) = 1 / [A^{-1}]_dd; subtracting the site's own noise
  // gives the h belief, clamped against cancellation.
  out.variances =
      (a_inv_diag.array().inverse() - msgs.variances.array()).max(1e-12);
  return out;
}

Eigen::VectorXd evidence_gradient(const GpTopicModel& model, const GaussianMessages& msgs,
                                  const Hyperparameters& hypers) {
  require(model.fitted(), ErrorCode::invalid_state,
          "evidence_gradient needs a fitted model");
  Gram g = gram(model.kernel(), *model.features(), model.train_rows_,
                /*with_derivatives=*/true);
  require(static_cast<int>(g.dk_dlog.size()) == hypers.log_kernel_params.size(),
          ErrorCode::dimension, "hyperparameter layout does not match kernel");

  // a_inv = (H + S^{-1})^{-1} = S^{1/2} B^{-1} S^{1/2}
  const Eigen::Index n = msgs.means.size();
  Eigen::MatrixXd b_inv = Eigen::MatrixXd::Identity(n, n);
  model.chol_b_.triangularView<Eigen::Lower>().solveInPlace(b_inv);
  model.chol_b_.triangularView<Eigen::Lower>().transpose().solveInPlace(b_inv);
  Eigen::MatrixXd a_inv = model.sqrt_precisions_.asDiagonal() * b_inv *
                          model.sqrt_precisions_.asDiagonal();
  Eigen::VectorXd w = a_inv * msgs.means;

  Eigen::VectorXd grad(hypers.size());
  for (Eigen::Index j = 0; j < hypers.log_kernel_params.size(); ++j) {
    const Eigen::MatrixXd& dh = g.dk_dlog[static_cast<size_t>(j)];
    grad[j] = 0.5 * (w.dot(dh * w) - a_inv.cwiseProduct(dh).sum());
  }
  // d(H + S^{-1}) / d(log tau) = 2 tau^2 I
  const double tau2 = msgs.tau * msgs.tau;
  grad[grad.size() - 1] = tau2 * (w.squaredNorm() - a_inv.trace());
  return grad;
}

HyperOptReport optimize_hypers(const KernelSpec& base,
                               std::shared_ptr<const FeatureSpace> features,
                               const std::vector<TopicMessages>& topic_msgs,
                               Hyperparameters& hypers, int steps,
                               const JitterPolicy& jitter,
                               const std::vector<int>& subset) {
  require(steps >= 1, ErrorCode::invalid_argument, "optimize_hypers needs steps >= 1");
  require(!topic_msgs.empty(), ErrorCode::invalid_argument,
          "optimize_hypers needs at least one topic");

  constexpr int kMaxRejections = 30;
  constexpr double kGradTol = 1e-10;

  auto objective = [&](const Hyperparameters& h, Eigen::VectorXd* grad_out) -> double {
    double total = 0.0;
    if (grad_out != nullptr) *grad_out = Eigen::VectorXd::Zero(h.size());
    KernelSpec spec;
    try {
      spec = h.apply(base);
    } catch (const Error&) {
      return -kInf;  // parameters overflowed out of the positive range
    }
    const double tau = h.tau();
    if (!std::isfinite(tau)) return -kInf;
    for (const auto& tm : topic_msgs) {
      try {
        GaussianMessages msgs(tm.means, tm.bridge_variances, tau);
        GpTopicModel model = fit(spec, features, msgs, jitter, subset);
        total += log_evidence(model, msgs);
        if (grad_out != nullptr) *grad_out += evidence_gradient(model, msgs, h);
      } catch (const Error& e) {
        // Overflowed parameters and failed factorizations both mean the
        // candidate step is unusable, not that the caller erred.
        if (e.code() == ErrorCode::numerical || e.code() == ErrorCode::invalid_argument) {
          return -kInf;
        }
        throw;
      }
    }
    return total;
  };

  HyperOptReport report;
  Eigen::VectorXd grad;
  double current = objective(hypers, &grad);
  require(std::isfinite(current), ErrorCode::numerical,
          "summed log evidence is not finite at the initial hyperparameters");
  report.log_z_trace.push_back(current);

  for (int step = 0; step < steps; ++step) {
    if (grad.lpNorm<Eigen::Infinity>() < kGradTol) {
      report.message = "converged: gradient below tolerance";
      return report;
    }
    double step_size = 1.0;
    int rejections = 0;
    Hyperparameters candidate = hypers;
    double value = -kInf;
    for (;;) {
      candidate.log_kernel_params =
          hypers.log_kernel_params + step_size * grad.head(grad.size() - 1);
      candidate.log_tau = hypers.log_tau + step_size * grad[grad.size() - 1];
      value = objective(candidate, nullptr);
      if (std::isfinite(value) && value > current) break;
      ++rejections;
      ++report.rejections;
      step_size *= 0.5;
      if (rejections >= kMaxRejections) {
        report.aborted = !std::isfinite(value);
        report.message = report.aborted
                             ? "aborted: no finite ascent step found"
                             : "stopped: line search exhausted without improvement";
        return report;
      }
    }
    hypers = candidate;
    current = value;
    ++report.steps_accepted;
    report.log_z_trace.push_back(current);
    current = objective(hypers, &grad);  // refresh gradient at the accepted point
  }
  report.message = "completed requested steps";
  return report;
}

}  // namespace ktm
