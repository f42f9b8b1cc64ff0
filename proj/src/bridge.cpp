#include "ktm/bridge.hpp"

#include "ktm/errors.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace ktm {

namespace {

bool all_finite(const Eigen::VectorXd& v) { return v.allFinite(); }

// Shared between dirichlet_to_gaussian and full_inverse_hessian so the
// diagonal matches bit for bit.
double variance_entry(double inv_alpha_k, double inv_alpha_sum, double k) {
  return inv_alpha_k * (1.0 - 2.0 / k) + inv_alpha_sum / (k * k);
}

}  // namespace

DirichletBelief::DirichletBelief(Eigen::VectorXd a) : alpha(std::move(a)) {
  require(alpha.size() >= 2, ErrorCode::dimension,
          "DirichletBelief needs K >= 2, got K = " + std::to_string(alpha.size()));
  for (Eigen::Index i = 0; i < alpha.size(); ++i) {
    require(std::isfinite(alpha[i]) && alpha[i] > 0.0, ErrorCode::invalid_argument,
            "Dirichlet parameters must be positive and finite");
  }
}

GaussianBelief::GaussianBelief(Eigen::VectorXd mu, Eigen::VectorXd var)
    : mean(std::move(mu)), variance(std::move(var)) {
  require(mean.size() == variance.size(), ErrorCode::dimension,
          "GaussianBelief mean/variance size mismatch");
  require(all_finite(mean), ErrorCode::invalid_argument,
          "GaussianBelief mean must be finite");
  for (Eigen::Index i = 0; i < variance.size(); ++i) {
    require(std::isfinite(variance[i]) && variance[i] > 0.0, ErrorCode::invalid_argument,
            "GaussianBelief variances must be positive and finite");
  }
}

Eigen::VectorXd softmax(const Eigen::VectorXd& y) {
  require(y.size() > 0 && all_finite(y), ErrorCode::invalid_argument,
          "softmax input must be non-empty and finite");
  Eigen::VectorXd shifted = (y.array() - y.maxCoeff()).exp();
  return shifted / shifted.sum();
}

GaussianBelief dirichlet_to_gaussian(const DirichletBelief& d) {
  const int k = d.dim();
  require(k > 2, ErrorCode::dimension,
          "dirichlet_to_gaussian needs K > 2; use beta_to_gaussian_2d for K = 2");

  Eigen::VectorXd log_alpha = d.alpha.array().log();
  Eigen::VectorXd mean = log_alpha.array() - log_alpha.mean();

  Eigen::VectorXd inv_alpha = d.alpha.array().inverse();
  const double inv_sum = inv_alpha.sum();
  const double kd = static_cast<double>(k);
  Eigen::VectorXd variance(k);
  for (int i = 0; i < k; ++i) {
    variance[i] = variance_entry(inv_alpha[i], inv_sum, kd);
  }
  return GaussianBelief(std::move(mean), std::move(variance));
}

DirichletBelief gaussian_to_dirichlet(const GaussianBelief& g, double alpha_floor,
                                      BridgeStats* stats) {
  const int k = g.dim();
  require(k > 2, ErrorCode::dimension,
          "gaussian_to_dirichlet needs K > 2; use beta_to_gaussian_2d for K = 2");
  require(alpha_floor > 0.0, ErrorCode::invalid_argument, "alpha_floor must be positive");

  const double kd = static_cast<double>(k);
  // exp(mu_k) * sum_l exp(-mu_l) evaluated as exp(mu_k + lse(-mu)) to keep
  // large mean spreads from overflowing prematurely.
  const double neg_max = (-g.mean).maxCoeff();
  const double lse_neg = neg_max + std::log((-g.mean.array() - neg_max).exp().sum());

  Eigen::VectorXd alpha(k);
  for (int i = 0; i < k; ++i) {
    double cross = std::exp(g.mean[i] + lse_neg) / (kd * kd);
    double a = (1.0 - 2.0 / kd + cross) / g.variance[i];
    if (!std::isfinite(a) || a <= 0.0) {
      a = alpha_floor;
      if (stats != nullptr) ++stats->clamped;
    }
    alpha[i] = a;
  }
  return DirichletBelief(std::move(alpha));
}

FullBridgeCovariance full_inverse_hessian(const DirichletBelief& d) {
  const int k = d.dim();
  require(k > 2, ErrorCode::dimension, "full_inverse_hessian needs K > 2");

  Eigen::VectorXd inv_alpha = d.alpha.array().inverse();
  const double inv_sum = inv_alpha.sum();
  const double kd = static_cast<double>(k);

  Eigen::MatrixXd m(k, k);
  for (int r = 0; r < k; ++r) {
    for (int c = 0; c < r; ++c) {
      double v = -(inv_alpha[r] + inv_alpha[c] - inv_sum / kd) / kd;
      m(r, c) = v;
      m(c, r) = v;
    }
    m(r, r) = variance_entry(inv_alpha[r], inv_sum, kd);
  }
  return FullBridgeCovariance{std::move(m)};
}

std::pair<double, double> beta_to_gaussian_2d(double a, double b) {
  require(std::isfinite(a) && a > 0.0 && std::isfinite(b) && b > 0.0,
          ErrorCode::invalid_argument, "beta_to_gaussian_2d needs positive a, b");
  return {std::log(a / b), 1.0 / a + 1.0 / b};
}

}  // namespace ktm
