#include "ktm/ess.hpp"

#include "ktm/errors.hpp"

#include <cmath>

namespace ktm {

Eigen::VectorXd ess_sample(const LogLikFn& log_lik, const Eigen::VectorXd& prior_mean,
                           const Eigen::MatrixXd& prior_cov_factor,
                           const Eigen::VectorXd& current, Rng& rng) {
  const Eigen::Index n = current.size();
  require(prior_mean.size() == n && prior_cov_factor.rows() == n &&
              prior_cov_factor.cols() == n,
          ErrorCode::dimension, "ess_sample dimension mismatch");

  const double two_pi = 6.283185307179586476925286766559;

  double current_lik = log_lik(current);
  require(std::isfinite(current_lik), ErrorCode::invalid_state,
          "log likelihood is not finite at the current state");

  Eigen::VectorXd z(n);
  for (Eigen::Index i = 0; i < n; ++i) z[i] = rng.normal();
  Eigen::VectorXd nu = prior_cov_factor.triangularView<Eigen::Lower>() * z;

  const double threshold = current_lik + std::log(rng.uniform_pos());
  double theta = rng.uniform() * two_pi;
  double lo = theta - two_pi;
  double hi = theta;

  Eigen::VectorXd centered = current - prior_mean;
  for (;;) {
    Eigen::VectorXd proposal =
        prior_mean + centered * std::cos(theta) + nu * std::sin(theta);
    double lik = log_lik(proposal);
    if (std::isfinite(lik) && lik > threshold) return proposal;
    if (theta < 0.0) {
      lo = theta;
    } else {
      hi = theta;
    }
    theta = lo + rng.uniform() * (hi - lo);
  }
}

}  // namespace ktm
