#pragma once

#include "ktm/rng.hpp"

#include <Eigen/Core>

#include <functional>

namespace ktm {

using LogLikFn = std::function<double(const Eigen::VectorXd&)>;

// One elliptical slice sampling transition for a posterior
// prior N(mean, L L') x exp(log_lik). No free parameters; the bracket
// shrinkage guarantees termination. prior_cov_factor is the lower-triangular
// Cholesky factor of the prior covariance.
Eigen::VectorXd ess_sample(const LogLikFn& log_lik, const Eigen::VectorXd& prior_mean,
                           const Eigen::MatrixXd& prior_cov_factor,
                           const Eigen::VectorXd& current, Rng& rng);

}  // namespace ktm
