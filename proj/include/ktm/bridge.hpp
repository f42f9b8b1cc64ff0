#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <utility>

namespace ktm {

// Dirichlet belief over K topic proportions.
struct DirichletBelief {
  Eigen::VectorXd alpha;

  explicit DirichletBelief(Eigen::VectorXd a);

  int dim() const { return static_cast<int>(alpha.size()); }
  double total() const { return alpha.sum(); }
};

// Independent Gaussian belief over the softmax-basis coordinates.
struct GaussianBelief {
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;

  GaussianBelief(Eigen::VectorXd mu, Eigen::VectorXd var);

  int dim() const { return static_cast<int>(mean.size()); }
};

// Full K x K inverse Hessian of the softmax-basis Dirichlet at its mode, in
// the limit where the sum-constraint measure becomes a point mass. Exposed
// for testing; the engine propagates only the diagonal.
struct FullBridgeCovariance {
  Eigen::MatrixXd matrix;
};

struct BridgeStats {
  std::uint64_t clamped = 0;
};

constexpr double kDefaultAlphaFloor = 1e-8;

// Overflow-safe softmax (max subtraction).
Eigen::VectorXd softmax(const Eigen::VectorXd& y);

// Laplace fit of the Dirichlet in the softmax basis: mean is the mode
//   mu_k = log(alpha_k) - mean_l log(alpha_l),
// variance the diagonal of the inverse Hessian
//   var_k = (1 - 2/K) / alpha_k + (1/K^2) sum_l 1/alpha_l.
// Valid only for K > 2; the 2D case maps to the real line instead
// (beta_to_gaussian_2d).
GaussianBelief dirichlet_to_gaussian(const DirichletBelief& d);

// Inverse of the map above:
//   alpha_k = (1 - 2/K + (e^{mu_k}/K^2) sum_l e^{-mu_l}) / var_k.
// Exact round trip with dirichlet_to_gaussian. Non-finite or non-positive
// results (extreme mean spread with tiny variance) are clamped to
// alpha_floor; each clamp increments stats->clamped when stats is given.
DirichletBelief gaussian_to_dirichlet(const GaussianBelief& g,
                                      double alpha_floor = kDefaultAlphaFloor,
                                      BridgeStats* stats = nullptr);

// Full inverse Hessian,
//   inv(L)_kl = delta_kl / alpha_k
//             - (1/K) [1/alpha_k + 1/alpha_l - (1/K) sum_u 1/alpha_u].
// The diagonal reproduces dirichlet_to_gaussian variances bit for bit.
FullBridgeCovariance full_inverse_hessian(const DirichletBelief& d);

// K = 2 special case: Laplace fit of Beta(a, b) in the logit basis.
// Returns (mu, var) = (log(a/b), 1/a + 1/b).
std::pair<double, double> beta_to_gaussian_2d(double a, double b);

}  // namespace ktm
