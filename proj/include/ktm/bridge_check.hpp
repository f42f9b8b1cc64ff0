#pragma once

#include "ktm/rng.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <vector>

namespace ktm {

// One softmax-Gaussian-multinomial inference problem: a centered Gaussian
// prior over the softmax coordinates, a ground-truth draw from it, and
// category observations sampled through the softmax.
struct BridgeExperiment {
  int k = 10;
  Eigen::VectorXd prior_mean;     // centered: sums to zero
  Eigen::MatrixXd prior_cov;      // symmetric PSD
  Eigen::VectorXd ground_truth;   // centered draw from the prior
  std::vector<int> observations;  // category draws in [0, k)
};

// Prior mean from a centered standard Gaussian, covariance from an inverse
// Wishart with identity scale and k + 2 degrees of freedom, ground truth from
// the prior conditioned on the centering constraint.
BridgeExperiment sample_bridge_experiment(int k, int max_obs, Rng& rng);

struct BridgeCheckRow {
  int n_obs = 0;
  double bridge_err = 0.0;  // 2-norm of bridge mean estimate minus truth
  double bridge_sd = 0.0;   // sqrt of summed bridge variances
  double mcmc_err = 0.0;    // 2-norm of ESS sample mean minus truth
  double mcmc_sd = 0.0;     // sqrt of the unbiased sample covariance trace
};

constexpr int kEssBurnIn = 1000;

// Compares the conjugate-count bridge pipeline against elliptical slice
// sampling on the exact centered posterior, for each observation count in
// the grid. n_mcmc is the number of kept samples (after kEssBurnIn).
std::vector<BridgeCheckRow> run_bridge_vs_mcmc(const BridgeExperiment& experiment,
                                               const std::vector<int>& n_obs_grid,
                                               int n_mcmc, std::uint64_t seed);

// Averages run_bridge_vs_mcmc over independently sampled experiments.
// Repetitions run in parallel, capped at `threads` workers (0 = hardware).
std::vector<BridgeCheckRow> bridge_check(int k, const std::vector<int>& n_obs_grid,
                                         int repetitions, int n_mcmc,
                                         std::uint64_t seed, int threads = 0);

}  // namespace ktm
