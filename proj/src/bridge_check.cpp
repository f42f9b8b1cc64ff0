#include "ktm/bridge_check.hpp"

#include "ktm/bridge.hpp"
#include "ktm/errors.hpp"
#include "ktm/ess.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <thread>

namespace ktm {

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t x = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Orthonormal basis of the centered subspace {x : 1'x = 0}, as the trailing
// k-1 columns of a full QR of the ones vector.
Eigen::MatrixXd centered_basis(int k) {
  Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(k, 1);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(ones);
  Eigen::MatrixXd q = qr.householderQ();
  return q.rightCols(k - 1);
}

// Prior conditioned on the centering constraint 1'x = 0.
struct CenteredPrior {
  Eigen::VectorXd mean;            // in R^k, sums to zero
  Eigen::MatrixXd basis;           // k x (k-1)
  Eigen::MatrixXd subspace_factor; // lower Cholesky of basis' cov basis
};

CenteredPrior condition_on_centering(const Eigen::VectorXd& mean,
                                     const Eigen::MatrixXd& cov) {
  const int k = static_cast<int>(mean.size());
  Eigen::VectorXd cov_ones = cov.rowwise().sum();
  double total = cov_ones.sum();
  require(total > 0.0, ErrorCode::numerical, "prior covariance is degenerate");

  CenteredPrior prior;
  prior.mean = mean - cov_ones * (mean.sum() / total);
  prior.basis = centered_basis(k);
  Eigen::MatrixXd cov_c = cov - cov_ones * cov_ones.transpose() / total;
  Eigen::MatrixXd sub = prior.basis.transpose() * cov_c * prior.basis;
  sub = 0.5 * (sub + sub.transpose()).eval();
  sub.diagonal().array() += 1e-12 * sub.trace() / static_cast<double>(k - 1);
  Eigen::LLT<Eigen::MatrixXd> llt(sub);
  require(llt.info() == Eigen::Success, ErrorCode::numerical,
          "conditioned prior covariance is not positive definite");
  prior.subspace_factor = llt.matrixL();
  return prior;
}

Eigen::VectorXd observation_counts(const std::vector<int>& observations, int n, int k) {
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(k);
  for (int i = 0; i < n; ++i) {
    counts[observations[static_cast<size_t>(i)]] += 1.0;
  }
  return counts;
}

double log_sum_exp(const Eigen::VectorXd& x) {
  double m = x.maxCoeff();
  return m + std::log((x.array() - m).exp().sum());
}

}  // namespace

BridgeExperiment sample_bridge_experiment(int k, int max_obs, Rng& rng) {
  require(k > 2, ErrorCode::invalid_argument, "bridge experiment needs K > 2");
  require(max_obs >= 0, ErrorCode::invalid_argument, "max_obs must be non-negative");

  BridgeExperiment e;
  e.k = k;
  // Both inference routes start from the unit-scale prior; the experiment's
  // own mean and covariance below only shape the ground truth.
  e.prior_mean = Eigen::VectorXd::Zero(k);
  e.prior_cov = Eigen::MatrixXd::Identity(k, k);

  Eigen::VectorXd truth_mean(k);
  for (int i = 0; i < k; ++i) truth_mean[i] = rng.normal();
  truth_mean.array() -= truth_mean.mean();

  // Inverse Wishart(k + 2, I) via the Bartlett factor of the Wishart draw.
  const double dof = static_cast<double>(k) + 2.0;
  Eigen::MatrixXd bartlett = Eigen::MatrixXd::Zero(k, k);
  for (int i = 0; i < k; ++i) {
    bartlett(i, i) = std::sqrt(rng.chi_squared(dof - static_cast<double>(i)));
    for (int j = 0; j < i; ++j) bartlett(i, j) = rng.normal();
  }
  Eigen::MatrixXd inv_factor = Eigen::MatrixXd::Identity(k, k);
  bartlett.triangularView<Eigen::Lower>().solveInPlace(inv_factor);
  Eigen::MatrixXd truth_cov = inv_factor.transpose() * inv_factor;
  truth_cov = 0.5 * (truth_cov + truth_cov.transpose()).eval();

  CenteredPrior truth_prior = condition_on_centering(truth_mean, truth_cov);
  Eigen::VectorXd z(k - 1);
  for (int i = 0; i < k - 1; ++i) z[i] = rng.normal();
  e.ground_truth =
      truth_prior.mean +
      truth_prior.basis *
          (truth_prior.subspace_factor.triangularView<Eigen::Lower>() * z);

  Eigen::VectorXd pi = softmax(e.ground_truth);
  e.observations.reserve(static_cast<size_t>(max_obs));
  for (int i = 0; i < max_obs; ++i) {
    e.observations.push_back(rng.categorical(pi.data(), k));
  }
  return e;
}

std::vector<BridgeCheckRow> run_bridge_vs_mcmc(const BridgeExperiment& experiment,
                                               const std::vector<int>& n_obs_grid,
                                               int n_mcmc, std::uint64_t seed) {
  require(n_mcmc >= 1000, ErrorCode::invalid_argument, "run_bridge_vs_mcmc needs n_mcmc >= 1000");
  const int k = experiment.k;
  for (int n : n_obs_grid) {
    require(n >= 0 && n <= static_cast<int>(experiment.observations.size()),
            ErrorCode::invalid_argument, "observation grid exceeds experiment data");
  }

  CenteredPrior prior = condition_on_centering(experiment.prior_mean, experiment.prior_cov);
  const Eigen::VectorXd prior_diag = experiment.prior_cov.diagonal();

  std::vector<BridgeCheckRow> rows;
  rows.reserve(n_obs_grid.size());
  for (size_t gi = 0; gi < n_obs_grid.size(); ++gi) {
    const int n = n_obs_grid[gi];
    BridgeCheckRow row;
    row.n_obs = n;
    Eigen::VectorXd counts = observation_counts(experiment.observations, n, k);

    // Bridge pipeline: diagonal Gaussian prior -> Dirichlet -> conjugate
    // count update -> Gaussian. With no data the belief is the prior itself.
    if (n == 0) {
      row.bridge_err = (experiment.prior_mean - experiment.ground_truth).norm();
      row.bridge_sd = std::sqrt(prior_diag.sum());
    } else {
      GaussianBelief prior_belief(experiment.prior_mean, prior_diag);
      DirichletBelief dirichlet = gaussian_to_dirichlet(prior_belief);
      DirichletBelief posterior(dirichlet.alpha + counts);
      GaussianBelief updated = dirichlet_to_gaussian(posterior);
      row.bridge_err = (updated.mean - experiment.ground_truth).norm();
      row.bridge_sd = std::sqrt(updated.variance.sum());
    }

    // ESS on the exact centered posterior, parameterized in the subspace.
    const double n_d = static_cast<double>(n);
    LogLikFn log_lik = [&](const Eigen::VectorXd& z) {
      if (n == 0) return 0.0;
      Eigen::VectorXd x = prior.mean + prior.basis * z;
      return counts.dot(x) - n_d * log_sum_exp(x);
    };
    Rng rng(mix_seed(seed, gi));
    Eigen::VectorXd z = Eigen::VectorXd::Zero(k - 1);
    Eigen::VectorXd zero_mean = Eigen::VectorXd::Zero(k - 1);
    for (int i = 0; i < kEssBurnIn; ++i) {
      z = ess_sample(log_lik, zero_mean, prior.subspace_factor, z, rng);
    }
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(k - 1);
    Eigen::MatrixXd sum_outer = Eigen::MatrixXd::Zero(k - 1, k - 1);
    for (int i = 0; i < n_mcmc; ++i) {
      z = ess_sample(log_lik, zero_mean, prior.subspace_factor, z, rng);
      sum += z;
      sum_outer.selfadjointView<Eigen::Lower>().rankUpdate(z);
    }
    const double m = static_cast<double>(n_mcmc);
    Eigen::VectorXd z_mean = sum / m;
    Eigen::MatrixXd cov =
        (Eigen::MatrixXd(sum_outer.selfadjointView<Eigen::Lower>()) -
         m * z_mean * z_mean.transpose()) /
        (m - 1.0);
    Eigen::VectorXd x_mean = prior.mean + prior.basis * z_mean;
    row.mcmc_err = (x_mean - experiment.ground_truth).norm();
    row.mcmc_sd = std::sqrt(std::max(cov.trace(), 0.0));
    rows.push_back(row);
  }
  return rows;
}

std::vector<BridgeCheckRow> bridge_check(int k, const std::vector<int>& n_obs_grid,
                                         int repetitions, int n_mcmc,
                                         std::uint64_t seed, int threads) {
  require(repetitions >= 1, ErrorCode::invalid_argument, "repetitions must be >= 1");
  require(!n_obs_grid.empty(), ErrorCode::invalid_argument, "observation grid is empty");
  const int max_obs = *std::max_element(n_obs_grid.begin(), n_obs_grid.end());

  std::vector<std::vector<BridgeCheckRow>> per_rep(static_cast<size_t>(repetitions));
  auto run_rep = [&](int rep) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(rep)));
    BridgeExperiment experiment = sample_bridge_experiment(k, max_obs, rng);
    per_rep[static_cast<size_t>(rep)] = run_bridge_vs_mcmc(
        experiment, n_obs_grid, n_mcmc, mix_seed(seed, 0x10000u + static_cast<std::uint64_t>(rep)));
  };

  int workers = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::max(1, std::min(workers, repetitions));
  if (workers == 1) {
    for (int rep = 0; rep < repetitions; ++rep) run_rep(rep);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers));
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (int rep = w; rep < repetitions; rep += workers) run_rep(rep);
      });
    }
    for (auto& t : pool) t.join();
  }

  std::vector<BridgeCheckRow> mean_rows(n_obs_grid.size());
  for (size_t gi = 0; gi < n_obs_grid.size(); ++gi) {
    mean_rows[gi].n_obs = n_obs_grid[gi];
    for (int rep = 0; rep < repetitions; ++rep) {
      const auto& r = per_rep[static_cast<size_t>(rep)][gi];
      mean_rows[gi].bridge_err += r.bridge_err;
      mean_rows[gi].bridge_sd += r.bridge_sd;
      mean_rows[gi].mcmc_err += r.mcmc_err;
      mean_rows[gi].mcmc_sd += r.mcmc_sd;
    }
    const double inv = 1.0 / static_cast<double>(repetitions);
    mean_rows[gi].bridge_err *= inv;
    mean_rows[gi].bridge_sd *= inv;
    mean_rows[gi].mcmc_err *= inv;
    mean_rows[gi].mcmc_sd *= inv;
  }
  return mean_rows;
}

}  // namespace ktm
