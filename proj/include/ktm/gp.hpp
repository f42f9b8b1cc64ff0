#pragma once

#include "ktm/kernels.hpp"

#include <Eigen/Core>

#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace ktm {

// Per-topic Gaussian messages from the bridge: means and variances of the
// approximate Gaussian beliefs over y_dk, with the observation noise tau^2
// folded into the variances.
struct GaussianMessages {
  Eigen::VectorXd means;
  Eigen::VectorXd variances;                  // sigma^2 + tau^2
  Eigen::VectorXd precisions;                 // zeta = 1 / variances
  Eigen::VectorXd precision_adjusted_means;   // zeta .* means
  double tau = 0.0;

  GaussianMessages(Eigen::VectorXd means, const Eigen::VectorXd& bridge_variances,
                   double tau);

  int size() const { return static_cast<int>(means.size()); }
};

// Relative to the mean diagonal of the train kernel matrix.
struct JitterPolicy {
  double initial = 1e-10;
  double growth = 10.0;
  double max = 1e-4;
};

// Log-domain kernel parameters plus log tau, the layout used by
// evidence_gradient and optimize_hypers.
struct Hyperparameters {
  Eigen::VectorXd log_kernel_params;
  double log_tau = 0.0;

  static Hyperparameters from(const KernelSpec& spec, double tau);

  double tau() const;
  KernelSpec apply(KernelSpec base) const;
  int size() const { return static_cast<int>(log_kernel_params.size()) + 1; }
  Eigen::VectorXd stacked() const;  // kernel params then log tau
};

struct SitePredictions;

// Immutable fitted state of one topic's GP: Cholesky factor of
// B = I + S^{1/2} H S^{1/2} and the prediction weights (H + S^{-1})^{-1} mu.
class GpTopicModel {
public:
  GpTopicModel() = default;

  bool fitted() const { return fitted_; }
  const KernelSpec& kernel() const { return kernel_; }
  const std::vector<int>& train_rows() const { return train_rows_; }
  const std::shared_ptr<const FeatureSpace>& features() const { return features_; }
  double jitter_used() const { return jitter_used_; }
  double log_det_b() const { return log_det_b_; }
  // Smallest diagonal entry of the Cholesky factor of B; at least 1 up to
  // roundoff, since every eigenvalue of B is.
  double min_factor_diagonal() const { return chol_b_.diagonal().minCoeff(); }

  friend GpTopicModel fit(const KernelSpec&, std::shared_ptr<const FeatureSpace>,
                          const GaussianMessages&, const JitterPolicy&,
                          const std::vector<int>&);
  friend std::pair<double, double> predict(const GpTopicModel&, const QueryPoint&);
  friend double log_evidence(const GpTopicModel&, const GaussianMessages&);
  friend Eigen::VectorXd evidence_gradient(const GpTopicModel&, const GaussianMessages&,
                                           const Hyperparameters&);
  friend SitePredictions loo_site_predictions(const GpTopicModel&,
                                              const GaussianMessages&);

private:
  KernelSpec kernel_;
  std::shared_ptr<const FeatureSpace> features_;
  std::vector<int> train_rows_;
  Eigen::MatrixXd chol_b_;           // lower factor of B
  Eigen::VectorXd sqrt_precisions_;
  Eigen::VectorXd weights_;          // (H + S^{-1})^{-1} mu
  double jitter_used_ = 0.0;
  double log_det_b_ = 0.0;
  bool fitted_ = false;
};

// Heteroscedastic-noise GP solve: factorizes B = I + S^{1/2} H S^{1/2}
// (all eigenvalues >= 1) with the jitter policy applied to H on failure.
GpTopicModel fit(const KernelSpec& kernel, std::shared_ptr<const FeatureSpace> features,
                 const GaussianMessages& msgs, const JitterPolicy& jitter = {},
                 const std::vector<int>& subset = {});

// Posterior mean and marginal variance at a query point; the variance never
// exceeds the prior variance at that point.
std::pair<double, double> predict(const GpTopicModel& model, const QueryPoint& query);

// log Z = 1/2 [ log|S| - log|B| - mu' S^{1/2} B^{-1} S^{1/2} mu ], evaluated
// through the cached factorization.
double log_evidence(const GpTopicModel& model, const GaussianMessages& msgs);

// Leave-one-out site predictions: mean and variance of h at each training
// input given every message except that input's own. This is the downward
// message of the message-passing view; using the full posterior instead
// would echo each site's own belief back at it.
struct SitePredictions {
  Eigen::VectorXd means;
  Eigen::VectorXd variances;  // of h, observation noise excluded
};

SitePredictions loo_site_predictions(const GpTopicModel& model,
                                     const GaussianMessages& msgs);

// Gradient of log_evidence in the log-parameter domain, ordered as the
// kernel's param_names followed by log tau.
Eigen::VectorXd evidence_gradient(const GpTopicModel& model, const GaussianMessages& msgs,
                                  const Hyperparameters& hypers);

// Raw per-topic message data, tau excluded, as produced by the bridge.
struct TopicMessages {
  Eigen::VectorXd means;
  Eigen::VectorXd bridge_variances;
};

struct HyperOptReport {
  std::vector<double> log_z_trace;  // initial value plus one entry per accepted step
  int steps_accepted = 0;
  int rejections = 0;
  bool aborted = false;
  std::string message;
};

// Gradient ascent with backtracking line search on the summed per-topic log
// evidence. Updates hypers in place and never leaves them worse than the
// input; the trace is non-decreasing.
HyperOptReport optimize_hypers(const KernelSpec& base,
                               std::shared_ptr<const FeatureSpace> features,
                               const std::vector<TopicMessages>& topic_msgs,
                               Hyperparameters& hypers, int steps,
                               const JitterPolicy& jitter = {},
                               const std::vector<int>& subset = {});

}  // namespace ktm
