#pragma once

#include "ktm/bridge.hpp"
#include "ktm/corpus.hpp"
#include "ktm/gp.hpp"
#include "ktm/kernels.hpp"
#include "ktm/vlda.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace ktm {

struct TrainConfig {
  int topics = 10;
  int max_sweeps = 30;
  int hyperopt_every = 10;   // sweeps between hyperparameter optimizations
  int hyperopt_steps = 15;
  double beta = 0.1;
  int passes_per_doc = 1;
  std::uint64_t seed = 0;
  JitterPolicy jitter;
  double alpha_floor = kDefaultAlphaFloor;
  double initial_tau = 1.0;
  // With the GP disabled the document priors stay at the fixed symmetric
  // value and the pipeline reduces to plain collapsed variational LDA.
  bool use_gp = true;
  double fixed_prior_alpha = 1.0;
  int threads = 0;  // 0 = hardware concurrency

  void validate() const;
};

struct ModelState {
  TrainConfig config;
  KernelSpec kernel;
  std::shared_ptr<const FeatureSpace> features;
  TopicWordModel topic_word;
  std::vector<GpTopicModel> gps;             // one per topic (empty when GP off)
  std::vector<TopicMessages> messages;       // one per topic
  Eigen::MatrixXd doc_alpha;                 // D x K posterior Dirichlet parameters
  Hyperparameters hypers;
  int sweep_index = 0;
  std::vector<double> perplexity_trace;      // one entry per completed sweep
  BridgeStats bridge_stats;

  int num_topics() const { return topic_word.num_topics(); }
  int num_docs() const { return static_cast<int>(doc_alpha.rows()); }
  Eigen::MatrixXd theta() const { return expected_topic_word(topic_word); }
  // Posterior mean topic proportions per document.
  Eigen::MatrixXd doc_pi() const;
};

// Alternates document sweeps, bridge conversions, per-topic GP refits and
// periodic hyperparameter optimization. Deterministic given config.seed.
ModelState train(const Corpus& corpus, std::shared_ptr<const FeatureSpace> features,
                 const KernelSpec& kernel, const TrainConfig& config);

struct TopicPrediction {
  Eigen::VectorXd probabilities;  // softmax of the predicted means
  Eigen::VectorXd y_mean;         // per-topic predicted means
  Eigen::VectorXd y_variance;     // per-topic variances in the softmax basis
};

TopicPrediction predict_topics(const ModelState& state, const QueryPoint& query);

// Perplexity of a corpus under the model: per-document proportions are
// inferred by fold-in passes against the frozen topic-word model.
double evaluate_perplexity(const ModelState& state, const Corpus& corpus,
                           int fold_in_passes = 20);

// Perplexity of held-out tokens using the trained per-document beliefs
// (corpus must be document-aligned with the training corpus).
double holdout_perplexity(const ModelState& state, const Corpus& held_out);

// Directory of CSV files plus a JSON manifest. Load validates shapes against
// the manifest and refits the per-topic GPs from the stored messages; no
// partial state escapes a failed load.
void save_model(const ModelState& state, const std::string& dir);
ModelState load_model(const std::string& dir);

}  // namespace ktm
