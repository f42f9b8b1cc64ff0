#include "ktm/engine.hpp"

#include "ktm/errors.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace ktm {

namespace {

int worker_count(int requested, int jobs) {
  int n = requested > 0 ? requested
                        : static_cast<int>(std::thread::hardware_concurrency());
  return std::max(1, std::min(n, jobs));
}

// Fits one GP per topic; topics are independent, so parallel execution is
// bitwise identical to sequential.
std::vector<GpTopicModel> fit_all_topics(const KernelSpec& kernel,
                                         const std::shared_ptr<const FeatureSpace>& features,
                                         const std::vector<TopicMessages>& messages,
                                         double tau, const JitterPolicy& jitter,
                                         int threads) {
  const int k = static_cast<int>(messages.size());
  std::vector<GpTopicModel> gps(static_cast<size_t>(k));
  std::exception_ptr error;
  auto fit_topic = [&](int t) {
    GaussianMessages msgs(messages[static_cast<size_t>(t)].means,
                          messages[static_cast<size_t>(t)].bridge_variances, tau);
    gps[static_cast<size_t>(t)] = fit(kernel, features, msgs, jitter);
  };
  int workers = worker_count(threads, k);
  if (workers == 1) {
    for (int t = 0; t < k; ++t) fit_topic(t);
  } else {
    std::vector<std::thread> pool;
    std::mutex error_mutex;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (int t = w; t < k; t += workers) {
          try {
            fit_topic(t);
          } catch (...) {
            std::lock_guard<std::mutex> lock(error_mutex);
            if (!error) error = std::current_exception();
          }
        }
      });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
  }
  return gps;
}

}  // namespace

void TrainConfig::validate() const {
  require(topics >= 2, ErrorCode::invalid_argument, "config: topics must be >= 2");
  require(!use_gp || topics >= 3, ErrorCode::invalid_argument,
          "config: the bridge needs K >= 3 when the GP is enabled");
  require(max_sweeps >= 0, ErrorCode::invalid_argument, "config: max_sweeps must be >= 0");
  require(hyperopt_every >= 1, ErrorCode::invalid_argument,
          "config: hyperopt_every must be >= 1");
  require(hyperopt_steps >= 1, ErrorCode::invalid_argument,
          "config: hyperopt_steps must be >= 1");
  require(passes_per_doc >= 1, ErrorCode::invalid_argument,
          "config: passes_per_doc must be >= 1");
  require(std::isfinite(beta) && beta > 0.0, ErrorCode::invalid_argument,
          "config: beta must be positive");
  require(std::isfinite(alpha_floor) && alpha_floor > 0.0, ErrorCode::invalid_argument,
          "config: alpha_floor must be positive");
  require(std::isfinite(initial_tau) && initial_tau > 0.0, ErrorCode::invalid_argument,
          "config: initial_tau must be positive");
  require(std::isfinite(fixed_prior_alpha) && fixed_prior_alpha > 0.0,
          ErrorCode::invalid_argument, "config: fixed_prior_alpha must be positive");
}

Eigen::MatrixXd ModelState::doc_pi() const {
  Eigen::MatrixXd pi = doc_alpha;
  for (Eigen::Index d = 0; d < pi.rows(); ++d) {
    pi.row(d) /= pi.row(d).sum();
  }
  return pi;
}

ModelState train(const Corpus& corpus, std::shared_ptr<const FeatureSpace> features,
                 const KernelSpec& kernel, const TrainConfig& config) {
  config.validate();
  require(corpus.num_docs() >= 1, ErrorCode::invalid_argument, "empty corpus");
  if (config.use_gp) {
    require(features != nullptr, ErrorCode::invalid_argument,
            "training with a GP needs document features");
    require(features->num_rows() == corpus.num_docs(), ErrorCode::dimension,
            "feature rows do not match corpus documents");
  }

  const int n_docs = corpus.num_docs();
  const int n_topics = config.topics;

  ModelState state;
  state.config = config;
  state.kernel = kernel;
  state.features = features;
  state.topic_word = TopicWordModel(n_topics, corpus.vocab_size, config.beta);
  state.hypers = Hyperparameters::from(kernel, config.initial_tau);
  state.messages.assign(static_cast<size_t>(n_topics), TopicMessages{});

  Eigen::MatrixXd prior =
      Eigen::MatrixXd::Constant(n_docs, n_topics, config.fixed_prior_alpha);
  PseudoCounts pseudo{Eigen::MatrixXd::Zero(n_docs, n_topics)};
  state.doc_alpha = prior + pseudo.nu;
  if (config.max_sweeps == 0) return state;

  DocResponsibilities resp;
  KernelSpec live_kernel = kernel;

  for (int sweep = 1; sweep <= config.max_sweeps; ++sweep) {
    // Perplexity of the state entering this sweep; before any learning this
    // is exactly the vocabulary size (uniform topics, uniform proportions).
    state.perplexity_trace.push_back(
        perplexity(corpus, state.theta(), state.doc_pi()));

    if (sweep == 1) {
      auto [r, tw] = init_responsibilities(corpus, n_topics, config.beta, config.seed);
      resp = std::move(r);
      state.topic_word = std::move(tw);
    } else if (config.use_gp) {
      // Refresh document priors from the GPs fitted in the previous sweep.
      // Each document receives the leave-one-out prediction: the downward
      // message must not contain the document's own upward message.
      const double tau = state.hypers.tau();
      const double tau2 = tau * tau;
      std::vector<SitePredictions> site(static_cast<size_t>(n_topics));
      for (int t = 0; t < n_topics; ++t) {
        GaussianMessages msgs(state.messages[static_cast<size_t>(t)].means,
                              state.messages[static_cast<size_t>(t)].bridge_variances,
                              tau);
        site[static_cast<size_t>(t)] =
            loo_site_predictions(state.gps[static_cast<size_t>(t)], msgs);
      }
      for (int d = 0; d < n_docs; ++d) {
        Eigen::VectorXd mean(n_topics);
        Eigen::VectorXd var(n_topics);
        for (int t = 0; t < n_topics; ++t) {
          mean[t] = site[static_cast<size_t>(t)].means[d];
          var[t] = site[static_cast<size_t>(t)].variances[d] + tau2;
        }
        DirichletBelief belief = gaussian_to_dirichlet(
            GaussianBelief(std::move(mean), std::move(var)), config.alpha_floor,
            &state.bridge_stats);
        prior.row(d) = belief.alpha.transpose();
      }
    }

    for (int d = 0; d < n_docs; ++d) {
      if (corpus.docs[static_cast<size_t>(d)].total == 0) continue;
      Eigen::VectorXd prior_row = prior.row(d);
      for (int pass = 0; pass < config.passes_per_doc; ++pass) {
        pseudo.nu.row(d) =
            sweep_document(corpus, d, prior_row, state.topic_word, resp).transpose();
      }
    }
    state.doc_alpha = prior + pseudo.nu;

    if (config.use_gp) {
      // Upward messages: the token evidence alone. The posterior belief is
      // divided by the document's prior in the Gaussian basis (the round
      // trip makes d2g(prior) exactly the downward message), so neighbor
      // information pooled into the prior is not echoed back into the GP.
      constexpr double min_up_precision = 1e-6;
      Eigen::MatrixXd means(n_docs, n_topics);
      Eigen::MatrixXd vars(n_docs, n_topics);
      for (int d = 0; d < n_docs; ++d) {
        GaussianBelief post = dirichlet_to_gaussian(
            DirichletBelief(state.doc_alpha.row(d).transpose()));
        GaussianBelief down =
            dirichlet_to_gaussian(DirichletBelief(prior.row(d).transpose()));
        for (int t = 0; t < n_topics; ++t) {
          double prec = 1.0 / post.variance[t] - 1.0 / down.variance[t];
          if (!(prec > min_up_precision)) prec = min_up_precision;
          double mean = (post.mean[t] / post.variance[t] -
                         down.mean[t] / down.variance[t]) /
                        prec;
          means(d, t) = mean;
          vars(d, t) = 1.0 / prec;
        }
      }
      for (int t = 0; t < n_topics; ++t) {
        state.messages[static_cast<size_t>(t)] = TopicMessages{means.col(t), vars.col(t)};
      }

      try {
        if (sweep % config.hyperopt_every == 0) {
          optimize_hypers(kernel, features, state.messages, state.hypers,
                          config.hyperopt_steps, config.jitter);
          live_kernel = state.hypers.apply(kernel);
        }
        state.gps = fit_all_topics(live_kernel, features, state.messages,
                                   state.hypers.tau(), config.jitter, config.threads);
      } catch (const Error& e) {
        fail(e.code(), "sweep " + std::to_string(sweep) + ": " + e.what());
      }
      state.kernel = live_kernel;
    }
    state.sweep_index = sweep;
  }
  return state;
}

TopicPrediction predict_topics(const ModelState& state, const QueryPoint& query) {
  require(!state.gps.empty(), ErrorCode::invalid_state,
          "predict_topics needs a model trained with the GP enabled");
  if (state.features->kind() == FeatureSpace::Kind::graph) {
    require(query.is_index(), ErrorCode::unsupported,
            "graph models can only predict at embedded nodes");
  }
  const int k = state.num_topics();
  const double tau2 = state.hypers.tau() * state.hypers.tau();
  TopicPrediction out;
  out.y_mean.resize(k);
  out.y_variance.resize(k);
  for (int t = 0; t < k; ++t) {
    auto [m, v] = predict(state.gps[static_cast<size_t>(t)], query);
    out.y_mean[t] = m;
    out.y_variance[t] = v + tau2;
  }
  out.probabilities = softmax(out.y_mean);
  return out;
}

double evaluate_perplexity(const ModelState& state, const Corpus& corpus,
                           int fold_in_passes) {
  require(corpus.vocab_size == state.topic_word.vocab_size(), ErrorCode::dimension,
          "corpus vocabulary does not match the model");
  Eigen::MatrixXd theta = state.theta();
  const int k = state.num_topics();
  Eigen::VectorXd prior =
      Eigen::VectorXd::Constant(k, state.config.fixed_prior_alpha);
  Eigen::MatrixXd pi(corpus.num_docs(), k);
  for (int d = 0; d < corpus.num_docs(); ++d) {
    if (corpus.docs[static_cast<size_t>(d)].total == 0) {
      pi.row(d).setConstant(1.0 / static_cast<double>(k));
      continue;
    }
    Eigen::VectorXd posterior =
        prior + fold_in_document(corpus, d, prior, theta, fold_in_passes);
    pi.row(d) = (posterior / posterior.sum()).transpose();
  }
  return perplexity(corpus, theta, pi);
}

double holdout_perplexity(const ModelState& state, const Corpus& held_out) {
  require(held_out.num_docs() == state.num_docs(), ErrorCode::dimension,
          "held-out corpus is not aligned with the trained documents");
  require(held_out.vocab_size == state.topic_word.vocab_size(), ErrorCode::dimension,
          "held-out vocabulary does not match the model");
  return perplexity(held_out, state.theta(), state.doc_pi());
}

}  // namespace ktm
