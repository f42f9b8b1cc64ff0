#include "ktm/ktm_c.h"

#include "ktm/bridge_check.hpp"
#include "ktm/corpus.hpp"
#include "ktm/engine.hpp"
#include "ktm/errors.hpp"
#include "ktm/metadata.hpp"

#include <cstring>
#include <exception>
#include <memory>
#include <string>
#include <vector>

struct ktm_corpus {
  ktm::Corpus corpus;
};

struct ktm_features {
  std::shared_ptr<ktm::FeatureSpace> space;
  std::vector<std::string> labels;  // doc ids or node names, row order
  bool is_graph = false;
};

struct ktm_model {
  ktm::ModelState state;
};

namespace {

thread_local std::string g_last_error;

ktm_status status_from(const ktm::Error& e) {
  switch (e.code()) {
    case ktm::ErrorCode::invalid_argument: return KTM_ERROR_INVALID_ARGUMENT;
    case ktm::ErrorCode::dimension: return KTM_ERROR_DIMENSION;
    case ktm::ErrorCode::numerical: return KTM_ERROR_NUMERICAL;
    case ktm::ErrorCode::io: return KTM_ERROR_IO;
    case ktm::ErrorCode::unsupported: return KTM_ERROR_UNSUPPORTED;
    case ktm::ErrorCode::version_mismatch: return KTM_ERROR_VERSION;
    case ktm::ErrorCode::invalid_state: return KTM_ERROR_INVALID_STATE;
  }
  return KTM_ERROR_INTERNAL;
}

ktm_status set_error(ktm_status status, const char* what) {
  g_last_error = what != nullptr ? what : "unknown error";
  return status;
}

// Runs fn, translating exceptions into status codes.
template <typename Fn>
ktm_status guarded(Fn&& fn) {
  try {
    fn();
    return KTM_OK;
  } catch (const ktm::Error& e) {
    return set_error(status_from(e), e.what());
  } catch (const std::exception& e) {
    return set_error(KTM_ERROR_INTERNAL, e.what());
  } catch (...) {
    return set_error(KTM_ERROR_INTERNAL, "unknown error");
  }
}

ktm_status require_arg(bool ok, const char* msg) {
  return ok ? KTM_OK : set_error(KTM_ERROR_INVALID_ARGUMENT, msg);
}

ktm_status copy_string(const std::string& s, char* buf, size_t buf_len) {
  if (buf == nullptr || buf_len == 0) {
    return set_error(KTM_ERROR_INVALID_ARGUMENT, "output buffer is empty");
  }
  if (s.size() + 1 > buf_len) {
    return set_error(KTM_ERROR_INVALID_ARGUMENT, "output buffer is too small");
  }
  std::memcpy(buf, s.c_str(), s.size() + 1);
  return KTM_OK;
}

void predict_into(const ktm::ModelState& state, const ktm::QueryPoint& q,
                  double* probabilities, double* y_variances) {
  ktm::TopicPrediction p = ktm::predict_topics(state, q);
  const size_t k = static_cast<size_t>(p.probabilities.size());
  if (probabilities != nullptr) {
    std::memcpy(probabilities, p.probabilities.data(), sizeof(double) * k);
  }
  if (y_variances != nullptr) {
    std::memcpy(y_variances, p.y_variance.data(), sizeof(double) * k);
  }
}

}  // namespace

extern "C" {

const char* ktm_version(void) { return "0.1.0"; }

const char* ktm_status_name(ktm_status status) {
  switch (status) {
    case KTM_OK: return "ok";
    case KTM_ERROR_INVALID_ARGUMENT: return "invalid argument";
    case KTM_ERROR_DIMENSION: return "dimension mismatch";
    case KTM_ERROR_NUMERICAL: return "numerical failure";
    case KTM_ERROR_IO: return "io failure";
    case KTM_ERROR_UNSUPPORTED: return "unsupported operation";
    case KTM_ERROR_VERSION: return "incompatible version";
    case KTM_ERROR_INVALID_STATE: return "invalid state";
    case KTM_ERROR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* ktm_last_error(void) { return g_last_error.c_str(); }

ktm_status ktm_corpus_open(const char* docword_path, const char* vocab_path,
                           ktm_corpus** out) {
  if (auto s = require_arg(docword_path != nullptr && out != nullptr,
                           "docword_path and out must not be NULL");
      s != KTM_OK) {
    return s;
  }
  return guarded([&] {
    auto handle = std::make_unique<ktm_corpus>();
    handle->corpus = ktm::read_uci_corpus(docword_path);
    if (vocab_path != nullptr) {
      auto vocab = ktm::read_vocabulary(vocab_path);
      ktm::require(static_cast<std::int64_t>(vocab.size()) >= handle->corpus.vocab_size,
                   ktm::ErrorCode::invalid_argument,
                   "vocabulary file has fewer entries than the corpus vocabulary");
      handle->corpus.vocab = std::move(vocab);
    }
    *out = handle.release();
  });
}

void ktm_corpus_close(ktm_corpus* corpus) { delete corpus; }

int64_t ktm_corpus_num_docs(const ktm_corpus* corpus) {
  return corpus == nullptr ? -1 : corpus->corpus.num_docs();
}

int64_t ktm_corpus_vocab_size(const ktm_corpus* corpus) {
  return corpus == nullptr ? -1 : corpus->corpus.vocab_size;
}

int64_t ktm_corpus_total_tokens(const ktm_corpus* corpus) {
  return corpus == nullptr ? -1 : corpus->corpus.total_tokens();
}

ktm_status ktm_features_open(const char* metadata_csv, const char* graph_edges_path,
                             const ktm_corpus* corpus, ktm_features** out) {
  if (auto s = require_arg(metadata_csv != nullptr && out != nullptr,
                           "metadata_csv and out must not be NULL");
      s != KTM_OK) {
    return s;
  }
  return guarded([&] {
    ktm::MetadataTable meta = ktm::read_metadata_csv(metadata_csv);
    auto handle = std::make_unique<ktm_features>();
    handle->is_graph = meta.is_graph;
    if (corpus != nullptr) {
      handle->space = ktm::build_feature_space(
          meta, corpus->corpus.doc_ids,
          graph_edges_path != nullptr ? graph_edges_path : std::string());
      if (meta.is_graph) {
        handle->labels = handle->space->nodes();
      } else {
        for (auto id : corpus->corpus.doc_ids) handle->labels.push_back(std::to_string(id));
      }
    } else if (meta.is_graph) {
      // A grid of graph nodes: resolved against the model at predict time.
      handle->space = nullptr;
      handle->labels = meta.nodes;
    } else {
      handle->space = ktm::feature_space_from_rows(meta);
      for (auto id : meta.doc_ids) handle->labels.push_back(std::to_string(id));
    }
    *out = handle.release();
  });
}

void ktm_features_close(ktm_features* features) { delete features; }

int64_t ktm_features_num_rows(const ktm_features* features) {
  if (features == nullptr) return -1;
  return static_cast<int64_t>(features->labels.size());
}

ktm_status ktm_features_row_label(const ktm_features* features, int64_t row, char* buf,
                                  size_t buf_len) {
  if (auto s = require_arg(features != nullptr, "features must not be NULL"); s != KTM_OK) {
    return s;
  }
  if (row < 0 || row >= static_cast<int64_t>(features->labels.size())) {
    return set_error(KTM_ERROR_INVALID_ARGUMENT, "row index out of range");
  }
  return copy_string(features->labels[static_cast<size_t>(row)], buf, buf_len);
}

void ktm_train_options_init(ktm_train_options* options) {
  if (options == nullptr) return;
  ktm::TrainConfig defaults;
  options->topics = defaults.topics;
  options->sweeps = defaults.max_sweeps;
  options->hyperopt_every = defaults.hyperopt_every;
  options->hyperopt_steps = defaults.hyperopt_steps;
  options->passes_per_doc = defaults.passes_per_doc;
  options->threads = defaults.threads;
  options->seed = defaults.seed;
  options->beta = defaults.beta;
  options->alpha_floor = defaults.alpha_floor;
  options->initial_tau = defaults.initial_tau;
}

ktm_status ktm_train(const ktm_corpus* corpus, const ktm_features* features,
                     const char* kernel, const ktm_train_options* options,
                     ktm_model** out) {
  if (auto s = require_arg(corpus != nullptr && features != nullptr &&
                               kernel != nullptr && options != nullptr && out != nullptr,
                           "ktm_train arguments must not be NULL");
      s != KTM_OK) {
    return s;
  }
  return guarded([&] {
    ktm::require(features->space != nullptr, ktm::ErrorCode::invalid_argument,
                 "features are a prediction grid; open them with the corpus for training");
    ktm::KernelKind kind = ktm::kernel_kind_from_name(kernel);
    ktm::KernelSpec spec;
    if (kind == ktm::KernelKind::graph_embedding) {
      ktm::require(features->is_graph, ktm::ErrorCode::invalid_argument,
                   "graph kernel needs graph metadata (node column + edge list)");
      spec = ktm::KernelSpec::graph_uniform(1.0, 1.0, features->space->num_cols());
    } else if (kind == ktm::KernelKind::rational_quadratic_time_author) {
      ktm::require(!features->is_graph, ktm::ErrorCode::invalid_argument,
                   "rq kernel needs numeric metadata columns");
      spec = ktm::KernelSpec::rational_quadratic(1.0, 5.0, 1.0, 5.0);
    } else {
      ktm::fail(ktm::ErrorCode::unsupported,
                "training supports the 'rq' and 'graph' kernels");
    }

    ktm::TrainConfig config;
    config.topics = options->topics;
    config.max_sweeps = options->sweeps;
    config.hyperopt_every = options->hyperopt_every;
    config.hyperopt_steps = options->hyperopt_steps;
    config.passes_per_doc = options->passes_per_doc;
    config.threads = options->threads;
    config.seed = options->seed;
    config.beta = options->beta;
    config.alpha_floor = options->alpha_floor;
    config.initial_tau = options->initial_tau;

    auto handle = std::make_unique<ktm_model>();
    handle->state = ktm::train(corpus->corpus, features->space, spec, config);
    *out = handle.release();
  });
}

void ktm_model_close(ktm_model* model) { delete model; }

ktm_status ktm_model_save(const ktm_model* model, const char* dir) {
  if (auto s = require_arg(model != nullptr && dir != nullptr,
                           "model and dir must not be NULL");
      s != KTM_OK) {
    return s;
  }
  return guarded([&] { ktm::save_model(model->state, dir); });
}

ktm_status ktm_model_load(const char* dir, ktm_model** out) {
  if (auto s = require_arg(dir != nullptr && out != nullptr,
                           "dir and out must not be NULL");
      s != KTM_OK) {
    return s;
  }
  return guarded([&] {
    auto handle = std::make_unique<ktm_model>();
    handle->state = ktm::load_model(dir);
    *out = handle.release();
  });
}

int32_t ktm_model_num_topics(const ktm_model* model) {
  return model == nullptr ? -1 : model->state.num_topics();
}

int64_t ktm_model_vocab_size(const ktm_model* model) {
  return model == nullptr ? -1 : model->state.topic_word.vocab_size();
}

int32_t ktm_model_feature_kind(const ktm_model* model) {
  if (model == nullptr || model->state.features == nullptr) return -1;
  return model->state.features->kind() == ktm::FeatureSpace::Kind::graph ? 1 : 0;
}

ktm_status ktm_model_trace(const ktm_model* model, double* buf, int64_t buf_len,
                           int64_t* out_len) {
  if (auto s = require_arg(model != nullptr && out_len != nullptr,
                           "model and out_len must not be NULL");
      s != KTM_OK) {
    return s;
  }
  const auto& trace = model->state.perplexity_trace;
  *out_len = static_cast<int64_t>(trace.size());
  if (buf == nullptr) return KTM_OK;
  if (buf_len < *out_len) {
    return set_error(KTM_ERROR_INVALID_ARGUMENT, "trace buffer is too small");
  }
  std::memcpy(buf, trace.data(), sizeof(double) * trace.size());
  return KTM_OK;
}

ktm_status ktm_model_eval_perplexity(const ktm_model* model, const ktm_corpus* corpus,
                                     int32_t fold_in_passes, double* out) {
  if (auto s = require_arg(model != nullptr && corpus != nullptr && out != nullptr,
                           "model, corpus and out must not be NULL");
      s != KTM_OK) {
    return s;
  }
  return guarded([&] {
    *out = ktm::evaluate_perplexity(model->state, corpus->corpus,
                                    fold_in_passes > 0 ? fold_in_passes : 20);
  });
}

ktm_status ktm_model_predict_point(const ktm_model* model, const double* phi,
                                   int32_t phi_len, double* probabilities,
                                   double* y_variances) {
  if (auto s = require_arg(model != nullptr && phi != nullptr && phi_len >= 1,
                           "model and phi must be given");
      s != KTM_OK) {
    return s;
  }
  return guarded([&] {
    Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(phi, phi_len);
    predict_into(model->state, ktm::QueryPoint::at(std::move(v)), probabilities,
                 y_variances);
  });
}

ktm_status ktm_model_predict_node(const ktm_model* model, const char* node,
                                  double* probabilities, double* y_variances) {
  if (auto s = require_arg(model != nullptr && node != nullptr,
                           "model and node must not be NULL");
      s != KTM_OK) {
    return s;
  }
  return guarded([&] {
    ktm::require(model->state.features != nullptr &&
                     model->state.features->kind() == ktm::FeatureSpace::Kind::graph,
                 ktm::ErrorCode::unsupported, "model was not trained on a graph");
    int index = model->state.features->node_index(node);
    ktm::require(index >= 0, ktm::ErrorCode::unsupported,
                 std::string("node '") + node + "' is not in the trained embedding");
    predict_into(model->state, ktm::QueryPoint::row(index), probabilities, y_variances);
  });
}

ktm_status ktm_model_predict_row(const ktm_model* model, const ktm_features* features,
                                 int64_t row, double* probabilities,
                                 double* y_variances) {
  if (auto s = require_arg(model != nullptr && features != nullptr,
                           "model and features must not be NULL");
      s != KTM_OK) {
    return s;
  }
  if (row < 0 || row >= static_cast<int64_t>(features->labels.size())) {
    return set_error(KTM_ERROR_INVALID_ARGUMENT, "row index out of range");
  }
  if (features->is_graph) {
    return ktm_model_predict_node(model, features->labels[static_cast<size_t>(row)].c_str(),
                                  probabilities, y_variances);
  }
  return guarded([&] {
    Eigen::VectorXd v = features->space->phi().row(static_cast<Eigen::Index>(row));
    predict_into(model->state, ktm::QueryPoint::at(std::move(v)), probabilities,
                 y_variances);
  });
}

ktm_status ktm_bridge_check(int32_t k, const int32_t* n_obs_grid, int32_t grid_len,
                            int32_t repetitions, int32_t n_mcmc, uint64_t seed,
                            int32_t threads, double* out_rows) {
  if (auto s = require_arg(n_obs_grid != nullptr && grid_len >= 1 && out_rows != nullptr,
                           "grid and out_rows must be given");
      s != KTM_OK) {
    return s;
  }
  return guarded([&] {
    std::vector<int> grid(n_obs_grid, n_obs_grid + grid_len);
    auto rows = ktm::bridge_check(k, grid, repetitions, n_mcmc, seed, threads);
    for (size_t i = 0; i < rows.size(); ++i) {
      out_rows[i * 5 + 0] = static_cast<double>(rows[i].n_obs);
      out_rows[i * 5 + 1] = rows[i].bridge_err;
      out_rows[i * 5 + 2] = rows[i].bridge_sd;
      out_rows[i * 5 + 3] = rows[i].mcmc_err;
      out_rows[i * 5 + 4] = rows[i].mcmc_sd;
    }
  });
}

}  // extern "C"
