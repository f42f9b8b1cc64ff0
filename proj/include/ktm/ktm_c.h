/* C API for the kernel topic model library. All functions returning
 * ktm_status leave outputs untouched on failure; a message for the most
 * recent failure on the calling thread is available from ktm_last_error().
 * Handles are opaque and must be released with the matching *_close call. */

#ifndef KTM_C_H
#define KTM_C_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define KTM_API __declspec(dllexport)
#else
#define KTM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ktm_status {
  KTM_OK = 0,
  KTM_ERROR_INVALID_ARGUMENT = 1,
  KTM_ERROR_DIMENSION = 2,
  KTM_ERROR_NUMERICAL = 3,
  KTM_ERROR_IO = 4,
  KTM_ERROR_UNSUPPORTED = 5,
  KTM_ERROR_VERSION = 6,
  KTM_ERROR_INVALID_STATE = 7,
  KTM_ERROR_INTERNAL = 8
} ktm_status;

typedef struct ktm_corpus ktm_corpus;
typedef struct ktm_features ktm_features;
typedef struct ktm_model ktm_model;

KTM_API const char* ktm_version(void);
KTM_API const char* ktm_status_name(ktm_status status);
/* Thread-local; valid until the next failing ktm_* call on this thread. */
KTM_API const char* ktm_last_error(void);

/* -- corpus ------------------------------------------------------------ */

/* UCI bag-of-words file plus an optional vocabulary file (may be NULL). */
KTM_API ktm_status ktm_corpus_open(const char* docword_path, const char* vocab_path,
                                   ktm_corpus** out);
KTM_API void ktm_corpus_close(ktm_corpus* corpus);
KTM_API int64_t ktm_corpus_num_docs(const ktm_corpus* corpus);
KTM_API int64_t ktm_corpus_vocab_size(const ktm_corpus* corpus);
KTM_API int64_t ktm_corpus_total_tokens(const ktm_corpus* corpus);

/* -- features ---------------------------------------------------------- */

/* Metadata CSV (doc_id plus numeric columns, or doc_id plus node). Graph
 * metadata needs graph_edges_path; pass NULL otherwise. When corpus is
 * non-NULL the rows are aligned to its documents; otherwise file order is
 * kept (prediction grids). */
KTM_API ktm_status ktm_features_open(const char* metadata_csv,
                                     const char* graph_edges_path,
                                     const ktm_corpus* corpus, ktm_features** out);
KTM_API void ktm_features_close(ktm_features* features);
KTM_API int64_t ktm_features_num_rows(const ktm_features* features);
/* Label of a row: the doc_id (Euclidean) or node name (graph). */
KTM_API ktm_status ktm_features_row_label(const ktm_features* features, int64_t row,
                                          char* buf, size_t buf_len);

/* -- training ---------------------------------------------------------- */

typedef struct ktm_train_options {
  int32_t topics;
  int32_t sweeps;
  int32_t hyperopt_every;
  int32_t hyperopt_steps;
  int32_t passes_per_doc;
  int32_t threads; /* 0 = hardware concurrency */
  uint64_t seed;
  double beta;
  double alpha_floor;
  double initial_tau;
} ktm_train_options;

KTM_API void ktm_train_options_init(ktm_train_options* options);

/* kernel: "rq" (rational quadratic over time and author columns) or
 * "graph" (shortest-path embedding kernel; features must be a graph). */
KTM_API ktm_status ktm_train(const ktm_corpus* corpus, const ktm_features* features,
                             const char* kernel, const ktm_train_options* options,
                             ktm_model** out);

/* -- model ------------------------------------------------------------- */

KTM_API void ktm_model_close(ktm_model* model);
KTM_API ktm_status ktm_model_save(const ktm_model* model, const char* dir);
KTM_API ktm_status ktm_model_load(const char* dir, ktm_model** out);
KTM_API int32_t ktm_model_num_topics(const ktm_model* model);
KTM_API int64_t ktm_model_vocab_size(const ktm_model* model);
/* 0 = Euclidean features, 1 = graph, -1 = none. */
KTM_API int32_t ktm_model_feature_kind(const ktm_model* model);

/* Per-sweep training perplexity. Query the length with buf = NULL. */
KTM_API ktm_status ktm_model_trace(const ktm_model* model, double* buf,
                                   int64_t buf_len, int64_t* out_len);

/* Perplexity of a corpus under the model; document proportions come from
 * fold-in passes against the frozen topic-word model. */
KTM_API ktm_status ktm_model_eval_perplexity(const ktm_model* model,
                                             const ktm_corpus* corpus,
                                             int32_t fold_in_passes, double* out);

/* Predicted topic distribution at a query point. probabilities and
 * y_variances are caller buffers of length ktm_model_num_topics();
 * either may be NULL when not wanted. */
KTM_API ktm_status ktm_model_predict_point(const ktm_model* model, const double* phi,
                                           int32_t phi_len, double* probabilities,
                                           double* y_variances);
KTM_API ktm_status ktm_model_predict_node(const ktm_model* model, const char* node,
                                          double* probabilities, double* y_variances);
KTM_API ktm_status ktm_model_predict_row(const ktm_model* model,
                                         const ktm_features* features, int64_t row,
                                         double* probabilities, double* y_variances);

/* -- laplace bridge vs mcmc check -------------------------------------- */

/* Fills out_rows with grid_len rows of
 * (n_obs, bridge_err, bridge_sd, mcmc_err, mcmc_sd). */
KTM_API ktm_status ktm_bridge_check(int32_t k, const int32_t* n_obs_grid,
                                    int32_t grid_len, int32_t repetitions,
                                    int32_t n_mcmc, uint64_t seed, int32_t threads,
                                    double* out_rows);

#ifdef __cplusplus
}
#endif

#endif /* KTM_C_H */
