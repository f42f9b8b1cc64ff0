#pragma once

#include "ktm/corpus.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <utility>
#include <vector>

namespace ktm {

// Collapsed per-topic word statistics: expected topic-word mass n_kv under
// the variational posterior, plus the symmetric Dirichlet prior beta.
struct TopicWordModel {
  double beta = 0.1;
  Eigen::MatrixXd counts;        // K x V
  Eigen::VectorXd topic_totals;  // n_k = row sums of counts

  TopicWordModel() = default;
  TopicWordModel(int num_topics, int vocab_size, double beta);

  int num_topics() const { return static_cast<int>(counts.rows()); }
  int vocab_size() const { return static_cast<int>(counts.cols()); }
};

// Per-document responsibilities: one K-row per distinct word of the
// document, aligned with Document::words. Identical tokens share a row.
struct DocResponsibilities {
  std::vector<Eigen::MatrixXd> gamma;
};

// Expected per-topic token counts per document.
struct PseudoCounts {
  Eigen::MatrixXd nu;  // D x K

  int num_docs() const { return static_cast<int>(nu.rows()); }
};

// Random responsibilities (symmetric Dirichlet(1) per token group) and the
// topic-word statistics they imply. Deterministic given the seed.
std::pair<DocResponsibilities, TopicWordModel> init_responsibilities(
    const Corpus& corpus, int num_topics, double beta, std::uint64_t seed);

// One zero-order collapsed update pass over a document, with the document
// factor kept explicit as Dirichlet(prior_alpha + nu). For each distinct
// word, its mass is removed from the shared counts and from nu, the
// responsibility is refreshed as
//   gamma_k  propto  (beta + n_kv) / (V beta + n_k) * (prior_k + nu_k)
// and the mass is added back, so totals are conserved exactly.
// Returns the updated pseudo-count row nu_d (sums to the document length).
Eigen::VectorXd sweep_document(const Corpus& corpus, int doc,
                               const Eigen::VectorXd& prior_alpha,
                               TopicWordModel& state, DocResponsibilities& resp);

// theta_hat(k, v) = (beta + n_kv) / (V beta + n_k); rows sum to one.
Eigen::MatrixXd expected_topic_word(const TopicWordModel& state);

// exp(- sum_tokens log sum_k pi_dk theta_k,w / total tokens). pi rows and
// theta rows must be probability vectors.
double perplexity(const Corpus& corpus, const Eigen::MatrixXd& theta,
                  const Eigen::MatrixXd& pi);

// Responsibility passes for one document against a frozen topic-word model
// (nothing global is touched). Returns the pseudo-count row; used to infer
// proportions for documents at evaluation time.
Eigen::VectorXd fold_in_document(const Corpus& corpus, int doc,
                                 const Eigen::VectorXd& prior_alpha,
                                 const Eigen::MatrixXd& theta, int passes);

}  // namespace ktm
