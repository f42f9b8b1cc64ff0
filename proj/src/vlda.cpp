#include "ktm/vlda.hpp"

#include "ktm/errors.hpp"
#include "ktm/rng.hpp"

#include <cmath>
#include <string>

namespace ktm {

TopicWordModel::TopicWordModel(int num_topics, int vocab_size, double beta_in)
    : beta(beta_in),
      counts(Eigen::MatrixXd::Zero(num_topics, vocab_size)),
      topic_totals(Eigen::VectorXd::Zero(num_topics)) {
  require(num_topics >= 2, ErrorCode::invalid_argument,
          "TopicWordModel needs at least 2 topics");
  require(vocab_size >= 1, ErrorCode::invalid_argument,
          "TopicWordModel needs a non-empty vocabulary");
  require(std::isfinite(beta) && beta > 0.0, ErrorCode::invalid_argument,
          "beta must be positive");
}

std::pair<DocResponsibilities, TopicWordModel> init_responsibilities(
    const Corpus& corpus, int num_topics, double beta, std::uint64_t seed) {
  require(num_topics >= 2, ErrorCode::invalid_argument,
          "init_responsibilities needs K >= 2, got K = " + std::to_string(num_topics));

  Rng rng(seed);
  DocResponsibilities resp;
  resp.gamma.reserve(corpus.docs.size());
  TopicWordModel state(num_topics, corpus.vocab_size, beta);

  for (const auto& doc : corpus.docs) {
    Eigen::MatrixXd g(doc.words.size(), num_topics);
    for (size_t w = 0; w < doc.words.size(); ++w) {
      std::vector<double> draw = rng.dirichlet(static_cast<size_t>(num_topics), 1.0);
      const double count = static_cast<double>(doc.words[w].second);
      for (int k = 0; k < num_topics; ++k) {
        g(static_cast<Eigen::Index>(w), k) = draw[static_cast<size_t>(k)];
        state.counts(k, doc.words[w].first) += count * draw[static_cast<size_t>(k)];
        state.topic_totals[k] += count * draw[static_cast<size_t>(k)];
      }
    }
    resp.gamma.push_back(std::move(g));
  }
  return {std::move(resp), std::move(state)};
}

Eigen::VectorXd sweep_document(const Corpus& corpus, int doc,
                               const Eigen::VectorXd& prior_alpha,
                               TopicWordModel& state, DocResponsibilities& resp) {
  require(doc >= 0 && doc < corpus.num_docs(), ErrorCode::invalid_argument,
          "document index out of range");
  const int k = state.num_topics();
  require(prior_alpha.size() == k, ErrorCode::dimension,
          "prior dimension does not match topic count");
  const auto& words = corpus.docs[static_cast<size_t>(doc)].words;
  Eigen::MatrixXd& gamma = resp.gamma[static_cast<size_t>(doc)];
  require(gamma.rows() == static_cast<Eigen::Index>(words.size()) && gamma.cols() == k,
          ErrorCode::invalid_state, "responsibilities out of sync with document");

  const double v_beta = state.beta * static_cast<double>(state.vocab_size());

  Eigen::VectorXd nu = Eigen::VectorXd::Zero(k);
  for (size_t w = 0; w < words.size(); ++w) {
    nu += static_cast<double>(words[w].second) * gamma.row(static_cast<Eigen::Index>(w)).transpose();
  }

  Eigen::VectorXd fresh(k);
  for (size_t w = 0; w < words.size(); ++w) {
    const int word = words[w].first;
    const double count = static_cast<double>(words[w].second);
    auto row = gamma.row(static_cast<Eigen::Index>(w));

    // remove this token group's mass
    state.counts.col(word) -= count * row.transpose();
    state.topic_totals -= count * row.transpose();
    nu -= count * row.transpose();

    double total = 0.0;
    for (int t = 0; t < k; ++t) {
      double word_lik = (state.beta + state.counts(t, word)) /
                        (v_beta + state.topic_totals[t]);
      fresh[t] = word_lik * (prior_alpha[t] + nu[t]);
      total += fresh[t];
    }
    require(total > 0.0 && std::isfinite(total), ErrorCode::numerical,
            "degenerate responsibility update");
    fresh /= total;

    row = fresh.transpose();
    state.counts.col(word) += count * fresh;
    state.topic_totals += count * fresh;
    nu += count * fresh;
  }
  return nu;
}

Eigen::MatrixXd expected_topic_word(const TopicWordModel& state) {
  const double v_beta = state.beta * static_cast<double>(state.vocab_size());
  Eigen::ArrayXXd numer = state.counts.array() + state.beta;
  Eigen::ArrayXd denom = state.topic_totals.array() + v_beta;
  return (numer.colwise() / denom).matrix();
}

double perplexity(const Corpus& corpus, const Eigen::MatrixXd& theta,
                  const Eigen::MatrixXd& pi) {
  require(pi.rows() == corpus.num_docs(), ErrorCode::dimension,
          "pi row count does not match corpus");
  require(pi.cols() == theta.rows(), ErrorCode::dimension,
          "pi/theta topic count mismatch");
  require(theta.cols() == corpus.vocab_size, ErrorCode::dimension,
          "theta vocabulary size mismatch");

  double log_lik = 0.0;
  std::int64_t tokens = 0;
  for (int d = 0; d < corpus.num_docs(); ++d) {
    for (const auto& [w, c] : corpus.docs[static_cast<size_t>(d)].words) {
      double p = pi.row(d).dot(theta.col(w));
      require(p > 0.0, ErrorCode::numerical,
              "zero predictive probability for observed word " + std::to_string(w));
      log_lik += static_cast<double>(c) * std::log(p);
      tokens += c;
    }
  }
  require(tokens > 0, ErrorCode::invalid_argument, "perplexity over an empty corpus");
  return std::exp(-log_lik / static_cast<double>(tokens));
}

Eigen::VectorXd fold_in_document(const Corpus& corpus, int doc,
                                 const Eigen::VectorXd& prior_alpha,
                                 const Eigen::MatrixXd& theta, int passes) {
  require(doc >= 0 && doc < corpus.num_docs(), ErrorCode::invalid_argument,
          "document index out of range");
  require(passes >= 1, ErrorCode::invalid_argument, "fold-in needs passes >= 1");
  const int k = static_cast<int>(theta.rows());
  require(prior_alpha.size() == k, ErrorCode::dimension,
          "prior dimension does not match topic count");

  const auto& words = corpus.docs[static_cast<size_t>(doc)].words;
  Eigen::MatrixXd gamma =
      Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(words.size()), k,
                                1.0 / static_cast<double>(k));
  Eigen::VectorXd nu = Eigen::VectorXd::Zero(k);
  for (size_t w = 0; w < words.size(); ++w) {
    nu += static_cast<double>(words[w].second) * gamma.row(static_cast<Eigen::Index>(w)).transpose();
  }

  Eigen::VectorXd fresh(k);
  for (int pass = 0; pass < passes; ++pass) {
    for (size_t w = 0; w < words.size(); ++w) {
      const int word = words[w].first;
      const double count = static_cast<double>(words[w].second);
      auto row = gamma.row(static_cast<Eigen::Index>(w));
      nu -= count * row.transpose();
      double total = 0.0;
      for (int t = 0; t < k; ++t) {
        fresh[t] = theta(t, word) * (prior_alpha[t] + nu[t]);
        total += fresh[t];
      }
      require(total > 0.0 && std::isfinite(total), ErrorCode::numerical,
              "degenerate fold-in update");
      fresh /= total;
      row = fresh.transpose();
      nu += count * fresh;
    }
  }
  return nu;
}

}  // namespace ktm
