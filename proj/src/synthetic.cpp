#include "ktm/synthetic.hpp"

#include "ktm/bridge.hpp"
#include "ktm/errors.hpp"
#include "ktm/rng.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <map>

namespace ktm {

SyntheticCorpus generate_synthetic(const SyntheticSpec& spec) {
  require(spec.docs >= 1 && spec.topics >= 2 && spec.vocab >= 2,
          ErrorCode::invalid_argument, "synthetic spec is too small");
  Rng rng(spec.seed);

  // Evenly spread feature locations with a little jitter, sorted.
  Eigen::MatrixXd phi(spec.docs, 1);
  for (int d = 0; d < spec.docs; ++d) {
    double base = (static_cast<double>(d) + 0.5) / static_cast<double>(spec.docs);
    phi(d, 0) = base + 0.2 * (rng.uniform() - 0.5) / static_cast<double>(spec.docs);
  }
  std::sort(phi.col(0).begin(), phi.col(0).end());

  SyntheticCorpus out;
  out.features = std::make_shared<FeatureSpace>(FeatureSpace::euclidean(phi));

  // Per-topic functions from the GP prior.
  Gram g = gram(spec.kernel, *out.features, all_rows(*out.features));
  Eigen::MatrixXd cov = g.k;
  cov.diagonal().array() += 1e-8 * cov.diagonal().mean();
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  require(llt.info() == Eigen::Success, ErrorCode::numerical,
          "synthetic kernel matrix is not positive definite");
  Eigen::MatrixXd factor = llt.matrixL();

  out.y.resize(spec.docs, spec.topics);
  Eigen::VectorXd z(spec.docs);
  for (int k = 0; k < spec.topics; ++k) {
    for (int d = 0; d < spec.docs; ++d) z[d] = rng.normal();
    out.y.col(k) = factor.triangularView<Eigen::Lower>() * z;
    for (int d = 0; d < spec.docs; ++d) out.y(d, k) += spec.tau * rng.normal();
  }

  out.pi.resize(spec.docs, spec.topics);
  for (int d = 0; d < spec.docs; ++d) {
    out.pi.row(d) = softmax(out.y.row(d).transpose()).transpose();
  }

  out.theta.resize(spec.topics, spec.vocab);
  for (int k = 0; k < spec.topics; ++k) {
    std::vector<double> row = rng.dirichlet(static_cast<size_t>(spec.vocab),
                                            spec.topic_word_concentration);
    for (int v = 0; v < spec.vocab; ++v) out.theta(k, v) = row[static_cast<size_t>(v)];
  }

  out.corpus.vocab_size = spec.vocab;
  out.corpus.vocab.reserve(static_cast<size_t>(spec.vocab));
  for (int v = 0; v < spec.vocab; ++v) {
    out.corpus.vocab.push_back("word" + std::to_string(v));
  }
  for (int d = 0; d < spec.docs; ++d) {
    int length = std::max(1, rng.poisson(spec.doc_length_mean));
    std::map<int, int> counts;
    Eigen::VectorXd pi_row = out.pi.row(d);
    for (int i = 0; i < length; ++i) {
      int topic = rng.categorical(pi_row.data(), spec.topics);
      Eigen::VectorXd theta_row = out.theta.row(topic);
      counts[rng.categorical(theta_row.data(), spec.vocab)] += 1;
    }
    Document doc;
    for (const auto& [w, c] : counts) {
      doc.words.emplace_back(w, c);
      doc.total += c;
    }
    out.corpus.docs.push_back(std::move(doc));
    out.corpus.doc_ids.push_back(d + 1);
  }
  return out;
}

}  // namespace ktm
