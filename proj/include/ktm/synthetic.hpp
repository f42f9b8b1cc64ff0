#pragma once

#include "ktm/corpus.hpp"
#include "ktm/kernels.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <memory>

namespace ktm {

// Draws a corpus from the generative model itself: per-topic word
// distributions from a symmetric Dirichlet, per-topic functions over a 1-D
// feature from the kernel's GP prior, softmax topic proportions, and tokens
// through the topic assignments.
struct SyntheticSpec {
  int docs = 60;
  int topics = 3;
  int vocab = 50;
  double doc_length_mean = 40.0;
  double topic_word_concentration = 0.1;
  KernelSpec kernel = KernelSpec::rational_quadratic(4.0, 0.25, 1.0, 1.0);
  double tau = 0.1;
  std::uint64_t seed = 1;
};

struct SyntheticCorpus {
  Corpus corpus;
  std::shared_ptr<FeatureSpace> features;  // docs x 1 (time in [0, 1])
  Eigen::MatrixXd theta;                   // topics x vocab ground truth
  Eigen::MatrixXd y;                       // docs x topics latent coordinates
  Eigen::MatrixXd pi;                      // docs x topics proportions
};

SyntheticCorpus generate_synthetic(const SyntheticSpec& spec);

}  // namespace ktm
