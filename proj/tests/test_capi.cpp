#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

// Exercises the shared-library surface the way an external client would:
// through the C header only (the core library is linked here solely to
// produce fixture files).
#include "ktm/ktm_c.h"

#include "ktm/corpus.hpp"
#include "ktm/csv.hpp"
#include "ktm/synthetic.hpp"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace {

struct Fixture {
  std::filesystem::path dir;
  std::string docword;
  std::string vocab;
  std::string meta;

  Fixture() {
    dir = std::filesystem::temp_directory_path() / "ktm_capi_tests";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);

    ktm::SyntheticSpec spec;
    spec.docs = 25;
    spec.topics = 3;
    spec.vocab = 20;
    spec.doc_length_mean = 25.0;
    spec.seed = 77;
    ktm::SyntheticCorpus data = ktm::generate_synthetic(spec);

    docword = (dir / "docword.txt").string();
    vocab = (dir / "vocab.txt").string();
    meta = (dir / "meta.csv").string();
    ktm::write_uci_corpus(data.corpus, docword);
    ktm::write_vocabulary(data.corpus.vocab, vocab);
    std::ofstream m(meta);
    m << "doc_id,time\n";
    for (int d = 0; d < data.corpus.num_docs(); ++d) {
      m << data.corpus.doc_ids[static_cast<size_t>(d)] << ','
        << ktm::format_double(data.features->phi()(d, 0)) << "\n";
    }
  }
};

Fixture& fixture() {
  static Fixture f;
  return f;
}

}  // namespace

TEST_CASE("version and status strings") {
  CHECK(std::strlen(ktm_version()) > 0);
  CHECK(std::string(ktm_status_name(KTM_OK)) == "ok");
  CHECK(std::string(ktm_status_name(KTM_ERROR_IO)) == "io failure");
}

TEST_CASE("corpus handle lifecycle and error reporting") {
  ktm_corpus* corpus = nullptr;
  CHECK(ktm_corpus_open("/nonexistent/file.txt", nullptr, &corpus) == KTM_ERROR_IO);
  CHECK(std::strlen(ktm_last_error()) > 0);
  CHECK(corpus == nullptr);

  CHECK(ktm_corpus_open(nullptr, nullptr, &corpus) == KTM_ERROR_INVALID_ARGUMENT);

  REQUIRE(ktm_corpus_open(fixture().docword.c_str(), fixture().vocab.c_str(), &corpus) ==
          KTM_OK);
  CHECK(ktm_corpus_num_docs(corpus) == 25);
  CHECK(ktm_corpus_vocab_size(corpus) == 20);
  CHECK(ktm_corpus_total_tokens(corpus) > 0);
  ktm_corpus_close(corpus);
  CHECK(ktm_corpus_num_docs(nullptr) == -1);
}

TEST_CASE("train, save, load, predict and evaluate through the C surface") {
  ktm_corpus* corpus = nullptr;
  REQUIRE(ktm_corpus_open(fixture().docword.c_str(), nullptr, &corpus) == KTM_OK);
  ktm_features* features = nullptr;
  REQUIRE(ktm_features_open(fixture().meta.c_str(), nullptr, corpus, &features) == KTM_OK);
  CHECK(ktm_features_num_rows(features) == 25);
  char label[32];
  REQUIRE(ktm_features_row_label(features, 0, label, sizeof(label)) == KTM_OK);
  CHECK(std::string(label) == "1");

  ktm_train_options options;
  ktm_train_options_init(&options);
  CHECK(options.topics == 10);
  CHECK(options.beta == 0.1);
  options.topics = 3;
  options.sweeps = 5;
  options.seed = 5;
  options.threads = 1;

  ktm_model* model = nullptr;
  REQUIRE(ktm_train(corpus, features, "rq", &options, &model) == KTM_OK);
  CHECK(ktm_model_num_topics(model) == 3);
  CHECK(ktm_model_vocab_size(model) == 20);
  CHECK(ktm_model_feature_kind(model) == 0);

  int64_t trace_len = 0;
  REQUIRE(ktm_model_trace(model, nullptr, 0, &trace_len) == KTM_OK);
  CHECK(trace_len == 5);
  std::vector<double> trace(static_cast<size_t>(trace_len));
  REQUIRE(ktm_model_trace(model, trace.data(), trace_len, &trace_len) == KTM_OK);
  CHECK(trace[0] == doctest::Approx(20.0).epsilon(1e-9));

  double perplexity = 0.0;
  REQUIRE(ktm_model_eval_perplexity(model, corpus, 20, &perplexity) == KTM_OK);
  CHECK(perplexity > 1.0);
  CHECK(perplexity < 20.0);

  double phi = 0.4;
  std::vector<double> probs(3);
  std::vector<double> vars(3);
  REQUIRE(ktm_model_predict_point(model, &phi, 1, probs.data(), vars.data()) == KTM_OK);
  CHECK(std::abs(probs[0] + probs[1] + probs[2] - 1.0) < 1e-12);
  CHECK(vars[0] > 0.0);

  // Unknown kernels and graph-only calls are rejected.
  ktm_model* bad = nullptr;
  CHECK(ktm_train(corpus, features, "spline", &options, &bad) == KTM_ERROR_UNSUPPORTED);
  CHECK(ktm_model_predict_node(model, "doc1", probs.data(), vars.data()) ==
        KTM_ERROR_UNSUPPORTED);

  auto model_dir = (fixture().dir / "model").string();
  REQUIRE(ktm_model_save(model, model_dir.c_str()) == KTM_OK);
  ktm_model* loaded = nullptr;
  REQUIRE(ktm_model_load(model_dir.c_str(), &loaded) == KTM_OK);
  std::vector<double> probs2(3);
  REQUIRE(ktm_model_predict_point(loaded, &phi, 1, probs2.data(), nullptr) == KTM_OK);
  for (int t = 0; t < 3; ++t) CHECK(probs[static_cast<size_t>(t)] == probs2[static_cast<size_t>(t)]);

  ktm_model* missing = nullptr;
  CHECK(ktm_model_load("/nonexistent/model", &missing) == KTM_ERROR_IO);

  ktm_model_close(loaded);
  ktm_model_close(model);
  ktm_features_close(features);
  ktm_corpus_close(corpus);
}

TEST_CASE("graph metadata through the C surface") {
  auto dir = fixture().dir;
  auto meta = (dir / "gmeta.csv").string();
  auto edges = (dir / "gedges.txt").string();
  {
    std::ofstream m(meta);
    m << "doc_id,node\n";
    for (int d = 1; d <= 25; ++d) m << d << ",n" << d << "\n";
    std::ofstream e(edges);
    for (int d = 1; d < 25; ++d) e << 'n' << d << " n" << (d + 1) << "\n";
  }
  ktm_corpus* corpus = nullptr;
  REQUIRE(ktm_corpus_open(fixture().docword.c_str(), nullptr, &corpus) == KTM_OK);
  ktm_features* features = nullptr;
  REQUIRE(ktm_features_open(meta.c_str(), edges.c_str(), corpus, &features) == KTM_OK);

  ktm_train_options options;
  ktm_train_options_init(&options);
  options.topics = 3;
  options.sweeps = 3;
  options.threads = 1;
  ktm_model* model = nullptr;
  REQUIRE(ktm_train(corpus, features, "graph", &options, &model) == KTM_OK);
  CHECK(ktm_model_feature_kind(model) == 1);

  std::vector<double> probs(3);
  REQUIRE(ktm_model_predict_node(model, "n7", probs.data(), nullptr) == KTM_OK);
  CHECK(std::abs(probs[0] + probs[1] + probs[2] - 1.0) < 1e-12);
  CHECK(ktm_model_predict_node(model, "stranger", probs.data(), nullptr) ==
        KTM_ERROR_UNSUPPORTED);

  // Graph models rebuild their embedding on load; predictions must agree
  // bit for bit.
  auto model_dir = (dir / "graph_model").string();
  REQUIRE(ktm_model_save(model, model_dir.c_str()) == KTM_OK);
  ktm_model* loaded = nullptr;
  REQUIRE(ktm_model_load(model_dir.c_str(), &loaded) == KTM_OK);
  std::vector<double> probs2(3);
  REQUIRE(ktm_model_predict_node(loaded, "n7", probs2.data(), nullptr) == KTM_OK);
  for (int t = 0; t < 3; ++t) {
    CHECK(probs[static_cast<size_t>(t)] == probs2[static_cast<size_t>(t)]);
  }
  ktm_model_close(loaded);

  ktm_model_close(model);
  ktm_features_close(features);
  ktm_corpus_close(corpus);
}

TEST_CASE("bridge check through the C surface") {
  std::vector<int32_t> grid = {0, 20};
  std::vector<double> rows(grid.size() * 5);
  REQUIRE(ktm_bridge_check(6, grid.data(), 2, 2, 1500, 9, 1, rows.data()) == KTM_OK);
  CHECK(rows[0] == 0.0);
  CHECK(rows[5] == 20.0);
  for (double v : rows) CHECK(std::isfinite(v));
  CHECK(ktm_bridge_check(6, nullptr, 0, 2, 1500, 9, 1, rows.data()) ==
        KTM_ERROR_INVALID_ARGUMENT);
  // Too few kept samples for a trustworthy chain.
  CHECK(ktm_bridge_check(6, grid.data(), 2, 2, 10, 9, 1, rows.data()) ==
        KTM_ERROR_INVALID_ARGUMENT);
}
