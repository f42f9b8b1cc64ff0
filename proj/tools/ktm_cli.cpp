// Command-line front end; talks to the library exclusively through the C API.

#include "ktm/ktm_c.h"

#include <CLI11.hpp>

#include <charconv>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct CorpusCloser {
  void operator()(ktm_corpus* c) const { ktm_corpus_close(c); }
};
struct FeaturesCloser {
  void operator()(ktm_features* f) const { ktm_features_close(f); }
};
struct ModelCloser {
  void operator()(ktm_model* m) const { ktm_model_close(m); }
};

using CorpusPtr = std::unique_ptr<ktm_corpus, CorpusCloser>;
using FeaturesPtr = std::unique_ptr<ktm_features, FeaturesCloser>;
using ModelPtr = std::unique_ptr<ktm_model, ModelCloser>;

[[noreturn]] void die(ktm_status status, const std::string& context) {
  std::cerr << "error: " << context << ": " << ktm_status_name(status) << ": "
            << ktm_last_error() << "\n";
  std::exit(kExitRuntime);
}

void check(ktm_status status, const std::string& context) {
  if (status != KTM_OK) die(status, context);
}

// Locale-independent shortest round-trip formatting.
std::string fmt(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) return "nan";
  return std::string(buf, ptr);
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out.good()) {
    std::cerr << "error: cannot write " << path << "\n";
    std::exit(kExitRuntime);
  }
  return out;
}

// --at accepts either comma-separated numbers (Euclidean models) or a node
// name (graph models).
bool parse_numbers(const std::string& text, std::vector<double>& out) {
  out.clear();
  std::stringstream ss(text);
  std::string field;
  while (std::getline(ss, field, ',')) {
    try {
      size_t used = 0;
      out.push_back(std::stod(field, &used));
      if (used != field.size()) return false;
    } catch (...) {
      return false;
    }
  }
  return !out.empty();
}

struct TrainArgs {
  std::string corpus;
  std::string vocab;
  std::string meta;
  std::string graph;
  std::string kernel = "rq";
  std::string out_dir;
  ktm_train_options options{};
};

int run_train(const TrainArgs& args) {
  CorpusPtr corpus;
  {
    ktm_corpus* raw = nullptr;
    check(ktm_corpus_open(args.corpus.c_str(),
                          args.vocab.empty() ? nullptr : args.vocab.c_str(), &raw),
          "loading corpus");
    corpus.reset(raw);
  }
  FeaturesPtr features;
  {
    ktm_features* raw = nullptr;
    check(ktm_features_open(args.meta.c_str(),
                            args.graph.empty() ? nullptr : args.graph.c_str(),
                            corpus.get(), &raw),
          "loading metadata");
    features.reset(raw);
  }
  ModelPtr model;
  {
    ktm_model* raw = nullptr;
    check(ktm_train(corpus.get(), features.get(), args.kernel.c_str(), &args.options,
                    &raw),
          "training");
    model.reset(raw);
  }
  check(ktm_model_save(model.get(), args.out_dir.c_str()), "saving model");
  std::cout << "trained " << ktm_model_num_topics(model.get()) << " topics on "
            << ktm_corpus_num_docs(corpus.get()) << " documents; model written to "
            << args.out_dir << "\n";
  return 0;
}

int run_eval(const std::string& model_dir, const std::string& corpus_path,
             const std::string& vocab_path, int passes, const std::string& trace_out) {
  ModelPtr model;
  {
    ktm_model* raw = nullptr;
    check(ktm_model_load(model_dir.c_str(), &raw), "loading model");
    model.reset(raw);
  }
  CorpusPtr corpus;
  {
    ktm_corpus* raw = nullptr;
    check(ktm_corpus_open(corpus_path.c_str(),
                          vocab_path.empty() ? nullptr : vocab_path.c_str(), &raw),
          "loading corpus");
    corpus.reset(raw);
  }
  double value = 0.0;
  check(ktm_model_eval_perplexity(model.get(), corpus.get(), passes, &value),
        "evaluating perplexity");
  std::cout << fmt(value) << "\n";

  if (!trace_out.empty()) {
    int64_t len = 0;
    check(ktm_model_trace(model.get(), nullptr, 0, &len), "reading trace");
    std::vector<double> trace(static_cast<size_t>(len));
    if (len > 0) {
      check(ktm_model_trace(model.get(), trace.data(), len, &len), "reading trace");
    }
    auto out = open_output(trace_out);
    out << "sweep,perplexity\n";
    for (size_t i = 0; i < trace.size(); ++i) {
      out << (i + 1) << ',' << fmt(trace[i]) << "\n";
    }
  }
  return 0;
}

int run_predict(const std::string& model_dir, const std::string& at,
                const std::string& out_path) {
  ModelPtr model;
  {
    ktm_model* raw = nullptr;
    check(ktm_model_load(model_dir.c_str(), &raw), "loading model");
    model.reset(raw);
  }
  const int k = ktm_model_num_topics(model.get());
  std::vector<double> probs(static_cast<size_t>(k));
  std::vector<double> vars(static_cast<size_t>(k));

  std::vector<double> numbers;
  if (ktm_model_feature_kind(model.get()) == 1) {
    check(ktm_model_predict_node(model.get(), at.c_str(), probs.data(), vars.data()),
          "predicting at node '" + at + "'");
  } else if (parse_numbers(at, numbers)) {
    check(ktm_model_predict_point(model.get(), numbers.data(),
                                  static_cast<int32_t>(numbers.size()), probs.data(),
                                  vars.data()),
          "predicting at '" + at + "'");
  } else {
    std::cerr << "error: --at must be comma-separated numbers for this model\n";
    return kExitRuntime;
  }

  std::ostream* out = &std::cout;
  std::ofstream file;
  if (!out_path.empty()) {
    file = open_output(out_path);
    out = &file;
  }
  *out << "topic,probability,y_variance\n";
  for (int t = 0; t < k; ++t) {
    *out << t << ',' << fmt(probs[static_cast<size_t>(t)]) << ','
         << fmt(vars[static_cast<size_t>(t)]) << "\n";
  }
  return 0;
}

int run_bridge_check(int k, const std::string& grid_text, int reps, int n_mcmc,
                     std::uint64_t seed, int threads, const std::string& out_path) {
  std::vector<int32_t> grid;
  {
    std::stringstream ss(grid_text);
    std::string field;
    while (std::getline(ss, field, ',')) {
      try {
        grid.push_back(std::stoi(field));
      } catch (...) {
        std::cerr << "error: --grid must be comma-separated observation counts\n";
        return kExitRuntime;
      }
    }
  }
  if (grid.empty()) {
    std::cerr << "error: --grid is empty\n";
    return kExitRuntime;
  }
  std::vector<double> rows(grid.size() * 5);
  check(ktm_bridge_check(k, grid.data(), static_cast<int32_t>(grid.size()), reps,
                         n_mcmc, seed, threads, rows.data()),
        "running bridge check");

  std::ostream* out = &std::cout;
  std::ofstream file;
  if (!out_path.empty()) {
    file = open_output(out_path);
    out = &file;
  }
  *out << "# K=" << k << " repetitions=" << reps << " n_mcmc=" << n_mcmc
       << " seed=" << seed << " prior_cov=inverse-wishart(df=K+2, identity scale)\n";
  *out << "n_obs,bridge_err,bridge_sd,mcmc_err,mcmc_sd\n";
  for (size_t i = 0; i < grid.size(); ++i) {
    *out << static_cast<int>(rows[i * 5 + 0]) << ',' << fmt(rows[i * 5 + 1]) << ','
         << fmt(rows[i * 5 + 2]) << ',' << fmt(rows[i * 5 + 3]) << ','
         << fmt(rows[i * 5 + 4]) << "\n";
  }
  return 0;
}

int run_export_series(const std::string& model_dir, const std::string& grid_path,
                      const std::string& out_path) {
  ModelPtr model;
  {
    ktm_model* raw = nullptr;
    check(ktm_model_load(model_dir.c_str(), &raw), "loading model");
    model.reset(raw);
  }
  FeaturesPtr grid;
  {
    ktm_features* raw = nullptr;
    check(ktm_features_open(grid_path.c_str(), nullptr, nullptr, &raw),
          "loading prediction grid");
    grid.reset(raw);
  }
  const int k = ktm_model_num_topics(model.get());
  const int64_t rows = ktm_features_num_rows(grid.get());
  std::vector<double> probs(static_cast<size_t>(k));

  std::ostream* out = &std::cout;
  std::ofstream file;
  if (!out_path.empty()) {
    file = open_output(out_path);
    out = &file;
  }
  *out << "grid_point,topic,probability\n";
  char label[256];
  for (int64_t r = 0; r < rows; ++r) {
    check(ktm_features_row_label(grid.get(), r, label, sizeof(label)),
          "reading grid label");
    check(ktm_model_predict_row(model.get(), grid.get(), r, probs.data(), nullptr),
          std::string("predicting at grid point ") + label);
    for (int t = 0; t < k; ++t) {
      *out << label << ',' << t << ',' << fmt(probs[static_cast<size_t>(t)]) << "\n";
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kernel topic model: topic regression on document metadata"};
  app.require_subcommand(1);

  TrainArgs train_args;
  ktm_train_options_init(&train_args.options);
  auto* train = app.add_subcommand("train", "Train a model on a corpus");
  train->add_option("--corpus", train_args.corpus, "UCI bag-of-words file")->required();
  train->add_option("--vocab", train_args.vocab, "vocabulary file, one token per line");
  train->add_option("--meta", train_args.meta, "metadata CSV (doc_id + features)")
      ->required();
  train->add_option("--graph", train_args.graph, "edge list file (graph kernel)");
  train->add_option("--kernel", train_args.kernel, "kernel variant: rq | graph")
      ->check(CLI::IsMember({"rq", "graph"}));
  train->add_option("--topics", train_args.options.topics, "number of topics K");
  train->add_option("--sweeps", train_args.options.sweeps, "training sweeps");
  train->add_option("--hyperopt-every", train_args.options.hyperopt_every,
                    "sweeps between hyperparameter optimizations");
  train->add_option("--passes-per-doc", train_args.options.passes_per_doc,
                    "inner passes per document per sweep");
  train->add_option("--beta", train_args.options.beta, "topic-word Dirichlet prior");
  train->add_option("--tau", train_args.options.initial_tau, "initial observation noise");
  train->add_option("--seed", train_args.options.seed, "random seed");
  train->add_option("--threads", train_args.options.threads,
                    "worker cap (0 = available parallelism)");
  train->add_option("--out", train_args.out_dir, "output model directory")->required();

  std::string eval_model;
  std::string eval_corpus;
  std::string eval_vocab;
  std::string eval_trace;
  int eval_passes = 20;
  auto* eval = app.add_subcommand("eval-perplexity", "Perplexity of a corpus under a model");
  eval->add_option("--model", eval_model, "model directory")->required();
  eval->add_option("--corpus", eval_corpus, "UCI bag-of-words file")->required();
  eval->add_option("--vocab", eval_vocab, "vocabulary file");
  eval->add_option("--fold-in-passes", eval_passes, "fold-in passes per document");
  eval->add_option("--trace-out", eval_trace, "write per-sweep training trace CSV here");

  std::string predict_model;
  std::string predict_at;
  std::string predict_out;
  auto* predict = app.add_subcommand("predict", "Topic distribution at a metadata point");
  predict->add_option("--model", predict_model, "model directory")->required();
  predict->add_option("--at", predict_at,
                      "query: comma-separated feature values, or a node name")
      ->required();
  predict->add_option("--out", predict_out, "output CSV (default stdout)");

  int bc_k = 10;
  std::string bc_grid = "0,10,50,100,200";
  int bc_reps = 12;
  int bc_mcmc = 20000;
  std::uint64_t bc_seed = 0;
  int bc_threads = 0;
  std::string bc_out;
  auto* bridge = app.add_subcommand(
      "bridge-check", "Compare the Laplace bridge against MCMC on synthetic problems");
  bridge->add_option("--k", bc_k, "dimension");
  bridge->add_option("--grid", bc_grid, "comma-separated observation counts");
  bridge->add_option("--reps", bc_reps, "independent repetitions");
  bridge->add_option("--mcmc", bc_mcmc, "kept MCMC samples per chain");
  bridge->add_option("--seed", bc_seed, "random seed");
  bridge->add_option("--threads", bc_threads, "worker cap (0 = available parallelism)");
  bridge->add_option("--out", bc_out, "output CSV (default stdout)");

  std::string series_model;
  std::string series_grid;
  std::string series_out;
  auto* series = app.add_subcommand("export-topic-series",
                                    "Predicted topic distributions over a metadata grid");
  series->add_option("--model", series_model, "model directory")->required();
  series->add_option("--grid", series_grid, "metadata CSV of query points")->required();
  series->add_option("--out", series_out, "output CSV (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  if (train->parsed()) return run_train(train_args);
  if (eval->parsed()) {
    return run_eval(eval_model, eval_corpus, eval_vocab, eval_passes, eval_trace);
  }
  if (predict->parsed()) return run_predict(predict_model, predict_at, predict_out);
  if (bridge->parsed()) {
    return run_bridge_check(bc_k, bc_grid, bc_reps, bc_mcmc, bc_seed, bc_threads, bc_out);
  }
  if (series->parsed()) return run_export_series(series_model, series_grid, series_out);
  return kExitUsage;
}
