#include "ktm/csv.hpp"
#include "ktm/engine.hpp"
#include "ktm/errors.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <string>

namespace ktm {

namespace {

constexpr int kFormatVersion = 1;

using nlohmann::json;

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  require(out.good(), ErrorCode::io, "cannot write " + path.string());
  return out;
}

CsvTable load_table(const std::filesystem::path& path,
                    const std::vector<std::string>& header) {
  CsvTable t = read_csv(path.string());
  require(t.header == header, ErrorCode::io,
          path.string() + ": unexpected header");
  return t;
}

json kernel_to_json(const KernelSpec& spec) {
  json j;
  j["variant"] = kernel_kind_name(spec.kind);
  json params = json::object();
  auto names = spec.param_names();
  Eigen::VectorXd values = spec.params();
  for (size_t i = 0; i < names.size(); ++i) {
    params[names[i]] = values[static_cast<Eigen::Index>(i)];
  }
  j["params"] = params;
  if (spec.kind == KernelKind::graph_embedding) {
    j["num_scales"] = spec.graph_scales.size();
  }
  return j;
}

KernelSpec kernel_from_json(const json& j) {
  KernelSpec spec;
  spec.kind = kernel_kind_from_name(j.at("variant").get<std::string>());
  if (spec.kind == KernelKind::graph_embedding) {
    spec.graph_scales.resize(j.at("num_scales").get<Eigen::Index>());
  }
  auto names = spec.param_names();
  Eigen::VectorXd values(static_cast<Eigen::Index>(names.size()));
  for (size_t i = 0; i < names.size(); ++i) {
    values[static_cast<Eigen::Index>(i)] = j.at("params").at(names[i]).get<double>();
  }
  spec.set_params(values);
  return spec;
}

}  // namespace

void save_model(const ModelState& state, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::path root(dir);
  std::error_code ec;
  fs::create_directories(root, ec);
  require(!ec, ErrorCode::io, "cannot create model directory: " + dir);

  const int k = state.num_topics();
  const int v = state.topic_word.vocab_size();
  const int d = state.num_docs();

  json manifest;
  manifest["format_version"] = kFormatVersion;
  manifest["topics"] = k;
  manifest["vocab_size"] = v;
  manifest["num_docs"] = d;
  manifest["sweep_index"] = state.sweep_index;
  manifest["bridge_clamped"] = state.bridge_stats.clamped;
  const bool has_messages = state.config.use_gp && !state.messages.empty() &&
                            state.messages.front().means.size() > 0;
  manifest["has_messages"] = has_messages;
  json config;
  config["max_sweeps"] = state.config.max_sweeps;
  config["hyperopt_every"] = state.config.hyperopt_every;
  config["hyperopt_steps"] = state.config.hyperopt_steps;
  config["beta"] = state.config.beta;
  config["passes_per_doc"] = state.config.passes_per_doc;
  config["seed"] = state.config.seed;
  config["alpha_floor"] = state.config.alpha_floor;
  config["initial_tau"] = state.config.initial_tau;
  config["use_gp"] = state.config.use_gp;
  config["fixed_prior_alpha"] = state.config.fixed_prior_alpha;
  config["jitter_initial"] = state.config.jitter.initial;
  config["jitter_growth"] = state.config.jitter.growth;
  config["jitter_max"] = state.config.jitter.max;
  manifest["config"] = config;
  manifest["kernel"] = kernel_to_json(state.kernel);
  json hypers;
  hypers["log_tau"] = state.hypers.log_tau;
  hypers["log_kernel_params"] = std::vector<double>(
      state.hypers.log_kernel_params.begin(), state.hypers.log_kernel_params.end());
  manifest["hypers"] = hypers;
  std::string feature_kind = "none";
  if (state.features) {
    feature_kind =
        state.features->kind() == FeatureSpace::Kind::graph ? "graph" : "euclidean";
  }
  manifest["feature_kind"] = feature_kind;
  {
    auto out = open_out(root / "manifest.json");
    out << manifest.dump(2) << "\n";
  }

  {
    auto out = open_out(root / "topic_counts.csv");
    out << "topic,word_id,count\n";
    for (int t = 0; t < k; ++t) {
      for (int w = 0; w < v; ++w) {
        out << t << ',' << w << ',' << format_double(state.topic_word.counts(t, w))
            << "\n";
      }
    }
  }
  {
    Eigen::MatrixXd theta = state.theta();
    auto out = open_out(root / "theta.csv");
    out << "topic,word_id,probability\n";
    for (int t = 0; t < k; ++t) {
      for (int w = 0; w < v; ++w) {
        out << t << ',' << w << ',' << format_double(theta(t, w)) << "\n";
      }
    }
  }
  {
    auto out = open_out(root / "doc_beliefs.csv");
    out << "doc,topic,alpha\n";
    for (int dd = 0; dd < d; ++dd) {
      for (int t = 0; t < k; ++t) {
        out << dd << ',' << t << ',' << format_double(state.doc_alpha(dd, t)) << "\n";
      }
    }
  }
  {
    auto out = open_out(root / "trace.csv");
    out << "sweep,perplexity\n";
    for (size_t s = 0; s < state.perplexity_trace.size(); ++s) {
      out << (s + 1) << ',' << format_double(state.perplexity_trace[s]) << "\n";
    }
  }
  if (has_messages) {
    auto out = open_out(root / "messages.csv");
    out << "topic,doc,mean,variance\n";
    for (int t = 0; t < k; ++t) {
      const auto& msg = state.messages[static_cast<size_t>(t)];
      for (int dd = 0; dd < d; ++dd) {
        out << t << ',' << dd << ',' << format_double(msg.means[dd]) << ','
            << format_double(msg.bridge_variances[dd]) << "\n";
      }
    }
  }
  if (state.features) {
    if (state.features->kind() == FeatureSpace::Kind::euclidean) {
      auto out = open_out(root / "features.csv");
      out << "row";
      for (int c = 0; c < state.features->num_cols(); ++c) out << ",f" << c;
      out << "\n";
      for (int r = 0; r < state.features->num_rows(); ++r) {
        out << r;
        for (int c = 0; c < state.features->num_cols(); ++c) {
          out << ',' << format_double(state.features->phi()(r, c));
        }
        out << "\n";
      }
    } else {
      auto out = open_out(root / "nodes.csv");
      out << "row,node\n";
      for (int r = 0; r < state.features->num_rows(); ++r) {
        out << r << ',' << state.features->nodes()[static_cast<size_t>(r)] << "\n";
      }
      auto edges = open_out(root / "edges.txt");
      for (const auto& [a, b] : state.features->edges()) {
        edges << state.features->nodes()[static_cast<size_t>(a)] << ' '
              << state.features->nodes()[static_cast<size_t>(b)] << "\n";
      }
    }
  }
}

ModelState load_model(const std::string& dir) {
  namespace fs = std::filesystem;
  fs::path root(dir);

  std::ifstream min(root / "manifest.json");
  require(min.good(), ErrorCode::io, "cannot open model manifest in " + dir);
  json manifest;
  try {
    manifest = json::parse(min);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::io, "corrupt model manifest: " + std::string(e.what()));
  }
  const int version = manifest.at("format_version").get<int>();
  require(version == kFormatVersion, ErrorCode::version_mismatch,
          "model format version " + std::to_string(version) +
              " is not supported (expected " + std::to_string(kFormatVersion) + ")");

  const int k = manifest.at("topics").get<int>();
  const int v = manifest.at("vocab_size").get<int>();
  const int d = manifest.at("num_docs").get<int>();
  const json& config = manifest.at("config");

  ModelState state;
  state.config.topics = k;
  state.config.max_sweeps = config.at("max_sweeps").get<int>();
  state.config.hyperopt_every = config.at("hyperopt_every").get<int>();
  state.config.hyperopt_steps = config.at("hyperopt_steps").get<int>();
  state.config.beta = config.at("beta").get<double>();
  state.config.passes_per_doc = config.at("passes_per_doc").get<int>();
  state.config.seed = config.at("seed").get<std::uint64_t>();
  state.config.alpha_floor = config.at("alpha_floor").get<double>();
  state.config.initial_tau = config.at("initial_tau").get<double>();
  state.config.use_gp = config.at("use_gp").get<bool>();
  state.config.fixed_prior_alpha = config.at("fixed_prior_alpha").get<double>();
  state.config.jitter.initial = config.at("jitter_initial").get<double>();
  state.config.jitter.growth = config.at("jitter_growth").get<double>();
  state.config.jitter.max = config.at("jitter_max").get<double>();
  state.sweep_index = manifest.at("sweep_index").get<int>();
  state.bridge_stats.clamped = manifest.at("bridge_clamped").get<std::uint64_t>();
  state.kernel = kernel_from_json(manifest.at("kernel"));
  const json& hypers = manifest.at("hypers");
  auto log_params = hypers.at("log_kernel_params").get<std::vector<double>>();
  state.hypers.log_kernel_params =
      Eigen::Map<const Eigen::VectorXd>(log_params.data(),
                                        static_cast<Eigen::Index>(log_params.size()));
  state.hypers.log_tau = hypers.at("log_tau").get<double>();

  state.topic_word = TopicWordModel(k, v, state.config.beta);
  {
    CsvTable t = load_table(root / "topic_counts.csv", {"topic", "word_id", "count"});
    require(static_cast<int>(t.rows.size()) == k * v, ErrorCode::io,
            "topic_counts.csv is truncated");
    for (const auto& row : t.rows) {
      int tt = static_cast<int>(parse_int(row[0]));
      int ww = static_cast<int>(parse_int(row[1]));
      require(tt >= 0 && tt < k && ww >= 0 && ww < v, ErrorCode::io,
              "topic_counts.csv: index out of range");
      state.topic_word.counts(tt, ww) = parse_double(row[2]);
    }
    state.topic_word.topic_totals = state.topic_word.counts.rowwise().sum();
  }
  {
    CsvTable t = load_table(root / "doc_beliefs.csv", {"doc", "topic", "alpha"});
    require(static_cast<int>(t.rows.size()) == d * k, ErrorCode::io,
            "doc_beliefs.csv is truncated");
    state.doc_alpha.resize(d, k);
    for (const auto& row : t.rows) {
      int dd = static_cast<int>(parse_int(row[0]));
      int tt = static_cast<int>(parse_int(row[1]));
      require(dd >= 0 && dd < d && tt >= 0 && tt < k, ErrorCode::io,
              "doc_beliefs.csv: index out of range");
      state.doc_alpha(dd, tt) = parse_double(row[2]);
    }
  }
  {
    CsvTable t = load_table(root / "trace.csv", {"sweep", "perplexity"});
    state.perplexity_trace.reserve(t.rows.size());
    for (const auto& row : t.rows) {
      state.perplexity_trace.push_back(parse_double(row[1]));
    }
    require(static_cast<int>(state.perplexity_trace.size()) == state.sweep_index,
            ErrorCode::io, "trace.csv does not match sweep_index");
  }

  const std::string feature_kind = manifest.at("feature_kind").get<std::string>();
  if (feature_kind == "euclidean") {
    CsvTable t = read_csv((root / "features.csv").string());
    require(!t.header.empty() && t.header[0] == "row", ErrorCode::io,
            "features.csv: unexpected header");
    const int cols = static_cast<int>(t.header.size()) - 1;
    require(cols >= 1 && static_cast<int>(t.rows.size()) == d, ErrorCode::io,
            "features.csv is truncated");
    Eigen::MatrixXd phi(d, cols);
    for (int r = 0; r < d; ++r) {
      const auto& row = t.rows[static_cast<size_t>(r)];
      for (int c = 0; c < cols; ++c) {
        phi(r, c) = parse_double(row[static_cast<size_t>(c + 1)]);
      }
    }
    state.features = std::make_shared<FeatureSpace>(FeatureSpace::euclidean(std::move(phi)));
  } else if (feature_kind == "graph") {
    CsvTable t = load_table(root / "nodes.csv", {"row", "node"});
    require(static_cast<int>(t.rows.size()) == d, ErrorCode::io, "nodes.csv is truncated");
    std::vector<std::string> nodes;
    nodes.reserve(t.rows.size());
    for (const auto& row : t.rows) nodes.push_back(row[1]);
    std::vector<std::pair<int, int>> edges;
    {
      std::ifstream ein(root / "edges.txt");
      require(ein.good(), ErrorCode::io, "cannot open edges.txt");
      std::string a;
      std::string b;
      while (ein >> a >> b) {
        auto find = [&](const std::string& name) {
          for (size_t i = 0; i < nodes.size(); ++i) {
            if (nodes[i] == name) return static_cast<int>(i);
          }
          fail(ErrorCode::io, "edges.txt references unknown node '" + name + "'");
        };
        edges.emplace_back(find(a), find(b));
      }
    }
    state.features =
        std::make_shared<FeatureSpace>(FeatureSpace::graph(std::move(nodes), std::move(edges)));
  } else {
    require(feature_kind == "none", ErrorCode::io,
            "unknown feature_kind '" + feature_kind + "'");
  }

  state.messages.assign(static_cast<size_t>(k), TopicMessages{});
  if (manifest.at("has_messages").get<bool>()) {
    CsvTable t = load_table(root / "messages.csv", {"topic", "doc", "mean", "variance"});
    require(static_cast<int>(t.rows.size()) == k * d, ErrorCode::io,
            "messages.csv is truncated");
    for (int tt = 0; tt < k; ++tt) {
      auto& msg = state.messages[static_cast<size_t>(tt)];
      msg.means.resize(d);
      msg.bridge_variances.resize(d);
    }
    for (const auto& row : t.rows) {
      int tt = static_cast<int>(parse_int(row[0]));
      int dd = static_cast<int>(parse_int(row[1]));
      require(tt >= 0 && tt < k && dd >= 0 && dd < d, ErrorCode::io,
              "messages.csv: index out of range");
      state.messages[static_cast<size_t>(tt)].means[dd] = parse_double(row[2]);
      state.messages[static_cast<size_t>(tt)].bridge_variances[dd] = parse_double(row[3]);
    }
    // Refitting from the stored messages reproduces the factorizations
    // bit for bit; the GPs themselves are not serialized.
    const double tau = state.hypers.tau();
    state.gps.reserve(static_cast<size_t>(k));
    for (int tt = 0; tt < k; ++tt) {
      GaussianMessages msgs(state.messages[static_cast<size_t>(tt)].means,
                            state.messages[static_cast<size_t>(tt)].bridge_variances, tau);
      state.gps.push_back(fit(state.kernel, state.features, msgs, state.config.jitter));
    }
  }
  return state;
}

}  // namespace ktm
