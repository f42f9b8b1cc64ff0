#include "ktm/kernels.hpp"

#include "ktm/errors.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>

namespace ktm {

namespace {

constexpr int kRqParams = 4;  // amplitude, length_scale, mixture_shape, author_mismatch

struct RqParts {
  double value;
  double r2;             // full squared distance
  double mismatch_term;  // author contribution to r2
  double shape_factor;   // (1 + r2 / (2 m))^(-m - 1)
};

RqParts rq_parts(const KernelSpec& s, double dt, bool same_author) {
  RqParts p;
  double scaled_dt = dt / s.length_scale;
  p.mismatch_term = 0.0;
  if (!same_author) {
    double scaled_mismatch = s.author_mismatch_distance / s.length_scale;
    p.mismatch_term = scaled_mismatch * scaled_mismatch;
  }
  p.r2 = scaled_dt * scaled_dt + p.mismatch_term;
  double u = 1.0 + p.r2 / (2.0 * s.mixture_shape);
  p.value = s.amplitude * std::pow(u, -s.mixture_shape);
  p.shape_factor = std::pow(u, -s.mixture_shape - 1.0);
  return p;
}

// d k / d log(param) for the rational quadratic, reusing the shared parts.
void rq_log_derivs(const KernelSpec& s, const RqParts& p, double* out) {
  double u = 1.0 + p.r2 / (2.0 * s.mixture_shape);
  out[0] = p.value;                                        // log amplitude
  out[1] = s.amplitude * p.r2 * p.shape_factor;            // log length_scale
  // log mixture_shape: d/dm of exp(-m log u) times m
  out[2] = s.mixture_shape * p.value *
           (-std::log(u) + p.r2 / (2.0 * s.mixture_shape * u));
  // log author_mismatch_distance: r2 gains 2 * mismatch_term
  out[3] = -s.amplitude * p.mismatch_term * p.shape_factor;
}

double graph_sq_dist(const KernelSpec& s, const Eigen::VectorXd& a,
                     const Eigen::VectorXd& b) {
  Eigen::VectorXd diff = a - b;
  return (s.graph_scales.array() * diff.array().square()).sum();
}

}  // namespace

const char* kernel_kind_name(KernelKind kind) {
  switch (kind) {
    case KernelKind::rational_quadratic_time_author: return "rq";
    case KernelKind::graph_embedding: return "graph";
    case KernelKind::constant: return "constant";
  }
  return "unknown";
}

KernelKind kernel_kind_from_name(const std::string& name) {
  if (name == "rq") return KernelKind::rational_quadratic_time_author;
  if (name == "graph") return KernelKind::graph_embedding;
  if (name == "constant") return KernelKind::constant;
  fail(ErrorCode::unsupported, "unknown kernel variant: '" + name + "'");
}

KernelSpec KernelSpec::rational_quadratic(double amplitude, double length_scale,
                                          double mixture_shape,
                                          double author_mismatch_distance) {
  KernelSpec s;
  s.kind = KernelKind::rational_quadratic_time_author;
  s.amplitude = amplitude;
  s.length_scale = length_scale;
  s.mixture_shape = mixture_shape;
  s.author_mismatch_distance = author_mismatch_distance;
  s.validate();
  return s;
}

KernelSpec KernelSpec::graph(double amplitude, Eigen::VectorXd scales) {
  KernelSpec s;
  s.kind = KernelKind::graph_embedding;
  s.amplitude = amplitude;
  s.graph_scales = std::move(scales);
  s.validate();
  return s;
}

KernelSpec KernelSpec::graph_uniform(double amplitude, double scale, int coords) {
  return graph(amplitude, Eigen::VectorXd::Constant(coords, scale));
}

KernelSpec KernelSpec::constant(double amplitude) {
  KernelSpec s;
  s.kind = KernelKind::constant;
  s.amplitude = amplitude;
  s.validate();
  return s;
}

void KernelSpec::validate() const {
  Eigen::VectorXd p = params();
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    require(std::isfinite(p[i]) && p[i] > 0.0, ErrorCode::invalid_argument,
            "kernel parameter '" + param_names()[static_cast<size_t>(i)] +
                "' must be positive and finite");
  }
}

std::vector<std::string> KernelSpec::param_names() const {
  switch (kind) {
    case KernelKind::rational_quadratic_time_author:
      return {"amplitude", "length_scale", "mixture_shape", "author_mismatch_distance"};
    case KernelKind::graph_embedding: {
      std::vector<std::string> names = {"amplitude"};
      for (Eigen::Index i = 0; i < graph_scales.size(); ++i) {
        names.push_back("scale_" + std::to_string(i));
      }
      return names;
    }
    case KernelKind::constant:
      return {"amplitude"};
  }
  return {};
}

Eigen::VectorXd KernelSpec::params() const {
  switch (kind) {
    case KernelKind::rational_quadratic_time_author: {
      Eigen::VectorXd p(kRqParams);
      p << amplitude, length_scale, mixture_shape, author_mismatch_distance;
      return p;
    }
    case KernelKind::graph_embedding: {
      Eigen::VectorXd p(1 + graph_scales.size());
      p[0] = amplitude;
      p.tail(graph_scales.size()) = graph_scales;
      return p;
    }
    case KernelKind::constant: {
      Eigen::VectorXd p(1);
      p[0] = amplitude;
      return p;
    }
  }
  return {};
}

Eigen::VectorXd KernelSpec::log_params() const { return params().array().log(); }

void KernelSpec::set_params(const Eigen::VectorXd& p) {
  switch (kind) {
    case KernelKind::rational_quadratic_time_author:
      require(p.size() == kRqParams, ErrorCode::dimension, "rq kernel expects 4 parameters");
      amplitude = p[0];
      length_scale = p[1];
      mixture_shape = p[2];
      author_mismatch_distance = p[3];
      break;
    case KernelKind::graph_embedding:
      require(p.size() == 1 + graph_scales.size(), ErrorCode::dimension,
              "graph kernel parameter count mismatch");
      amplitude = p[0];
      graph_scales = p.tail(graph_scales.size());
      break;
    case KernelKind::constant:
      require(p.size() == 1, ErrorCode::dimension, "constant kernel expects 1 parameter");
      amplitude = p[0];
      break;
  }
  validate();
}

void KernelSpec::set_log_params(const Eigen::VectorXd& lp) {
  set_params(lp.array().exp());
}

GraphEmbedding graph_embed(int num_nodes, const std::vector<std::pair<int, int>>& edges) {
  require(num_nodes >= 1, ErrorCode::invalid_argument, "graph needs at least one node");
  std::vector<std::vector<int>> adj(static_cast<size_t>(num_nodes));
  for (const auto& [a, b] : edges) {
    require(a >= 0 && a < num_nodes && b >= 0 && b < num_nodes,
            ErrorCode::invalid_argument, "edge endpoint out of range");
    if (a == b) continue;
    adj[static_cast<size_t>(a)].push_back(b);
    adj[static_cast<size_t>(b)].push_back(a);
  }

  const int unreached = -1;
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(num_nodes, num_nodes);
  int diameter = 0;
  bool any_unreached = false;
  std::vector<int> dist(static_cast<size_t>(num_nodes));
  for (int src = 0; src < num_nodes; ++src) {
    std::fill(dist.begin(), dist.end(), unreached);
    dist[static_cast<size_t>(src)] = 0;
    std::deque<int> queue{src};
    while (!queue.empty()) {
      int u = queue.front();
      queue.pop_front();
      for (int v : adj[static_cast<size_t>(u)]) {
        if (dist[static_cast<size_t>(v)] == unreached) {
          dist[static_cast<size_t>(v)] = dist[static_cast<size_t>(u)] + 1;
          queue.push_back(v);
        }
      }
    }
    for (int j = 0; j < num_nodes; ++j) {
      int d = dist[static_cast<size_t>(j)];
      if (d == unreached) {
        any_unreached = true;
        x(src, j) = unreached;
      } else {
        diameter = std::max(diameter, d);
        x(src, j) = d;
      }
    }
  }

  GraphEmbedding emb;
  emb.cap = diameter + 1;
  emb.capped = any_unreached;
  if (any_unreached) {
    x = (x.array() < 0).select(static_cast<double>(emb.cap), x);
  }
  emb.x = std::move(x);
  return emb;
}

FeatureSpace FeatureSpace::euclidean(Eigen::MatrixXd phi) {
  require(phi.rows() >= 1, ErrorCode::invalid_argument, "feature matrix needs rows");
  require(phi.allFinite(), ErrorCode::invalid_argument, "features must be finite");
  FeatureSpace f;
  f.kind_ = Kind::euclidean;
  f.phi_ = std::move(phi);
  return f;
}

FeatureSpace FeatureSpace::graph(std::vector<std::string> nodes,
                                 std::vector<std::pair<int, int>> edges) {
  GraphEmbedding emb = graph_embed(static_cast<int>(nodes.size()), edges);
  FeatureSpace f;
  f.kind_ = Kind::graph;
  f.phi_ = std::move(emb.x);
  f.nodes_ = std::move(nodes);
  f.edges_ = std::move(edges);
  f.capped_ = emb.capped;
  f.cap_ = emb.cap;
  return f;
}

int FeatureSpace::node_index(const std::string& name) const {
  auto it = std::find(nodes_.begin(), nodes_.end(), name);
  return it == nodes_.end() ? -1 : static_cast<int>(it - nodes_.begin());
}

QueryPoint QueryPoint::at(Eigen::VectorXd features) {
  QueryPoint q;
  q.phi = std::move(features);
  return q;
}

QueryPoint QueryPoint::row(int index) {
  QueryPoint q;
  q.index = index;
  return q;
}

double rq_time_author(const KernelSpec& spec, double time_a, double author_a,
                      double time_b, double author_b) {
  require(spec.kind == KernelKind::rational_quadratic_time_author,
          ErrorCode::invalid_argument, "rq_time_author needs an rq kernel spec");
  return rq_parts(spec, time_a - time_b, author_a == author_b).value;
}

double graph_kernel(const KernelSpec& spec, const Eigen::VectorXd& x_a,
                    const Eigen::VectorXd& x_b) {
  require(spec.kind == KernelKind::graph_embedding, ErrorCode::invalid_argument,
          "graph_kernel needs a graph kernel spec");
  require(x_a.size() == x_b.size() && x_a.size() == spec.graph_scales.size(),
          ErrorCode::dimension, "embedding row / scale dimension mismatch");
  return spec.amplitude * std::exp(-0.5 * graph_sq_dist(spec, x_a, x_b));
}

namespace {

// Euclidean rows for the rq kernel: column 0 is time, column 1 (when present)
// the author identity. Pure time features get no mismatch term.
double rq_rows(const KernelSpec& spec, const Eigen::VectorXd& a,
               const Eigen::VectorXd& b) {
  require(a.size() >= 1 && b.size() >= 1, ErrorCode::dimension,
          "rq kernel needs at least a time column");
  bool same_author = a.size() < 2 || b.size() < 2 || a[1] == b[1];
  return rq_parts(spec, a[0] - b[0], same_author).value;
}

Eigen::VectorXd feature_row(const FeatureSpace& f, int i) {
  require(i >= 0 && i < f.num_rows(), ErrorCode::invalid_argument,
          "feature row index out of range");
  return f.phi().row(i);
}

}  // namespace

double kernel_value(const KernelSpec& spec, const FeatureSpace& features, int i, int j) {
  return kernel_query(spec, features, QueryPoint::row(i), j);
}

double kernel_query(const KernelSpec& spec, const FeatureSpace& features,
                    const QueryPoint& q, int j) {
  Eigen::VectorXd b = feature_row(features, j);
  switch (spec.kind) {
    case KernelKind::constant:
      return spec.amplitude;
    case KernelKind::rational_quadratic_time_author: {
      require(features.kind() == FeatureSpace::Kind::euclidean, ErrorCode::unsupported,
              "rq kernel needs Euclidean features");
      Eigen::VectorXd a = q.is_index() ? feature_row(features, q.index) : q.phi;
      return rq_rows(spec, a, b);
    }
    case KernelKind::graph_embedding: {
      require(features.kind() == FeatureSpace::Kind::graph, ErrorCode::unsupported,
              "graph kernel needs a graph feature space");
      require(q.is_index(), ErrorCode::unsupported,
              "graph kernel queries must reference an embedded node");
      return graph_kernel(spec, feature_row(features, q.index), b);
    }
  }
  fail(ErrorCode::unsupported, "unknown kernel variant");
}

double kernel_self(const KernelSpec& spec, const FeatureSpace& features,
                   const QueryPoint& q) {
  switch (spec.kind) {
    case KernelKind::constant:
    case KernelKind::rational_quadratic_time_author:
    case KernelKind::graph_embedding:
      // All supported variants are stationary in their induced distance.
      (void)features;
      (void)q;
      return spec.amplitude;
  }
  fail(ErrorCode::unsupported, "unknown kernel variant");
}

std::vector<int> all_rows(const FeatureSpace& features) {
  std::vector<int> idx(static_cast<size_t>(features.num_rows()));
  std::iota(idx.begin(), idx.end(), 0);
  return idx;
}

Gram gram(const KernelSpec& spec, const FeatureSpace& features,
          const std::vector<int>& subset, bool with_derivatives) {
  spec.validate();
  const int n = static_cast<int>(subset.size());
  require(n >= 1, ErrorCode::invalid_argument, "gram needs a non-empty subset");
  for (int i : subset) {
    require(i >= 0 && i < features.num_rows(), ErrorCode::invalid_argument,
            "gram subset index out of range");
  }

  Gram g;
  g.param_names = spec.param_names();
  const int n_params = static_cast<int>(g.param_names.size());
  g.k.resize(n, n);
  if (with_derivatives) {
    g.dk_dlog.assign(static_cast<size_t>(n_params), Eigen::MatrixXd::Zero(n, n));
  }

  switch (spec.kind) {
    case KernelKind::constant: {
      g.k.setConstant(spec.amplitude);
      if (with_derivatives) g.dk_dlog[0].setConstant(spec.amplitude);
      break;
    }
    case KernelKind::rational_quadratic_time_author: {
      require(features.kind() == FeatureSpace::Kind::euclidean, ErrorCode::unsupported,
              "rq kernel needs Euclidean features");
      const auto& phi = features.phi();
      const bool has_author = phi.cols() >= 2;
      double d[kRqParams];
      for (int r = 0; r < n; ++r) {
        for (int c = 0; c <= r; ++c) {
          int i = subset[static_cast<size_t>(r)];
          int j = subset[static_cast<size_t>(c)];
          bool same = !has_author || phi(i, 1) == phi(j, 1);
          RqParts parts = rq_parts(spec, phi(i, 0) - phi(j, 0), same);
          g.k(r, c) = parts.value;
          g.k(c, r) = parts.value;
          if (with_derivatives) {
            rq_log_derivs(spec, parts, d);
            for (int p = 0; p < kRqParams; ++p) {
              g.dk_dlog[static_cast<size_t>(p)](r, c) = d[p];
              g.dk_dlog[static_cast<size_t>(p)](c, r) = d[p];
            }
          }
        }
      }
      break;
    }
    case KernelKind::graph_embedding: {
      require(features.kind() == FeatureSpace::Kind::graph, ErrorCode::unsupported,
              "graph kernel needs a graph feature space");
      require(spec.graph_scales.size() == features.num_cols(), ErrorCode::dimension,
              "graph kernel scale count must match embedding width");
      const auto& x = features.phi();
      for (int r = 0; r < n; ++r) {
        for (int c = 0; c <= r; ++c) {
          int i = subset[static_cast<size_t>(r)];
          int j = subset[static_cast<size_t>(c)];
          Eigen::VectorXd diff = x.row(i) - x.row(j);
          Eigen::ArrayXd sq = diff.array().square();
          double v = spec.amplitude *
                     std::exp(-0.5 * (spec.graph_scales.array() * sq).sum());
          g.k(r, c) = v;
          g.k(c, r) = v;
          if (with_derivatives) {
            g.dk_dlog[0](r, c) = v;
            g.dk_dlog[0](c, r) = v;
            for (Eigen::Index p = 0; p < spec.graph_scales.size(); ++p) {
              double dv = v * (-0.5 * spec.graph_scales[p] * sq[p]);
              g.dk_dlog[static_cast<size_t>(1 + p)](r, c) = dv;
              g.dk_dlog[static_cast<size_t>(1 + p)](c, r) = dv;
            }
          }
        }
      }
      break;
    }
  }
  return g;
}

}  // namespace ktm
