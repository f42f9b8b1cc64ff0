#pragma once

#include <Eigen/Core>

#include <string>
#include <utility>
#include <vector>

namespace ktm {

enum class KernelKind {
  rational_quadratic_time_author,
  graph_embedding,
  constant,  // testing only
};

const char* kernel_kind_name(KernelKind kind);
KernelKind kernel_kind_from_name(const std::string& name);

// Positive-definite kernel over document metadata. Parameters are plain
// positive reals; hyperparameter optimization works on their logs.
struct KernelSpec {
  KernelKind kind = KernelKind::rational_quadratic_time_author;

  // rational quadratic over (time, author identity)
  double amplitude = 1.0;
  double length_scale = 5.0;
  double mixture_shape = 1.0;
  double author_mismatch_distance = 5.0;

  // graph embedding kernel: per-coordinate scales, the diagonal of S
  Eigen::VectorXd graph_scales;

  static KernelSpec rational_quadratic(double amplitude, double length_scale,
                                       double mixture_shape,
                                       double author_mismatch_distance);
  static KernelSpec graph(double amplitude, Eigen::VectorXd scales);
  static KernelSpec graph_uniform(double amplitude, double scale, int coords);
  static KernelSpec constant(double amplitude);

  std::vector<std::string> param_names() const;
  Eigen::VectorXd params() const;
  Eigen::VectorXd log_params() const;
  void set_params(const Eigen::VectorXd& p);
  void set_log_params(const Eigen::VectorXd& lp);
  void validate() const;
};

// Shortest-path embedding of an undirected graph: row d holds the hop count
// from node d to every node. Pairs in different components get
// (finite diameter + 1) and the capped flag is set.
struct GraphEmbedding {
  Eigen::MatrixXd x;
  bool capped = false;
  int cap = 0;
};

GraphEmbedding graph_embed(int num_nodes, const std::vector<std::pair<int, int>>& edges);

// Document metadata: either rows of Euclidean features or a graph of named
// nodes with its precomputed shortest-path embedding.
class FeatureSpace {
public:
  enum class Kind { euclidean, graph };

  static FeatureSpace euclidean(Eigen::MatrixXd phi);
  static FeatureSpace graph(std::vector<std::string> nodes,
                            std::vector<std::pair<int, int>> edges);

  Kind kind() const { return kind_; }
  int num_rows() const { return static_cast<int>(phi_.rows()); }
  int num_cols() const { return static_cast<int>(phi_.cols()); }
  // Euclidean feature rows, or the graph embedding.
  const Eigen::MatrixXd& phi() const { return phi_; }
  const std::vector<std::string>& nodes() const { return nodes_; }
  const std::vector<std::pair<int, int>>& edges() const { return edges_; }
  bool has_disconnected_pairs() const { return capped_; }
  int distance_cap() const { return cap_; }
  int node_index(const std::string& name) const;  // -1 when absent

private:
  FeatureSpace() = default;

  Kind kind_ = Kind::euclidean;
  Eigen::MatrixXd phi_;
  std::vector<std::string> nodes_;
  std::vector<std::pair<int, int>> edges_;
  bool capped_ = false;
  int cap_ = 0;
};

// A point to evaluate the kernel at: Euclidean feature vector, or an index
// into the feature space (graph node or training row).
struct QueryPoint {
  Eigen::VectorXd phi;
  int index = -1;

  static QueryPoint at(Eigen::VectorXd features);
  static QueryPoint row(int index);
  bool is_index() const { return index >= 0; }
};

// Rational quadratic on a distance linear in time plus a constant offset for
// distinct authors:
//   r^2 = (dt / l)^2 + [a != b] (d_author / l)^2
//   k   = amplitude (1 + r^2 / (2 shape))^(-shape)
double rq_time_author(const KernelSpec& spec, double time_a, double author_a,
                      double time_b, double author_b);

// k(d1, d2) = s exp(-1/2 (x1 - x2)' S (x1 - x2)) on embedding rows.
double graph_kernel(const KernelSpec& spec, const Eigen::VectorXd& x_a,
                    const Eigen::VectorXd& x_b);

// Kernel between two rows of a feature space.
double kernel_value(const KernelSpec& spec, const FeatureSpace& features, int i, int j);
// Kernel between an arbitrary query point and a feature-space row / itself.
double kernel_query(const KernelSpec& spec, const FeatureSpace& features,
                    const QueryPoint& q, int j);
double kernel_self(const KernelSpec& spec, const FeatureSpace& features,
                   const QueryPoint& q);

struct Gram {
  Eigen::MatrixXd k;
  std::vector<Eigen::MatrixXd> dk_dlog;  // per parameter, log domain
  std::vector<std::string> param_names;
};

// Gram matrix over a subset of feature rows; derivative matrices are with
// respect to the log of each parameter, ordered as KernelSpec::param_names.
Gram gram(const KernelSpec& spec, const FeatureSpace& features,
          const std::vector<int>& subset, bool with_derivatives = false);

std::vector<int> all_rows(const FeatureSpace& features);

}  // namespace ktm
