#include "ktm/metadata.hpp"

#include "ktm/csv.hpp"
#include "ktm/errors.hpp"

#include <fstream>
#include <sstream>
#include <unordered_map>

namespace ktm {

MetadataTable read_metadata_csv(const std::string& path) {
  CsvTable csv = read_csv(path);
  int id_col = csv.column("doc_id");
  require(id_col >= 0, ErrorCode::io, path + ": metadata needs a doc_id column");
  int node_col = csv.column("node");

  MetadataTable meta;
  meta.is_graph = node_col >= 0;
  if (meta.is_graph) {
    require(csv.header.size() == 2, ErrorCode::io,
            path + ": graph metadata must have exactly doc_id and node columns");
  } else {
    for (size_t c = 0; c < csv.header.size(); ++c) {
      if (static_cast<int>(c) != id_col) meta.feature_columns.push_back(csv.header[c]);
    }
    require(!meta.feature_columns.empty(), ErrorCode::io,
            path + ": metadata needs at least one feature column");
  }

  const int rows = static_cast<int>(csv.rows.size());
  require(rows >= 1, ErrorCode::io, path + ": metadata has no rows");
  if (!meta.is_graph) {
    meta.values.resize(rows, static_cast<int>(meta.feature_columns.size()));
  }
  for (int r = 0; r < rows; ++r) {
    const auto& fields = csv.rows[static_cast<size_t>(r)];
    meta.doc_ids.push_back(parse_int(fields[static_cast<size_t>(id_col)]));
    if (meta.is_graph) {
      const std::string& node = fields[static_cast<size_t>(node_col)];
      require(!node.empty(), ErrorCode::io, path + ": empty node name");
      meta.nodes.push_back(node);
    } else {
      int f = 0;
      for (size_t c = 0; c < fields.size(); ++c) {
        if (static_cast<int>(c) == id_col) continue;
        meta.values(r, f++) = parse_double(fields[c]);
      }
    }
  }
  return meta;
}

std::vector<std::pair<std::string, std::string>> read_edge_list(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::io, "cannot open edge list: " + path);
  std::vector<std::pair<std::string, std::string>> edges;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string a;
    std::string b;
    ss >> a >> b;
    require(!a.empty() && !b.empty(), ErrorCode::io,
            path + ": line " + std::to_string(line_no) + " is not 'nodeA nodeB'");
    edges.emplace_back(std::move(a), std::move(b));
  }
  return edges;
}

std::shared_ptr<FeatureSpace> build_feature_space(
    const MetadataTable& meta, const std::vector<std::int32_t>& corpus_doc_ids,
    const std::string& graph_edges_path) {
  std::unordered_map<std::int64_t, int> row_of;
  for (int r = 0; r < meta.num_rows(); ++r) {
    auto [it, inserted] = row_of.emplace(meta.doc_ids[static_cast<size_t>(r)], r);
    require(inserted, ErrorCode::invalid_argument,
            "duplicate metadata row for doc_id " +
                std::to_string(meta.doc_ids[static_cast<size_t>(r)]));
  }
  std::vector<int> order;
  order.reserve(corpus_doc_ids.size());
  for (auto id : corpus_doc_ids) {
    auto it = row_of.find(id);
    require(it != row_of.end(), ErrorCode::invalid_argument,
            "metadata is missing doc_id " + std::to_string(id));
    order.push_back(it->second);
  }

  if (!meta.is_graph) {
    Eigen::MatrixXd phi(static_cast<int>(order.size()), meta.values.cols());
    for (size_t i = 0; i < order.size(); ++i) {
      phi.row(static_cast<int>(i)) = meta.values.row(order[i]);
    }
    return std::make_shared<FeatureSpace>(FeatureSpace::euclidean(std::move(phi)));
  }

  require(!graph_edges_path.empty(), ErrorCode::invalid_argument,
          "graph metadata needs an edge list file");
  std::vector<std::string> nodes;
  nodes.reserve(order.size());
  std::unordered_map<std::string, int> index_of;
  for (size_t i = 0; i < order.size(); ++i) {
    const std::string& name = meta.nodes[static_cast<size_t>(order[i])];
    auto [it, inserted] = index_of.emplace(name, static_cast<int>(i));
    require(inserted, ErrorCode::invalid_argument, "duplicate graph node: " + name);
    nodes.push_back(name);
  }
  std::vector<std::pair<int, int>> edges;
  for (const auto& [a, b] : read_edge_list(graph_edges_path)) {
    auto ia = index_of.find(a);
    auto ib = index_of.find(b);
    require(ia != index_of.end(), ErrorCode::invalid_argument,
            "edge endpoint '" + a + "' is not a metadata node");
    require(ib != index_of.end(), ErrorCode::invalid_argument,
            "edge endpoint '" + b + "' is not a metadata node");
    edges.emplace_back(ia->second, ib->second);
  }
  return std::make_shared<FeatureSpace>(FeatureSpace::graph(std::move(nodes), std::move(edges)));
}

std::shared_ptr<FeatureSpace> feature_space_from_rows(const MetadataTable& meta) {
  require(!meta.is_graph, ErrorCode::unsupported,
          "grid feature spaces are Euclidean; graph grids resolve against the model");
  return std::make_shared<FeatureSpace>(FeatureSpace::euclidean(meta.values));
}

}  // namespace ktm
