#pragma once

#include "ktm/kernels.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace ktm {

// Parsed metadata CSV: a doc_id column plus either numeric feature columns
// or a single "node" column naming graph nodes.
struct MetadataTable {
  std::vector<std::int64_t> doc_ids;
  std::vector<std::string> feature_columns;
  Eigen::MatrixXd values;           // rows x features (Euclidean case)
  std::vector<std::string> nodes;   // graph case
  bool is_graph = false;

  int num_rows() const { return static_cast<int>(doc_ids.size()); }
};

MetadataTable read_metadata_csv(const std::string& path);

// "nodeA nodeB" per line; blank lines and lines starting with '#' skipped.
std::vector<std::pair<std::string, std::string>> read_edge_list(const std::string& path);

// Builds the feature space in corpus document order. corpus_doc_ids are the
// 1-based ids the corpus was read with; every one of them must appear in the
// metadata. Graph metadata additionally needs the edge list file.
std::shared_ptr<FeatureSpace> build_feature_space(
    const MetadataTable& meta, const std::vector<std::int32_t>& corpus_doc_ids,
    const std::string& graph_edges_path = {});

// Feature space straight from the metadata rows, in file order (used for
// prediction grids that are not tied to a corpus). Graph grids are resolved
// against an existing feature space instead.
std::shared_ptr<FeatureSpace> feature_space_from_rows(const MetadataTable& meta);

}  // namespace ktm
