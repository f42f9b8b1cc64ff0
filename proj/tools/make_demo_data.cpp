// Writes the small bundled demo dataset: a corpus drawn from the generative
// model over a 1-D time feature, with matching metadata and a graph variant.

#include "ktm/corpus.hpp"
#include "ktm/csv.hpp"
#include "ktm/synthetic.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: ktm-make-demo-data <output dir>\n";
    return 2;
  }
  namespace fs = std::filesystem;
  fs::path out(argv[1]);
  fs::create_directories(out);

  ktm::SyntheticSpec spec;
  spec.docs = 60;
  spec.topics = 3;
  spec.vocab = 50;
  spec.doc_length_mean = 40.0;
  spec.seed = 7;
  ktm::SyntheticCorpus data = ktm::generate_synthetic(spec);

  ktm::write_uci_corpus(data.corpus, (out / "docword.txt").string());
  ktm::write_vocabulary(data.corpus.vocab, (out / "vocab.txt").string());

  {
    std::ofstream meta(out / "meta.csv");
    meta << "doc_id,time\n";
    for (int d = 0; d < data.corpus.num_docs(); ++d) {
      meta << data.corpus.doc_ids[static_cast<size_t>(d)] << ','
           << ktm::format_double(data.features->phi()(d, 0)) << "\n";
    }
  }
  {
    // Graph companion: documents chained in time order, so graph distance
    // mirrors the temporal layout.
    std::ofstream meta(out / "graph_meta.csv");
    meta << "doc_id,node\n";
    for (int d = 0; d < data.corpus.num_docs(); ++d) {
      meta << data.corpus.doc_ids[static_cast<size_t>(d)] << ",doc"
           << data.corpus.doc_ids[static_cast<size_t>(d)] << "\n";
    }
    std::ofstream edges(out / "graph_edges.txt");
    for (int d = 0; d + 1 < data.corpus.num_docs(); ++d) {
      edges << "doc" << data.corpus.doc_ids[static_cast<size_t>(d)] << " doc"
            << data.corpus.doc_ids[static_cast<size_t>(d + 1)] << "\n";
    }
  }
  {
    std::ofstream grid(out / "grid.csv");
    grid << "doc_id,time\n";
    for (int i = 0; i <= 40; ++i) {
      grid << (i + 1) << ',' << ktm::format_double(i / 40.0) << "\n";
    }
  }
  std::cout << "demo data written to " << out.string() << "\n";
  return 0;
}
