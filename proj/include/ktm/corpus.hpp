#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace ktm {

// One document as sparse word counts, sorted by word id.
struct Document {
  std::vector<std::pair<std::int32_t, std::int32_t>> words;  // (word id, count)
  std::int64_t total = 0;
};

struct Corpus {
  std::vector<Document> docs;
  std::int32_t vocab_size = 0;
  std::vector<std::string> vocab;        // optional token strings, may be empty
  std::vector<std::int32_t> doc_ids;     // original 1-based ids from the file

  int num_docs() const { return static_cast<int>(docs.size()); }
  std::int64_t total_tokens() const;
};

// UCI bag-of-words format: three header lines D, V, NNZ followed by
// "docId wordId count" triples, both ids 1-based.
Corpus read_uci_corpus(const std::string& docword_path);
void write_uci_corpus(const Corpus& corpus, const std::string& docword_path);

// One token per line, line number = word id + 1.
std::vector<std::string> read_vocabulary(const std::string& path);
void write_vocabulary(const std::vector<std::string>& vocab, const std::string& path);

// Token-level split for held-out evaluation: token i of document d (counting
// through the document's tokens in word-id order) goes to the held-out part
// when hash(doc, i) % holdout_denominator == 0. Returns (held_in, held_out);
// both keep the full vocabulary and the per-document alignment (documents
// whose tokens all land on one side keep an empty entry on the other).
std::pair<Corpus, Corpus> split_holdout(const Corpus& corpus, int holdout_denominator);

}  // namespace ktm
