#include "ktm/corpus.hpp"

#include "ktm/errors.hpp"

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>

namespace ktm {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::int64_t read_header_count(std::ifstream& in, const std::string& path,
                               const char* what) {
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorCode::io,
          path + ": missing " + what + " header line");
  std::istringstream ss(line);
  std::int64_t value = -1;
  ss >> value;
  require(!ss.fail() && value >= 0, ErrorCode::io,
          path + ": bad " + what + " header line: '" + line + "'");
  return value;
}

}  // namespace

std::int64_t Corpus::total_tokens() const {
  std::int64_t n = 0;
  for (const auto& d : docs) n += d.total;
  return n;
}

Corpus read_uci_corpus(const std::string& docword_path) {
  std::ifstream in(docword_path);
  require(in.good(), ErrorCode::io, "cannot open corpus file: " + docword_path);

  const std::int64_t n_docs = read_header_count(in, docword_path, "D");
  const std::int64_t n_vocab = read_header_count(in, docword_path, "V");
  const std::int64_t nnz = read_header_count(in, docword_path, "NNZ");
  require(n_docs >= 1, ErrorCode::invalid_argument, docword_path + ": D must be >= 1");
  require(n_vocab >= 1, ErrorCode::invalid_argument, docword_path + ": V must be >= 1");

  // docId -> (wordId -> count); UCI files are usually sorted but we do not
  // rely on it.
  std::map<std::int32_t, std::map<std::int32_t, std::int64_t>> by_doc;
  std::int64_t seen = 0;
  std::int64_t doc_id = 0;
  std::int64_t word_id = 0;
  std::int64_t count = 0;
  while (in >> doc_id >> word_id >> count) {
    ++seen;
    require(doc_id >= 1 && doc_id <= n_docs, ErrorCode::io,
            docword_path + ": docId out of range at triple " + std::to_string(seen));
    require(word_id >= 1 && word_id <= n_vocab, ErrorCode::io,
            docword_path + ": wordId out of range at triple " + std::to_string(seen));
    require(count >= 1, ErrorCode::io,
            docword_path + ": count must be positive at triple " + std::to_string(seen));
    by_doc[static_cast<std::int32_t>(doc_id)][static_cast<std::int32_t>(word_id)] += count;
  }
  require(seen == nnz, ErrorCode::io,
          docword_path + ": header says NNZ = " + std::to_string(nnz) + " but found " +
              std::to_string(seen) + " triples");

  Corpus corpus;
  corpus.vocab_size = static_cast<std::int32_t>(n_vocab);
  corpus.docs.reserve(by_doc.size());
  for (const auto& [id, words] : by_doc) {
    Document doc;
    doc.words.reserve(words.size());
    for (const auto& [w, c] : words) {
      doc.words.emplace_back(w - 1, static_cast<std::int32_t>(c));
      doc.total += c;
    }
    require(doc.total >= 1, ErrorCode::invalid_argument,
            docword_path + ": empty document " + std::to_string(id));
    corpus.docs.push_back(std::move(doc));
    corpus.doc_ids.push_back(id);
  }
  require(!corpus.docs.empty(), ErrorCode::invalid_argument,
          docword_path + ": corpus has no documents");
  return corpus;
}

void write_uci_corpus(const Corpus& corpus, const std::string& docword_path) {
  std::ofstream out(docword_path);
  require(out.good(), ErrorCode::io, "cannot write corpus file: " + docword_path);
  std::int64_t nnz = 0;
  for (const auto& d : corpus.docs) nnz += static_cast<std::int64_t>(d.words.size());
  std::int32_t max_id = 0;
  for (auto id : corpus.doc_ids) max_id = std::max(max_id, id);
  out << max_id << "\n" << corpus.vocab_size << "\n" << nnz << "\n";
  for (int d = 0; d < corpus.num_docs(); ++d) {
    for (const auto& [w, c] : corpus.docs[d].words) {
      out << corpus.doc_ids[d] << ' ' << (w + 1) << ' ' << c << "\n";
    }
  }
  require(out.good(), ErrorCode::io, "write failed: " + docword_path);
}

std::vector<std::string> read_vocabulary(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::io, "cannot open vocabulary file: " + path);
  std::vector<std::string> vocab;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    vocab.push_back(line);
  }
  return vocab;
}

void write_vocabulary(const std::vector<std::string>& vocab, const std::string& path) {
  std::ofstream out(path);
  require(out.good(), ErrorCode::io, "cannot write vocabulary file: " + path);
  for (const auto& t : vocab) out << t << "\n";
  require(out.good(), ErrorCode::io, "write failed: " + path);
}

std::pair<Corpus, Corpus> split_holdout(const Corpus& corpus, int holdout_denominator) {
  require(holdout_denominator >= 2, ErrorCode::invalid_argument,
          "holdout denominator must be >= 2");
  Corpus held_in;
  Corpus held_out;
  held_in.vocab_size = held_out.vocab_size = corpus.vocab_size;
  held_in.vocab = held_out.vocab = corpus.vocab;
  held_in.doc_ids = held_out.doc_ids = corpus.doc_ids;

  const std::uint64_t denom = static_cast<std::uint64_t>(holdout_denominator);
  for (int d = 0; d < corpus.num_docs(); ++d) {
    Document in_doc;
    Document out_doc;
    std::int64_t token = 0;
    for (const auto& [w, c] : corpus.docs[d].words) {
      std::int32_t c_out = 0;
      for (std::int32_t i = 0; i < c; ++i, ++token) {
        std::uint64_t h = splitmix64((static_cast<std::uint64_t>(d) << 32) ^
                                     static_cast<std::uint64_t>(token));
        if (h % denom == 0) ++c_out;
      }
      if (c - c_out > 0) {
        in_doc.words.emplace_back(w, c - c_out);
        in_doc.total += c - c_out;
      }
      if (c_out > 0) {
        out_doc.words.emplace_back(w, c_out);
        out_doc.total += c_out;
      }
    }
    held_in.docs.push_back(std::move(in_doc));
    held_out.docs.push_back(std::move(out_doc));
  }
  return {std::move(held_in), std::move(held_out)};
}

}  // namespace ktm
