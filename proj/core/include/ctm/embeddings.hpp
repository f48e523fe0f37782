#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "ctm/common.hpp"

namespace ctm {

struct EmbeddingTable {
  int dim = 0;
  std::unordered_map<std::string, Eigen::VectorXd> vectors;

  bool contains(const std::string& w) const { return vectors.count(w) > 0; }
};

// word2vec text format: optional "count dim" header, then "word v1 .. vL"
EmbeddingTable load_embeddings(const std::string& path);

struct VocabEmbedding {
  Eigen::MatrixXd matrix;    // dim x |vocab|, column v = vocab[v]
  std::vector<int> missing;  // vocab ids that got a hash-seeded fallback
};

// Deterministic: a word absent from the table gets N(0, 0.01) entries seeded
// from hash(word, seed), so the same word maps to the same column wherever it
// appears.
VocabEmbedding project_vocab(const EmbeddingTable& table,
                             const std::vector<std::string>& vocab,
                             uint64_t seed);

Eigen::VectorXd fallback_vector(const std::string& word, int dim, uint64_t seed);

// embedding of a (possibly multi-word) topic name: mean over token vectors
Eigen::VectorXd name_vector(const EmbeddingTable& table, const std::string& name,
                            uint64_t seed);

}  // namespace ctm
