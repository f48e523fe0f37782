#pragma once

#include <string>
#include <vector>

#include "ctm/common.hpp"
#include "ctm/corpus.hpp"
#include "ctm/embeddings.hpp"

namespace ctm {

// per-document topic scores in [0, 1], rows aligned with corpus docs
struct ScoreMatrix {
  Eigen::MatrixXd p;  // |D| x k
  std::vector<std::string> doc_ids;
  std::vector<std::string> names;

  void validate() const;
};

// per-document target distributions (rows on the simplex)
struct PriorMatrix {
  Eigen::MatrixXd theta_t;  // |D| x k
  std::vector<std::string> doc_ids;
  std::vector<std::string> names;
  std::vector<int> fallback_docs;  // rows that degraded to uniform

  void validate() const;
};

// CSV (header doc_id,<name>,...) or JSON ({doc_id: {name: score}}); rows and
// columns are aligned to the corpus and topic name order regardless of file
// order
ScoreMatrix import_scores(const std::string& path, const Corpus& corpus,
                          const std::vector<std::string>& names);

// lexical stand-in for an entailment scorer: p_dk = (cos(centroid_d, name_k)+1)/2
ScoreMatrix proxy_scores(const Corpus& corpus, const VocabEmbedding& vocab_emb,
                         const Eigen::MatrixXd& name_emb,
                         const std::vector<std::string>& names,
                         std::vector<int>* zero_docs = nullptr);

// theta_t[d,k] = (p_dk^2 / f_k) / sum_k' (p_dk'^2 / f_k'), f_k = sum_d p_dk
PriorMatrix soft_labels(const ScoreMatrix& scores);

// multi-hot over scores > tau, normalized uniform; no winner -> uniform row
PriorMatrix hard_labels(const ScoreMatrix& scores, double tau);

void save_prior(const PriorMatrix& prior, const std::string& path,
                const std::string& meta_json = "");
PriorMatrix load_prior(const std::string& path);

}  // namespace ctm
