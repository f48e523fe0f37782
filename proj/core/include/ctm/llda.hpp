#pragma once

#include <string>
#include <vector>

#include "ctm/common.hpp"
#include "ctm/corpus.hpp"

namespace ctm {

struct LldaConfig {
  double alpha = 0.1;
  double eta = 0.01;
  int iterations = 1000;
  int burn_in = 500;
  int sample_every = 10;  // post-burn-in snapshot stride
  int chains = 1;
  uint64_t seed = 0;

  void validate() const;
};

struct ReferenceTopics {
  std::vector<std::string> names;
  std::vector<std::string> ref_vocab;
  Eigen::MatrixXd beta_r;  // k x |ref_vocab|, rows on the simplex

  int k() const { return static_cast<int>(names.size()); }
  int vocab_size() const { return static_cast<int>(ref_vocab.size()); }
  uint64_t vocab_hash() const;
  // rows sum to 1 within 1e-9, entries strictly positive, names distinct
  void validate() const;
};

// Collapsed Gibbs sampler where each token's topic is restricted to its
// document's label set. Topic-word rows are averaged over post-burn-in
// snapshots; multiple chains average in seed order.
ReferenceTopics train_llda(const Corpus& corpus,
                           const std::vector<std::string>& topic_names,
                           const LldaConfig& cfg);

void save_reference(const ReferenceTopics& ref, const std::string& path,
                    const std::string& meta_json = "");
ReferenceTopics load_reference(const std::string& path);

}  // namespace ctm
