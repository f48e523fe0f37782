#pragma once

#include <string>
#include <vector>

#include "ctm/common.hpp"
#include "ctm/corpus.hpp"
#include "ctm/embeddings.hpp"
#include "ctm/prior.hpp"

namespace ctm {

// Planted corpus: k disjoint topic vocabularies with Zipf word weights, plus
// background words that appear in every document (so the document-frequency
// pruning rule removes them). Deterministic per seed; documents are generated
// from per-document seeds so two specs differing only in one topic's
// distribution produce identical documents for the other topics.
struct SyntheticSpec {
  int n_topics = 3;
  int docs_per_topic = 200;
  int words_per_topic = 30;
  int background_words = 15;
  int doc_len_min = 40;
  int doc_len_max = 80;
  int embed_dim = 64;
  double zipf_power = 1.1;
  bool reverse_first_topic = false;  // flip topic 0's rank order
  uint64_t seed = 0;

  void validate() const;
};

struct SyntheticData {
  std::vector<RawDoc> raw;
  std::vector<std::string> topic_names;
  std::vector<int> true_topic;  // aligned with raw
  EmbeddingTable embeddings;    // covers topic words, background words, names
};

SyntheticData make_planted(const SyntheticSpec& spec);

// scores 0.85 for the assigned topic and 0.10 elsewhere; with probability
// noise_rate the assignment moves to a uniformly chosen wrong topic
ScoreMatrix oracle_scores(const SyntheticData& data, const Corpus& corpus,
                          double noise_rate, uint64_t seed);

// gold topic ids aligned to corpus document order
std::vector<int> gold_topics(const SyntheticData& data, const Corpus& corpus);

}  // namespace ctm
