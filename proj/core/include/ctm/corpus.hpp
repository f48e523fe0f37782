#pragma once

#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "ctm/common.hpp"

namespace ctm {

struct PreprocessRules {
  // prune words appearing in strictly more than this fraction of docs
  double max_doc_frequency = 0.70;
  // prune words with total corpus count strictly below this
  long min_word_count = 10;
  std::unordered_set<std::string> stopwords;
  bool lowercase = true;

  void validate() const;
};

struct RawDoc {
  std::string id;
  std::string text;
  // zero or more labels; multi-label docs carry several entries
  std::vector<std::string> labels;
};

struct Corpus {
  std::vector<std::string> vocab;  // id = position
  // per-doc sparse counts, sorted by word id
  std::vector<std::vector<std::pair<int, int>>> docs;
  std::vector<std::string> doc_ids;
  std::vector<std::string> label_names;   // sorted, distinct
  std::vector<std::vector<int>> labels;   // per-doc label ids, sorted

  int n_docs() const { return static_cast<int>(docs.size()); }
  int n_words() const { return static_cast<int>(vocab.size()); }
  bool doc_empty(int d) const { return docs[d].empty(); }
  long doc_tokens(int d) const;
  long total_tokens() const;
  int doc_index(const std::string& doc_id) const;  // -1 if absent
  int word_index(const std::string& word) const;   // -1 if absent
  std::vector<int> nonempty_docs() const;
  Eigen::VectorXd count_row(int d) const;
  // ids of docs containing each word, ascending (for co-occurrence stats)
  std::vector<std::vector<int>> word_doc_sets() const;
  uint64_t vocab_hash() const;
  void validate() const;
};

// lowercase (optional), split on non-alphanumeric runs, drop tokens shorter
// than 2 chars and pure-number tokens
std::vector<std::string> tokenize(const std::string& text, bool lowercase = true);

Corpus preprocess(const std::vector<RawDoc>& raw, const PreprocessRules& rules);

// counts normalized to sum 1; throws on empty document
Eigen::VectorXd normalized_bow(const Corpus& corpus, int d);

// directory with vocab.txt, counts.csv, labels.csv (+ meta.json)
void save_corpus(const Corpus& corpus, const std::string& dir,
                 const std::string& meta_json = "");
Corpus load_corpus(const std::string& dir);

// one JSON object per line: {"id": ..., "text": ..., "label": optional}
std::vector<RawDoc> read_jsonl(const std::string& path);

const std::unordered_set<std::string>& default_stopwords();
std::unordered_set<std::string> load_stopwords(const std::string& path);

}  // namespace ctm
