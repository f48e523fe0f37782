#include "ctm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

namespace ctm {

namespace {

long intersection_size(const std::vector<int>& a, const std::vector<int>& b) {
  long n = 0;
  size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] == b[j]) {
      ++n;
      ++i;
      ++j;
    } else if (a[i] < b[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  return n;
}

double npmi_counts(long joint, long c1, long c2, long n_docs) {
  if (joint == 0) return -1.0;
  double num = std::log(static_cast<double>(joint)) + std::log(static_cast<double>(n_docs)) -
               std::log(static_cast<double>(c1)) - std::log(static_cast<double>(c2));
  double den = std::log(static_cast<double>(n_docs)) - std::log(static_cast<double>(joint));
  if (den <= 0.0) return 0.0;  // pair present in every document
  return num / den;
}

}  // namespace

double npmi(const Corpus& corpus, int w1, int w2) {
  if (w1 < 0 || w1 >= corpus.n_words() || w2 < 0 || w2 >= corpus.n_words()) {
    throw ValidationError("npmi: word id out of range");
  }
  if (corpus.n_docs() == 0) throw ValidationError("npmi: empty corpus");
  auto sets = corpus.word_doc_sets();
  long joint = intersection_size(sets[w1], sets[w2]);
  long c1 = static_cast<long>(sets[w1].size());
  long c2 = static_cast<long>(sets[w2].size());
  if (c1 == 0 || c2 == 0) return -1.0;
  return npmi_counts(joint, c1, c2, corpus.n_docs());
}

double topic_coherence(const std::vector<std::vector<std::string>>& topic_words,
                       const Corpus& corpus, std::vector<double>* per_topic) {
  if (topic_words.empty()) throw ValidationError("topic_coherence: no topics");
  size_t n = topic_words.front().size();
  if (n < 2) throw ValidationError("topic_coherence: need at least 2 words per topic");
  for (size_t j = 0; j < topic_words.size(); ++j) {
    if (topic_words[j].size() != n) {
      throw ValidationError("topic_coherence: topic " + std::to_string(j) +
                            " has " + std::to_string(topic_words[j].size()) +
                            " words, expected " + std::to_string(n));
    }
  }

  std::unordered_map<std::string, int> word_id;
  for (int v = 0; v < corpus.n_words(); ++v) word_id.emplace(corpus.vocab[v], v);
  auto sets = corpus.word_doc_sets();

  if (per_topic) per_topic->clear();
  double total = 0.0;
  for (size_t j = 0; j < topic_words.size(); ++j) {
    std::vector<int> ids;
    ids.reserve(n);
    for (const auto& w : topic_words[j]) {
      auto it = word_id.find(w);
      if (it == word_id.end()) {
        throw ValidationError("topic_coherence: word '" + w + "' from topic " +
                              std::to_string(j) + " is not in the corpus vocabulary");
      }
      ids.push_back(it->second);
    }
    double acc = 0.0;
    long pairs = 0;
    for (size_t a = 0; a < ids.size(); ++a) {
      for (size_t b = a + 1; b < ids.size(); ++b) {
        long joint = intersection_size(sets[ids[a]], sets[ids[b]]);
        acc += npmi_counts(joint, static_cast<long>(sets[ids[a]].size()),
                           static_cast<long>(sets[ids[b]].size()), corpus.n_docs());
        ++pairs;
      }
    }
    double tc = acc / static_cast<double>(pairs);
    if (per_topic) per_topic->push_back(tc);
    total += tc;
  }
  return total / static_cast<double>(topic_words.size());
}

double topic_diversity(const std::vector<std::vector<std::string>>& topic_words) {
  if (topic_words.empty()) throw ValidationError("topic_diversity: no topics");
  size_t n = topic_words.front().size();
  if (n == 0) throw ValidationError("topic_diversity: empty word lists");
  std::unordered_set<std::string> distinct;
  for (size_t j = 0; j < topic_words.size(); ++j) {
    if (topic_words[j].size() != n) {
      throw ValidationError("topic_diversity: topic " + std::to_string(j) +
                            " has " + std::to_string(topic_words[j].size()) +
                            " words, expected " + std::to_string(n));
    }
    distinct.insert(topic_words[j].begin(), topic_words[j].end());
  }
  return static_cast<double>(distinct.size()) /
         static_cast<double>(n * topic_words.size());
}

std::vector<int> classify(const Eigen::MatrixXd& theta) {
  if (theta.rows() == 0 || theta.cols() == 0) {
    throw ValidationError("classify: empty mixture matrix");
  }
  std::vector<int> out(theta.rows());
  for (Eigen::Index d = 0; d < theta.rows(); ++d) {
    int best = 0;
    for (Eigen::Index j = 1; j < theta.cols(); ++j) {
      if (theta(d, j) > theta(d, best)) best = static_cast<int>(j);
    }
    out[d] = best;
  }
  return out;
}

ClassificationReport classification_report(const std::vector<int>& pred,
                                           const std::vector<int>& gold,
                                           int n_classes) {
  if (pred.size() != gold.size()) {
    throw ValidationError("classification_report: " + std::to_string(pred.size()) +
                          " predictions vs " + std::to_string(gold.size()) + " gold labels");
  }
  if (pred.empty()) throw ValidationError("classification_report: no samples");
  int maxl = 0;
  for (size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] < 0 || gold[i] < 0) {
      throw ValidationError("classification_report: negative label at sample " +
                            std::to_string(i));
    }
    maxl = std::max({maxl, pred[i], gold[i]});
  }
  int k = n_classes > 0 ? n_classes : maxl + 1;
  if (maxl >= k) {
    throw ValidationError("classification_report: label " + std::to_string(maxl) +
                          " outside the declared " + std::to_string(k) + " classes");
  }

  std::vector<long> tp(k, 0), fp(k, 0), fn(k, 0);
  long correct = 0;
  for (size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] == gold[i]) {
      ++tp[pred[i]];
      ++correct;
    } else {
      ++fp[pred[i]];
      ++fn[gold[i]];
    }
  }

  ClassificationReport rep;
  rep.accuracy = static_cast<double>(correct) / static_cast<double>(pred.size());
  rep.per_class_f1.resize(k);
  double macro = 0.0;
  long tp_all = 0, fp_all = 0, fn_all = 0;
  for (int c = 0; c < k; ++c) {
    long denom = 2 * tp[c] + fp[c] + fn[c];
    rep.per_class_f1[c] =
        denom > 0 ? 2.0 * static_cast<double>(tp[c]) / static_cast<double>(denom) : 0.0;
    macro += rep.per_class_f1[c];
    tp_all += tp[c];
    fp_all += fp[c];
    fn_all += fn[c];
  }
  rep.macro_f1 = macro / static_cast<double>(k);
  long micro_denom = 2 * tp_all + fp_all + fn_all;
  rep.micro_f1 = micro_denom > 0
                     ? 2.0 * static_cast<double>(tp_all) / static_cast<double>(micro_denom)
                     : 0.0;
  return rep;
}

}  // namespace ctm
