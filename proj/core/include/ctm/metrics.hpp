#pragma once

#include <string>
#include <vector>

#include "ctm/common.hpp"
#include "ctm/corpus.hpp"

namespace ctm {

// NPMI from boolean document co-occurrence; pairs that never co-occur score
// exactly -1, pairs present in every document score 0
double npmi(const Corpus& corpus, int w1, int w2);

// mean pairwise NPMI of each topic's top words, averaged over topics
double topic_coherence(const std::vector<std::vector<std::string>>& topic_words,
                       const Corpus& corpus,
                       std::vector<double>* per_topic = nullptr);

// fraction of distinct words across the topics' top lists
double topic_diversity(const std::vector<std::vector<std::string>>& topic_words);

inline double topic_quality(double tc, double td) { return tc * td; }

struct TopicQualityReport {
  double tc = 0.0;
  double td = 0.0;
  double tq = 0.0;
  std::vector<double> per_topic_tc;
  int coherence_words = 10;
  int diversity_words = 25;
};

// argmax over each row; ties go to the lowest topic id
std::vector<int> classify(const Eigen::MatrixXd& theta);

struct ClassificationReport {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  double micro_f1 = 0.0;
  std::vector<double> per_class_f1;
};

// n_classes <= 0 infers the label space from the data; classes absent from
// both pred and gold contribute F1 = 0 to the macro average
ClassificationReport classification_report(const std::vector<int>& pred,
                                           const std::vector<int>& gold,
                                           int n_classes = -1);

}  // namespace ctm
