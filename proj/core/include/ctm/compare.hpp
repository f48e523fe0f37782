#pragma once

#include <string>
#include <vector>

#include "ctm/common.hpp"
#include "ctm/ectm.hpp"

namespace ctm {

// Divergence between two models trained against the same reference topics.
// Projections beta_tilde live on the shared reference vocabulary, so the
// comparison is invariant to target-vocabulary differences.
struct ComparisonReport {
  std::vector<std::string> topic_names;
  Eigen::VectorXd kl_ab;    // per topic, KL(model_a || model_b)
  Eigen::VectorXd kl_ba;
  Eigen::VectorXd kl_mean;  // symmetrized average
  std::vector<int> ranking; // topic ids by kl_ab descending, ties by id
};

ComparisonReport corpus_divergence(const EctmModel& a, const EctmModel& b);

// top-n reference-vocabulary words of one topic's projection
std::vector<std::string> context_words(const EctmModel& model, int topic, int n);
int topic_index(const EctmModel& model, const std::string& name);

}  // namespace ctm
