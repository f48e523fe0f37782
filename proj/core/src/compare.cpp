#include "ctm/compare.hpp"

#include <algorithm>
#include <numeric>

namespace ctm {

namespace {

void require_shared_reference(const EctmModel& a, const EctmModel& b) {
  if (a.ref_names.empty() || b.ref_names.empty()) {
    throw ValidationError("compare: both models must carry trained reference topics");
  }
  if (a.ref_names != b.ref_names) {
    throw ValidationError("compare: models disagree on topic names");
  }
  if (a.ref_vocab_hash != b.ref_vocab_hash || a.ref_vocab != b.ref_vocab) {
    throw ValidationError("compare: models were built against different reference vocabularies");
  }
}

}  // namespace

ComparisonReport corpus_divergence(const EctmModel& a, const EctmModel& b) {
  require_shared_reference(a, b);

  Eigen::MatrixXd pa = topic_matrices(a).beta_tilde_r;
  Eigen::MatrixXd pb = topic_matrices(b).beta_tilde_r;
  const int k = static_cast<int>(a.ref_names.size());

  ComparisonReport rep;
  rep.topic_names = a.ref_names;
  rep.kl_ab.resize(k);
  rep.kl_ba.resize(k);
  rep.kl_mean.resize(k);
  for (int j = 0; j < k; ++j) {
    rep.kl_ab[j] = kl_divergence(pa.row(j).transpose(), pb.row(j).transpose());
    rep.kl_ba[j] = kl_divergence(pb.row(j).transpose(), pa.row(j).transpose());
    rep.kl_mean[j] = 0.5 * (rep.kl_ab[j] + rep.kl_ba[j]);
  }

  rep.ranking.resize(k);
  std::iota(rep.ranking.begin(), rep.ranking.end(), 0);
  std::sort(rep.ranking.begin(), rep.ranking.end(), [&](int x, int y) {
    if (rep.kl_ab[x] != rep.kl_ab[y]) return rep.kl_ab[x] > rep.kl_ab[y];
    return x < y;
  });
  return rep;
}

int topic_index(const EctmModel& model, const std::string& name) {
  for (size_t j = 0; j < model.ref_names.size(); ++j) {
    if (model.ref_names[j] == name) return static_cast<int>(j);
  }
  throw ValidationError("unknown topic '" + name + "'");
}

std::vector<std::string> context_words(const EctmModel& model, int topic, int n) {
  if (model.ref_names.empty()) {
    throw ValidationError("context_words: model carries no reference topics");
  }
  if (topic < 0 || topic >= static_cast<int>(model.ref_names.size())) {
    throw ValidationError("context_words: topic index out of range");
  }
  if (n < 1 || n > model.n_ref_words()) {
    throw ValidationError("context_words: n must be in [1, " +
                          std::to_string(model.n_ref_words()) + "]");
  }
  Eigen::MatrixXd bt = topic_matrices(model).beta_tilde_r;
  std::vector<int> order(model.n_ref_words());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int x, int y) {
    if (bt(topic, x) != bt(topic, y)) return bt(topic, x) > bt(topic, y);
    return x < y;
  });
  std::vector<std::string> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) out.push_back(model.ref_vocab[order[i]]);
  return out;
}

}  // namespace ctm
