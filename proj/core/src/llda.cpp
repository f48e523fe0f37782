#include "ctm/llda.hpp"

#include <algorithm>
#include <fstream>
#include <future>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"

namespace ctm {

void LldaConfig::validate() const {
  if (alpha <= 0.0) throw ValidationError("llda alpha must be positive");
  if (eta <= 0.0) throw ValidationError("llda eta must be positive");
  if (iterations < 1) throw ValidationError("llda iterations must be >= 1");
  if (burn_in < 0 || burn_in >= iterations) {
    throw ValidationError("llda burn_in must satisfy 0 <= burn_in < iterations, got " +
                          std::to_string(burn_in) + " / " + std::to_string(iterations));
  }
  if (sample_every < 1) throw ValidationError("llda sample_every must be >= 1");
  if (chains < 1) throw ValidationError("llda chains must be >= 1");
}

uint64_t ReferenceTopics::vocab_hash() const {
  uint64_t h = 14695981039346656037ull;
  for (const auto& w : ref_vocab) {
    h ^= fnv1a(w);
    h *= 1099511628211ull;
  }
  return h;
}

void ReferenceTopics::validate() const {
  if (k() < 2) {
    throw ValidationError("reference topics: k >= 2 required, got " + std::to_string(k()));
  }
  std::unordered_set<std::string> seen;
  for (const auto& n : names) {
    if (n.empty()) throw ValidationError("reference topics: empty topic name");
    if (!seen.insert(n).second) {
      throw ValidationError("reference topics: duplicate name '" + n + "'");
    }
  }
  if (ref_vocab.empty()) throw ValidationError("reference topics: empty vocabulary");
  if (beta_r.rows() != k() || beta_r.cols() != vocab_size()) {
    throw ValidationError("reference topics: beta shape mismatch");
  }
  for (int j = 0; j < k(); ++j) {
    double sum = beta_r.row(j).sum();
    if (std::abs(sum - 1.0) > 1e-9) {
      throw ValidationError("reference topic '" + names[j] + "' row sums to " +
                            format_double(sum) + ", expected 1 within 1e-9");
    }
    for (int w = 0; w < vocab_size(); ++w) {
      if (!(beta_r(j, w) > 0.0)) {
        throw ValidationError("reference topic '" + names[j] +
                              "' has a nonpositive entry at word '" + ref_vocab[w] + "'");
      }
    }
  }
}

namespace {

struct ChainResult {
  Eigen::MatrixXd beta;  // k x V averaged over snapshots
};

ChainResult run_chain(const Corpus& corpus, const std::vector<std::vector<int>>& doc_topics,
                      int k, const LldaConfig& cfg, uint64_t seed) {
  const int V = corpus.n_words();
  const int D = corpus.n_docs();
  Rng rng(seed);

  // expand sparse counts into a flat token stream per doc
  std::vector<std::vector<int>> tokens(D);
  for (int d = 0; d < D; ++d) {
    for (const auto& [w, c] : corpus.docs[d]) {
      for (int i = 0; i < c; ++i) tokens[d].push_back(w);
    }
  }

  Eigen::MatrixXd n_kw = Eigen::MatrixXd::Zero(k, V);
  Eigen::VectorXd n_k = Eigen::VectorXd::Zero(k);
  Eigen::MatrixXd n_dk = Eigen::MatrixXd::Zero(D, k);
  std::vector<std::vector<int>> z(D);

  for (int d = 0; d < D; ++d) {
    const auto& allowed = doc_topics[d];
    z[d].resize(tokens[d].size());
    for (size_t i = 0; i < tokens[d].size(); ++i) {
      int t = allowed[rng.index(allowed.size())];
      z[d][i] = t;
      n_kw(t, tokens[d][i]) += 1.0;
      n_k[t] += 1.0;
      n_dk(d, t) += 1.0;
    }
  }

  Eigen::MatrixXd beta_acc = Eigen::MatrixXd::Zero(k, V);
  int snapshots = 0;
  std::vector<double> probs;

  for (int it = 1; it <= cfg.iterations; ++it) {
    for (int d = 0; d < D; ++d) {
      const auto& allowed = doc_topics[d];
      if (allowed.size() == 1) continue;  // z is pinned
      for (size_t i = 0; i < tokens[d].size(); ++i) {
        int w = tokens[d][i];
        int old = z[d][i];
        n_kw(old, w) -= 1.0;
        n_k[old] -= 1.0;
        n_dk(d, old) -= 1.0;

        probs.resize(allowed.size());
        double total = 0.0;
        for (size_t a = 0; a < allowed.size(); ++a) {
          int t = allowed[a];
          double p = (n_dk(d, t) + cfg.alpha) * (n_kw(t, w) + cfg.eta) /
                     (n_k[t] + V * cfg.eta);
          probs[a] = p;
          total += p;
        }
        double u = rng.uniform() * total;
        size_t pick = 0;
        double run = 0.0;
        for (size_t a = 0; a < allowed.size(); ++a) {
          run += probs[a];
          if (u < run) {
            pick = a;
            break;
          }
          pick = a;
        }
        int t = allowed[pick];
        z[d][i] = t;
        n_kw(t, w) += 1.0;
        n_k[t] += 1.0;
        n_dk(d, t) += 1.0;
      }
    }
    if (it > cfg.burn_in && (it - cfg.burn_in) % cfg.sample_every == 0) {
      for (int t = 0; t < k; ++t) {
        beta_acc.row(t) += (n_kw.row(t).array() + cfg.eta).matrix() /
                           (n_k[t] + V * cfg.eta);
      }
      ++snapshots;
    }
  }
  if (snapshots == 0) {
    // burn_in < iterations guarantees at least the final state qualifies
    for (int t = 0; t < k; ++t) {
      beta_acc.row(t) += (n_kw.row(t).array() + cfg.eta).matrix() /
                         (n_k[t] + V * cfg.eta);
    }
    snapshots = 1;
  }
  return {beta_acc / static_cast<double>(snapshots)};
}

}  // namespace

ReferenceTopics train_llda(const Corpus& corpus,
                           const std::vector<std::string>& topic_names,
                           const LldaConfig& cfg) {
  cfg.validate();
  const int k = static_cast<int>(topic_names.size());
  if (k < 2) throw ValidationError("llda: k >= 2 required, got " + std::to_string(k));
  if (corpus.n_words() == 0) throw ValidationError("llda: empty vocabulary");

  std::unordered_map<std::string, int> topic_id;
  for (int j = 0; j < k; ++j) {
    if (!topic_id.emplace(topic_names[j], j).second) {
      throw ValidationError("llda: duplicate topic name '" + topic_names[j] + "'");
    }
  }

  // map corpus label ids onto the requested topic set
  std::vector<int> label_to_topic(corpus.label_names.size(), -1);
  for (size_t l = 0; l < corpus.label_names.size(); ++l) {
    auto it = topic_id.find(corpus.label_names[l]);
    if (it == topic_id.end()) {
      throw ValidationError("llda: corpus label '" + corpus.label_names[l] +
                            "' is not in the topic set");
    }
    label_to_topic[l] = it->second;
  }

  std::vector<std::vector<int>> doc_topics(corpus.n_docs());
  std::vector<long> topic_docs(k, 0);
  for (int d = 0; d < corpus.n_docs(); ++d) {
    if (corpus.doc_empty(d)) continue;
    if (corpus.labels[d].empty()) {
      throw ValidationError("llda: document '" + corpus.doc_ids[d] +
                            "' has an empty label set");
    }
    for (int l : corpus.labels[d]) {
      doc_topics[d].push_back(label_to_topic[l]);
      ++topic_docs[label_to_topic[l]];
    }
  }
  for (int j = 0; j < k; ++j) {
    if (topic_docs[j] == 0) {
      throw ValidationError("llda: topic '" + topic_names[j] +
                            "' was never assigned to any document");
    }
  }

  Eigen::MatrixXd beta = Eigen::MatrixXd::Zero(k, corpus.n_words());
  int nthreads = std::min(worker_threads(), cfg.chains);
  std::vector<uint64_t> chain_seeds(cfg.chains);
  for (int c = 0; c < cfg.chains; ++c) {
    chain_seeds[c] = split_seed(cfg.seed, "llda-chain-" + std::to_string(c));
  }
  if (nthreads > 1) {
    std::vector<std::future<ChainResult>> futs;
    for (int c = 0; c < cfg.chains; ++c) {
      futs.push_back(std::async(std::launch::async, run_chain, std::cref(corpus),
                                std::cref(doc_topics), k, std::cref(cfg), chain_seeds[c]));
    }
    for (auto& fut : futs) beta += fut.get().beta;
  } else {
    for (int c = 0; c < cfg.chains; ++c) {
      beta += run_chain(corpus, doc_topics, k, cfg, chain_seeds[c]).beta;
    }
  }
  beta /= static_cast<double>(cfg.chains);
  for (int j = 0; j < k; ++j) beta.row(j) /= beta.row(j).sum();

  ReferenceTopics ref;
  ref.names = topic_names;
  ref.ref_vocab = corpus.vocab;
  ref.beta_r = std::move(beta);
  ref.validate();
  return ref;
}

void save_reference(const ReferenceTopics& ref, const std::string& path,
                    const std::string& meta_json) {
  ref.validate();
  nlohmann::ordered_json j;
  if (!meta_json.empty()) {
    j["_meta"] = nlohmann::ordered_json::parse(meta_json);
  }
  j["names"] = ref.names;
  j["vocab"] = ref.ref_vocab;
  auto rows = nlohmann::ordered_json::array();
  for (int t = 0; t < ref.k(); ++t) {
    auto row = nlohmann::ordered_json::array();
    for (int w = 0; w < ref.vocab_size(); ++w) row.push_back(ref.beta_r(t, w));
    rows.push_back(std::move(row));
  }
  j["beta"] = std::move(rows);
  std::ofstream f(path);
  if (!f) throw IoError("cannot write reference topics to '" + path + "'");
  f << j.dump(2) << '\n';
}

ReferenceTopics load_reference(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot read reference topics from '" + path + "'");
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("invalid JSON in '" + path + "': " + e.what());
  }
  if (!j.contains("names") || !j.contains("vocab") || !j.contains("beta")) {
    throw ValidationError("reference file '" + path +
                          "' must contain names, vocab and beta");
  }
  ReferenceTopics ref;
  try {
    ref.names = j["names"].get<std::vector<std::string>>();
    ref.ref_vocab = j["vocab"].get<std::vector<std::string>>();
    const auto& rows = j["beta"];
    ref.beta_r.resize(static_cast<Eigen::Index>(ref.names.size()),
                      static_cast<Eigen::Index>(ref.ref_vocab.size()));
    if (!rows.is_array() || rows.size() != ref.names.size()) {
      throw ValidationError("reference file '" + path + "': beta row count mismatch");
    }
    for (size_t t = 0; t < rows.size(); ++t) {
      if (!rows[t].is_array() || rows[t].size() != ref.ref_vocab.size()) {
        throw ValidationError("reference file '" + path + "': beta column count mismatch");
      }
      for (size_t w = 0; w < rows[t].size(); ++w) {
        ref.beta_r(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(w)) =
            rows[t][w].get<double>();
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("reference file '" + path + "': " + e.what());
  }
  ref.validate();
  return ref;
}

}  // namespace ctm
