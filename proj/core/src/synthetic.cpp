#include "ctm/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace ctm {

void SyntheticSpec::validate() const {
  if (n_topics < 2) throw ValidationError("synthetic: n_topics >= 2 required");
  if (docs_per_topic < 1) throw ValidationError("synthetic: docs_per_topic >= 1 required");
  if (words_per_topic < 2) throw ValidationError("synthetic: words_per_topic >= 2 required");
  if (background_words < 0) throw ValidationError("synthetic: background_words >= 0 required");
  if (doc_len_min < 1 || doc_len_max < doc_len_min) {
    throw ValidationError("synthetic: bad document length range");
  }
  if (embed_dim < 2) throw ValidationError("synthetic: embed_dim >= 2 required");
  if (zipf_power < 0.0) throw ValidationError("synthetic: zipf_power must be >= 0");
}

namespace {

const char* kNamePool[] = {"sports",  "economy", "politics", "science",
                           "health",  "travel",  "culture",  "weather",
                           "finance", "energy"};

std::string topic_name(int t) {
  constexpr int pool = static_cast<int>(sizeof(kNamePool) / sizeof(kNamePool[0]));
  if (t < pool) return kNamePool[t];
  return "topic" + std::to_string(t);
}

std::string pad2(int i) {
  std::string s = std::to_string(i);
  return s.size() < 2 ? "0" + s : s;
}

}  // namespace

SyntheticData make_planted(const SyntheticSpec& spec) {
  spec.validate();
  SyntheticData data;

  std::vector<std::vector<std::string>> topic_words(spec.n_topics);
  for (int t = 0; t < spec.n_topics; ++t) {
    data.topic_names.push_back(topic_name(t));
    for (int i = 0; i < spec.words_per_topic; ++i) {
      topic_words[t].push_back(topic_name(t) + pad2(i));
    }
  }
  std::vector<std::string> background;
  for (int i = 0; i < spec.background_words; ++i) {
    background.push_back("common" + pad2(i));
  }

  // rank weights within a topic; topic 0 optionally reversed so two specs
  // share everything except that topic's distribution
  std::vector<std::vector<double>> weights(spec.n_topics);
  for (int t = 0; t < spec.n_topics; ++t) {
    std::vector<double> w(spec.words_per_topic);
    double total = 0.0;
    for (int r = 0; r < spec.words_per_topic; ++r) {
      w[r] = 1.0 / std::pow(static_cast<double>(r + 1), spec.zipf_power);
      total += w[r];
    }
    for (double& x : w) x /= total;
    if (t == 0 && spec.reverse_first_topic) std::reverse(w.begin(), w.end());
    weights[t] = std::move(w);
  }

  const int n_docs = spec.n_topics * spec.docs_per_topic;
  int digits = static_cast<int>(std::to_string(n_docs - 1).size());
  for (int d = 0; d < n_docs; ++d) {
    int t = d / spec.docs_per_topic;
    std::string num = std::to_string(d);
    std::string id = "doc" + std::string(digits - num.size(), '0') + num;

    Rng rng(split_seed(spec.seed, "doc-" + id));
    int len = spec.doc_len_min +
              static_cast<int>(rng.index(spec.doc_len_max - spec.doc_len_min + 1));

    std::string text;
    for (const auto& w : background) {
      text += w;
      text += ' ';
    }
    for (int i = 0; i < len; ++i) {
      double u = rng.uniform();
      double acc = 0.0;
      int pick = spec.words_per_topic - 1;
      for (int r = 0; r < spec.words_per_topic; ++r) {
        acc += weights[t][r];
        if (u < acc) {
          pick = r;
          break;
        }
      }
      text += topic_words[t][pick];
      text += ' ';
    }

    RawDoc doc;
    doc.id = id;
    doc.text = text;
    doc.labels.push_back(data.topic_names[t]);
    data.raw.push_back(std::move(doc));
    data.true_topic.push_back(t);
  }

  // clustered embeddings: each topic's words sit around the topic centroid,
  // and the topic name itself sits exactly on it
  Rng erng(split_seed(spec.seed, "embeddings"));
  data.embeddings.dim = spec.embed_dim;
  auto draw = [&erng, &spec](double scale) {
    Eigen::VectorXd v(spec.embed_dim);
    for (int i = 0; i < spec.embed_dim; ++i) v[i] = scale * erng.normal();
    return v;
  };
  for (int t = 0; t < spec.n_topics; ++t) {
    Eigen::VectorXd centroid = draw(1.0);
    data.embeddings.vectors[data.topic_names[t]] = centroid;
    for (const auto& w : topic_words[t]) {
      data.embeddings.vectors[w] = centroid + draw(0.35);
    }
  }
  Eigen::VectorXd bg_centroid = draw(1.0);
  for (const auto& w : background) {
    data.embeddings.vectors[w] = bg_centroid + draw(0.35);
  }
  return data;
}

ScoreMatrix oracle_scores(const SyntheticData& data, const Corpus& corpus,
                          double noise_rate, uint64_t seed) {
  if (!(noise_rate >= 0.0 && noise_rate <= 1.0)) {
    throw ValidationError("oracle_scores: noise_rate must be in [0,1]");
  }
  const int k = static_cast<int>(data.topic_names.size());
  std::unordered_map<std::string, int> truth;
  for (size_t i = 0; i < data.raw.size(); ++i) {
    truth.emplace(data.raw[i].id, data.true_topic[i]);
  }

  Rng rng(split_seed(seed, "oracle-noise"));
  ScoreMatrix scores;
  scores.doc_ids = corpus.doc_ids;
  scores.names = data.topic_names;
  scores.p.setConstant(corpus.n_docs(), k, 0.10);
  for (int d = 0; d < corpus.n_docs(); ++d) {
    auto it = truth.find(corpus.doc_ids[d]);
    if (it == truth.end()) {
      throw ValidationError("oracle_scores: doc '" + corpus.doc_ids[d] +
                            "' is not part of the planted corpus");
    }
    int assigned = it->second;
    if (noise_rate > 0.0 && rng.uniform() < noise_rate) {
      int offset = 1 + static_cast<int>(rng.index(k - 1));
      assigned = (assigned + offset) % k;
    }
    scores.p(d, assigned) = 0.85;
  }
  scores.validate();
  return scores;
}

std::vector<int> gold_topics(const SyntheticData& data, const Corpus& corpus) {
  std::unordered_map<std::string, int> truth;
  for (size_t i = 0; i < data.raw.size(); ++i) {
    truth.emplace(data.raw[i].id, data.true_topic[i]);
  }
  std::vector<int> out(corpus.n_docs());
  for (int d = 0; d < corpus.n_docs(); ++d) {
    auto it = truth.find(corpus.doc_ids[d]);
    if (it == truth.end()) {
      throw ValidationError("gold_topics: doc '" + corpus.doc_ids[d] +
                            "' is not part of the planted corpus");
    }
    out[d] = it->second;
  }
  return out;
}

}  // namespace ctm
