// Microbenchmarks for the training and evaluation hot paths. Shapes mimic a
// small production run: ~600 docs, vocab in the hundreds, k=25 topics.

#include <benchmark/benchmark.h>

#include "ctm/ectm.hpp"
#include "ctm/llda.hpp"
#include "ctm/metrics.hpp"
#include "ctm/prior.hpp"
#include "ctm/synthetic.hpp"

using namespace ctm;

namespace {

struct Fixture {
  SyntheticData data;
  Corpus corpus;
  Corpus corpus_multi;  // three labels per doc so Gibbs actually samples
  ReferenceTopics ref;
  EctmModel model;
  Eigen::MatrixXd theta_t;

  Fixture() {
    SyntheticSpec spec;
    spec.n_topics = 25;
    spec.docs_per_topic = 24;
    spec.words_per_topic = 20;
    spec.background_words = 10;
    spec.embed_dim = 64;
    spec.seed = 99;
    data = make_planted(spec);
    PreprocessRules rules;
    rules.min_word_count = 1;
    corpus = preprocess(data.raw, rules);

    std::vector<RawDoc> multi = data.raw;
    const int k = static_cast<int>(data.topic_names.size());
    for (size_t d = 0; d < multi.size(); ++d) {
      int t = data.true_topic[d];
      multi[d].labels = {data.topic_names[t], data.topic_names[(t + 1) % k],
                         data.topic_names[(t + 2) % k]};
    }
    corpus_multi = preprocess(multi, rules);

    LldaConfig lcfg;
    lcfg.iterations = 20;
    lcfg.burn_in = 10;
    lcfg.seed = 7;
    ref = train_llda(corpus, data.topic_names, lcfg);

    VocabEmbedding rho = project_vocab(data.embeddings, corpus.vocab, 13);
    VocabEmbedding rho_tilde = project_vocab(data.embeddings, ref.ref_vocab, 13);
    EctmConfig cfg;
    cfg.k = ref.k();
    cfg.embed_dim = spec.embed_dim;
    cfg.hidden = 300;
    cfg.seed = 11;
    model = init_model(cfg, rho.matrix, rho_tilde.matrix, corpus);

    ScoreMatrix scores = oracle_scores(data, corpus, 0.1, 5);
    theta_t = soft_labels(scores).theta_t;
  }
};

Fixture& fixture() {
  static Fixture f;
  return f;
}

void BM_EncodeDoc(benchmark::State& state) {
  Fixture& f = fixture();
  Eigen::VectorXd x = normalized_bow(f.corpus, 0);
  for (auto _ : state) {
    auto [mu, lv] = encode(f.model, x);
    benchmark::DoNotOptimize(mu);
    benchmark::DoNotOptimize(lv);
  }
}
BENCHMARK(BM_EncodeDoc);

void BM_TopicMatrices(benchmark::State& state) {
  Fixture& f = fixture();
  for (auto _ : state) {
    TopicMatrices tm = topic_matrices(f.model);
    benchmark::DoNotOptimize(tm.beta);
  }
}
BENCHMARK(BM_TopicMatrices);

void BM_LossBatch64(benchmark::State& state) {
  Fixture& f = fixture();
  std::vector<int> batch;
  for (int d = 0; d < 64; ++d) batch.push_back(d);
  Rng rng(3);
  Eigen::MatrixXd noise(f.model.config.k, 64);
  for (Eigen::Index c = 0; c < noise.cols(); ++c)
    for (Eigen::Index r = 0; r < noise.rows(); ++r) noise(r, c) = rng.normal();
  for (auto _ : state) {
    LossBreakdown lb = loss(f.model, f.corpus, batch, f.ref, f.theta_t, noise);
    benchmark::DoNotOptimize(lb.total);
  }
}
BENCHMARK(BM_LossBatch64);

void BM_GradientsBatch64(benchmark::State& state) {
  Fixture& f = fixture();
  std::vector<int> batch;
  for (int d = 0; d < 64; ++d) batch.push_back(d);
  Rng rng(3);
  Eigen::MatrixXd noise(f.model.config.k, 64);
  for (Eigen::Index c = 0; c < noise.cols(); ++c)
    for (Eigen::Index r = 0; r < noise.rows(); ++r) noise(r, c) = rng.normal();
  for (auto _ : state) {
    Gradients g = gradients(f.model, f.corpus, batch, f.ref, f.theta_t, noise);
    benchmark::DoNotOptimize(g.alpha);
  }
}
BENCHMARK(BM_GradientsBatch64);

void BM_LldaTraining(benchmark::State& state) {
  Fixture& f = fixture();
  LldaConfig cfg;
  cfg.iterations = static_cast<int>(state.range(0));
  cfg.burn_in = cfg.iterations / 2;
  cfg.seed = 7;
  for (auto _ : state) {
    ReferenceTopics ref = train_llda(f.corpus_multi, f.data.topic_names, cfg);
    benchmark::DoNotOptimize(ref.beta_r);
  }
  state.SetItemsProcessed(state.iterations() * cfg.iterations *
                          f.corpus_multi.total_tokens());
}
BENCHMARK(BM_LldaTraining)->Arg(10)->Arg(50);

void BM_InferTheta(benchmark::State& state) {
  Fixture& f = fixture();
  for (auto _ : state) {
    Eigen::MatrixXd theta = infer_theta(f.model, f.corpus);
    benchmark::DoNotOptimize(theta);
  }
  state.SetItemsProcessed(state.iterations() * f.corpus.n_docs());
}
BENCHMARK(BM_InferTheta);

void BM_TopicCoherence(benchmark::State& state) {
  Fixture& f = fixture();
  auto words = top_words(f.model, 10);
  for (auto _ : state) {
    double tc = topic_coherence(words, f.corpus);
    benchmark::DoNotOptimize(tc);
  }
}
BENCHMARK(BM_TopicCoherence);

void BM_SoftLabels(benchmark::State& state) {
  Fixture& f = fixture();
  ScoreMatrix scores = oracle_scores(f.data, f.corpus, 0.1, 5);
  for (auto _ : state) {
    PriorMatrix prior = soft_labels(scores);
    benchmark::DoNotOptimize(prior.theta_t);
  }
}
BENCHMARK(BM_SoftLabels);

}  // namespace

BENCHMARK_MAIN();
