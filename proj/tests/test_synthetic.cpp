#include <set>

#include "ctm/metrics.hpp"
#include "ctm/synthetic.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace ctm;

TEST_CASE("spec validation") {
  SyntheticSpec s;
  CHECK_NOTHROW(s.validate());
  s.n_topics = 1;
  CHECK_THROWS_AS(s.validate(), ValidationError);
  s = SyntheticSpec{};
  s.doc_len_min = 10;
  s.doc_len_max = 5;
  CHECK_THROWS_AS(s.validate(), ValidationError);
}

TEST_CASE("generation is deterministic per seed") {
  SyntheticSpec spec;
  spec.n_topics = 2;
  spec.docs_per_topic = 10;
  spec.words_per_topic = 6;
  spec.background_words = 3;
  spec.doc_len_min = 10;
  spec.doc_len_max = 20;
  spec.embed_dim = 8;
  spec.seed = 42;

  SyntheticData a = make_planted(spec);
  SyntheticData b = make_planted(spec);
  REQUIRE(a.raw.size() == 20);
  CHECK(a.topic_names == std::vector<std::string>{"sports", "economy"});
  for (size_t i = 0; i < a.raw.size(); ++i) {
    CHECK(a.raw[i].id == b.raw[i].id);
    CHECK(a.raw[i].text == b.raw[i].text);
    CHECK(a.raw[i].labels == b.raw[i].labels);
  }
  CHECK(a.true_topic == b.true_topic);
  for (const auto& [word, vec] : a.embeddings.vectors) {
    REQUIRE(b.embeddings.vectors.count(word) == 1);
    CHECK(same_bits(vec, b.embeddings.vectors.at(word)));
  }

  spec.seed = 43;
  SyntheticData c = make_planted(spec);
  bool any_diff = false;
  for (size_t i = 0; i < a.raw.size(); ++i) any_diff |= a.raw[i].text != c.raw[i].text;
  CHECK(any_diff);
}

TEST_CASE("topic vocabularies are disjoint and background words get pruned") {
  SyntheticSpec spec;
  spec.n_topics = 3;
  spec.docs_per_topic = 20;
  spec.words_per_topic = 6;
  spec.background_words = 4;
  spec.doc_len_min = 15;
  spec.doc_len_max = 25;
  spec.embed_dim = 8;
  spec.seed = 7;
  SyntheticData data = make_planted(spec);

  // every document leads with the background words
  for (const auto& doc : data.raw) {
    CHECK(doc.text.rfind("common00 common01 common02 common03 ", 0) == 0);
  }

  PreprocessRules rules;  // default 0.70 document-frequency cutoff
  rules.min_word_count = 2;
  Corpus corpus = preprocess(data.raw, rules);

  for (const auto& w : corpus.vocab) {
    CHECK(w.rfind("common", 0) != 0);  // background df = 1.0 > 0.70
    bool topical = w.rfind("sports", 0) == 0 || w.rfind("economy", 0) == 0 ||
                   w.rfind("politics", 0) == 0;
    CHECK(topical);
  }

  // documents only ever contain their own topic's words
  for (int d = 0; d < corpus.n_docs(); ++d) {
    int t = data.true_topic[d];
    for (const auto& [w, cnt] : corpus.docs[d]) {
      CHECK(corpus.vocab[w].rfind(data.topic_names[t], 0) == 0);
    }
  }

  // labels carry the planted topic
  CHECK(corpus.label_names == std::vector<std::string>{"economy", "politics", "sports"});
  std::vector<int> gold = gold_topics(data, corpus);
  for (int d = 0; d < corpus.n_docs(); ++d) {
    CHECK(corpus.doc_ids[d] == data.raw[d].id);
    CHECK(gold[d] == data.true_topic[d]);
  }

  // names and words all have embeddings
  for (const auto& name : data.topic_names) {
    CHECK(data.embeddings.vectors.count(name) == 1);
  }
  for (const auto& w : corpus.vocab) {
    CHECK(data.embeddings.vectors.count(w) == 1);
  }
}

TEST_CASE("reversing the first topic changes only its documents") {
  SyntheticSpec spec;
  spec.n_topics = 3;
  spec.docs_per_topic = 15;
  spec.words_per_topic = 8;
  spec.background_words = 2;
  spec.doc_len_min = 20;
  spec.doc_len_max = 30;
  spec.embed_dim = 8;
  spec.seed = 11;

  SyntheticData base = make_planted(spec);
  spec.reverse_first_topic = true;
  SyntheticData flipped = make_planted(spec);

  bool topic0_differs = false;
  for (size_t i = 0; i < base.raw.size(); ++i) {
    CHECK(base.raw[i].id == flipped.raw[i].id);
    if (base.true_topic[i] == 0) {
      topic0_differs |= base.raw[i].text != flipped.raw[i].text;
    } else {
      CHECK(base.raw[i].text == flipped.raw[i].text);
    }
  }
  CHECK(topic0_differs);

  // embeddings are independent of the flip
  for (const auto& [word, vec] : base.embeddings.vectors) {
    CHECK(same_bits(vec, flipped.embeddings.vectors.at(word)));
  }
}

TEST_CASE("oracle scores encode the planted assignment") {
  SyntheticSpec spec;
  spec.n_topics = 3;
  spec.docs_per_topic = 15;
  spec.words_per_topic = 6;
  spec.background_words = 2;
  spec.doc_len_min = 10;
  spec.doc_len_max = 20;
  spec.embed_dim = 8;
  spec.seed = 3;
  SyntheticData data = make_planted(spec);
  PreprocessRules rules;
  rules.min_word_count = 2;
  Corpus corpus = preprocess(data.raw, rules);
  std::vector<int> gold = gold_topics(data, corpus);

  ScoreMatrix clean = oracle_scores(data, corpus, 0.0, 5);
  REQUIRE(clean.p.rows() == corpus.n_docs());
  REQUIRE(clean.p.cols() == 3);
  for (int d = 0; d < corpus.n_docs(); ++d) {
    int hi = 0;
    clean.p.row(d).maxCoeff(&hi);
    CHECK(hi == gold[d]);
    CHECK(clean.p(d, gold[d]) == 0.85);
    for (int j = 0; j < 3; ++j) {
      if (j != gold[d]) CHECK(clean.p(d, j) == 0.10);
    }
  }

  // full noise moves every assignment off the gold topic
  ScoreMatrix noisy = oracle_scores(data, corpus, 1.0, 5);
  for (int d = 0; d < corpus.n_docs(); ++d) {
    int hi = 0;
    noisy.p.row(d).maxCoeff(&hi);
    CHECK(hi != gold[d]);
  }

  // same seed, same flips
  ScoreMatrix noisy2 = oracle_scores(data, corpus, 1.0, 5);
  CHECK(same_bits(noisy.p, noisy2.p));

  CHECK_THROWS_AS(oracle_scores(data, corpus, -0.1, 5), ValidationError);
  CHECK_THROWS_AS(oracle_scores(data, corpus, 1.1, 5), ValidationError);
}

TEST_CASE("document lengths respect the configured range") {
  SyntheticSpec spec;
  spec.n_topics = 2;
  spec.docs_per_topic = 25;
  spec.words_per_topic = 5;
  spec.background_words = 1;
  spec.doc_len_min = 12;
  spec.doc_len_max = 17;
  spec.embed_dim = 4;
  spec.seed = 19;
  SyntheticData data = make_planted(spec);

  std::set<int> seen;
  for (const auto& doc : data.raw) {
    int tokens = 0;
    bool in_word = false;
    for (char ch : doc.text) {
      if (ch == ' ') {
        in_word = false;
      } else if (!in_word) {
        in_word = true;
        ++tokens;
      }
    }
    int len = tokens - spec.background_words;
    CHECK(len >= spec.doc_len_min);
    CHECK(len <= spec.doc_len_max);
    seen.insert(len);
  }
  CHECK(seen.size() > 1);  // the range is actually sampled
}
