#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "ctm/corpus.hpp"
#include "doctest.h"

using namespace ctm;
namespace fs = std::filesystem;

namespace {

PreprocessRules open_rules() {
  PreprocessRules r;
  r.max_doc_frequency = 1.0;
  r.min_word_count = 0;
  r.stopwords.clear();
  return r;
}

std::string temp_dir(const std::string& tag) {
  fs::path p = fs::temp_directory_path() / ("ctm_test_" + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p.string();
}

}  // namespace

TEST_CASE("tokenize lowercases, splits and drops short or numeric tokens") {
  auto t = tokenize("The cat, the CAT sat-on 42 mats! x 3rd");
  CHECK(t == std::vector<std::string>{"the", "cat", "the", "cat", "sat", "on", "mats", "3rd"});
  // "42" is purely numeric, "x" is one char, "3rd" mixes digits and letters
  auto raw = tokenize("Mixed CASE", false);
  CHECK(raw == std::vector<std::string>{"Mixed", "CASE"});
  CHECK(tokenize("").empty());
  CHECK(tokenize("  ,,, 1 2 99 ").empty());
}

TEST_CASE("preprocess orders vocab by count then lexicographically") {
  std::vector<RawDoc> raw{
      {"d1", "bb aa bb cc", {}},
      {"d2", "aa bb cc cc", {}},
  };
  Corpus c = preprocess(raw, open_rules());
  // counts: bb=3, cc=3, aa=2 -> ties broken alphabetically
  CHECK(c.vocab == std::vector<std::string>{"bb", "cc", "aa"});
  CHECK(c.n_docs() == 2);
  CHECK(c.doc_tokens(0) == 4);
  // d1 = "bb aa bb cc": ids bb=0, cc=1, aa=2, entries sorted by word id
  CHECK(c.docs[0] == std::vector<std::pair<int, int>>{{0, 2}, {1, 1}, {2, 1}});
}

TEST_CASE("document frequency pruning is strict") {
  // word "hot" in 3 of 4 docs: df = 0.75 > 0.70 -> pruned
  // word "ice" in 2 of 4 docs: df = 0.50 -> kept
  std::vector<RawDoc> raw{
      {"d1", "hot ice", {}},
      {"d2", "hot ice", {}},
      {"d3", "hot cold", {}},
      {"d4", "cold cold", {}},
  };
  PreprocessRules r = open_rules();
  r.max_doc_frequency = 0.70;
  Corpus c = preprocess(raw, r);
  CHECK(c.word_index("hot") == -1);
  CHECK(c.word_index("ice") >= 0);
  CHECK(c.word_index("cold") >= 0);

  // at exactly the threshold the word stays
  r.max_doc_frequency = 0.75;
  Corpus c2 = preprocess(raw, r);
  CHECK(c2.word_index("hot") >= 0);
}

TEST_CASE("min_word_count and stopwords prune") {
  std::vector<RawDoc> raw{
      {"d1", "the cat cat cat dog", {}},
      {"d2", "the dog", {}},
  };
  PreprocessRules r = open_rules();
  r.min_word_count = 2;
  r.stopwords = {"the"};
  Corpus c = preprocess(raw, r);
  CHECK(c.word_index("the") == -1);
  CHECK(c.word_index("cat") >= 0);
  CHECK(c.word_index("dog") >= 0);

  r.min_word_count = 3;
  Corpus c2 = preprocess(raw, r);
  CHECK(c2.word_index("dog") == -1);
  CHECK(c2.vocab == std::vector<std::string>{"cat"});
}

TEST_CASE("empty vocabulary names the triggering rule") {
  std::vector<RawDoc> raw{
      {"d1", "same same", {}},
      {"d2", "same", {}},
  };
  PreprocessRules r = open_rules();
  r.max_doc_frequency = 0.5;
  CHECK_THROWS_WITH_AS(preprocess(raw, r),
                       doctest::Contains("max_doc_frequency"), ValidationError);

  PreprocessRules r2 = open_rules();
  r2.min_word_count = 100;
  CHECK_THROWS_WITH_AS(preprocess(raw, r2),
                       doctest::Contains("min_word_count"), ValidationError);

  PreprocessRules r3 = open_rules();
  r3.stopwords = {"same"};
  CHECK_THROWS_WITH_AS(preprocess(raw, r3),
                       doctest::Contains("stopword_list"), ValidationError);
}

TEST_CASE("empty documents are retained, flagged and excluded from training data") {
  std::vector<RawDoc> raw{
      {"d1", "alpha beta alpha", {}},
      {"d2", "??? 42", {}},  // tokenizes to nothing
      {"d3", "beta beta", {}},
  };
  Corpus c = preprocess(raw, open_rules());
  CHECK(c.n_docs() == 3);
  CHECK(c.doc_empty(1));
  CHECK_FALSE(c.doc_empty(0));
  CHECK(c.nonempty_docs() == std::vector<int>{0, 2});
  CHECK_THROWS_WITH_AS(normalized_bow(c, 1), doctest::Contains("empty document"),
                       ValidationError);
}

TEST_CASE("normalized_bow sums to one") {
  std::vector<RawDoc> raw{{"d1", "aa aa bb cc", {}}};
  Corpus c = preprocess(raw, open_rules());
  Eigen::VectorXd x = normalized_bow(c, 0);
  CHECK(x.sum() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(x[c.word_index("aa")] == doctest::Approx(0.5));
}

TEST_CASE("preprocess validates ids and rules") {
  CHECK_THROWS_AS(preprocess({}, open_rules()), ValidationError);
  CHECK_THROWS_AS(preprocess({{"d1", "a b", {}}, {"d1", "c d", {}}}, open_rules()),
                  ValidationError);
  CHECK_THROWS_AS(preprocess({{"bad,id", "aa bb", {}}}, open_rules()), ValidationError);
  PreprocessRules bad = open_rules();
  bad.max_doc_frequency = 0.0;
  CHECK_THROWS_AS(preprocess({{"d1", "aa bb", {}}}, bad), ValidationError);
  bad = open_rules();
  bad.min_word_count = -1;
  CHECK_THROWS_AS(preprocess({{"d1", "aa bb", {}}}, bad), ValidationError);
}

TEST_CASE("corpus round-trips through the directory format") {
  std::vector<RawDoc> raw{
      {"d1", "alpha beta alpha gamma", {"news"}},
      {"d2", "42", {}},  // empty after tokenization, no label
      {"d3", "beta gamma beta", {"sports", "news"}},
  };
  Corpus c = preprocess(raw, open_rules());
  std::string dir = temp_dir("roundtrip");
  save_corpus(c, dir, "{\"seed\": 7}");

  Corpus l = load_corpus(dir);
  CHECK(l.vocab == c.vocab);
  CHECK(l.doc_ids == c.doc_ids);
  CHECK(l.docs == c.docs);
  CHECK(l.label_names == c.label_names);
  CHECK(l.labels == c.labels);
  CHECK(l.doc_empty(1));
  CHECK(l.vocab_hash() == c.vocab_hash());
  CHECK(fs::exists(fs::path(dir) / "meta.json"));
  fs::remove_all(dir);
}

TEST_CASE("load_corpus validates the files") {
  std::string dir = temp_dir("badload");
  {
    std::ofstream(dir + "/vocab.txt") << "aa\nbb\n";
    std::ofstream(dir + "/labels.csv") << "doc_id,label\nd1,\n";
    std::ofstream(dir + "/counts.csv") << "doc_id,word_id,count\nd1,5,1\n";
  }
  CHECK_THROWS_WITH_AS(load_corpus(dir), doctest::Contains("out of range"),
                       ValidationError);
  {
    std::ofstream(dir + "/counts.csv") << "doc_id,word_id,count\nd9,0,1\n";
  }
  CHECK_THROWS_WITH_AS(load_corpus(dir), doctest::Contains("d9"), ValidationError);
  {
    std::ofstream(dir + "/counts.csv") << "doc_id,word_id,count\nd1,0,0\n";
  }
  CHECK_THROWS_AS(load_corpus(dir), ValidationError);
  CHECK_THROWS_AS(load_corpus(dir + "/missing"), IoError);
  fs::remove_all(dir);
}

TEST_CASE("read_jsonl parses ids, text and labels") {
  std::string dir = temp_dir("jsonl");
  std::string path = dir + "/docs.jsonl";
  {
    std::ofstream f(path);
    f << R"({"id": "a", "text": "one two", "label": "x"})" << "\n";
    f << "\n";
    f << R"({"id": 7, "text": "three"})" << "\n";
    f << R"({"id": "b", "text": "four", "label": ["x", "y"]})" << "\n";
    f << R"({"id": "c", "text": "five", "label": "x|y"})" << "\n";
  }
  auto docs = read_jsonl(path);
  REQUIRE(docs.size() == 4);
  CHECK(docs[0].id == "a");
  CHECK(docs[0].labels == std::vector<std::string>{"x"});
  CHECK(docs[1].id == "7");
  CHECK(docs[1].labels.empty());
  CHECK(docs[2].labels == std::vector<std::string>{"x", "y"});
  CHECK(docs[3].labels == std::vector<std::string>{"x", "y"});

  {
    std::ofstream f(path);
    f << "{not json}\n";
  }
  CHECK_THROWS_WITH_AS(read_jsonl(path), doctest::Contains("line 1"), ValidationError);
  {
    std::ofstream f(path);
    f << R"({"text": "no id"})" << "\n";
  }
  CHECK_THROWS_WITH_AS(read_jsonl(path), doctest::Contains("id"), ValidationError);
  CHECK_THROWS_AS(read_jsonl(dir + "/absent.jsonl"), IoError);
  fs::remove_all(dir);
}

TEST_CASE("labels map to sorted distinct names") {
  std::vector<RawDoc> raw{
      {"d1", "aa bb", {"zebra"}},
      {"d2", "aa bb", {"apple", "zebra"}},
  };
  Corpus c = preprocess(raw, open_rules());
  CHECK(c.label_names == std::vector<std::string>{"apple", "zebra"});
  CHECK(c.labels[0] == std::vector<int>{1});
  CHECK(c.labels[1] == std::vector<int>{0, 1});
}

TEST_CASE("parallel tokenization matches serial") {
  std::vector<RawDoc> raw;
  for (int i = 0; i < 200; ++i) {
    raw.push_back({"d" + std::to_string(i),
                   "alpha beta gamma delta word" + std::to_string(i % 17), {}});
  }
  Corpus serial = preprocess(raw, open_rules());
  setenv("CTM_THREADS", "4", 1);
  Corpus parallel = preprocess(raw, open_rules());
  unsetenv("CTM_THREADS");
  CHECK(serial.vocab == parallel.vocab);
  CHECK(serial.docs == parallel.docs);
}

TEST_CASE("default stopwords cover common function words") {
  const auto& sw = default_stopwords();
  CHECK(sw.count("the") == 1);
  CHECK(sw.count("and") == 1);
  CHECK(sw.count("cat") == 0);
}
