#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ctm/compare.hpp"
#include "ctm/ectm.hpp"
#include "ctm/llda.hpp"
#include "ctm/metrics.hpp"
#include "ctm/prior.hpp"
#include "ctm/synthetic.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace ctm;

namespace {

// machine-readable channel: stdout unless --out redirects it to a file
void emit(const json& j, const std::string& out) {
  if (out.empty()) {
    std::cout << j.dump(2) << "\n";
    return;
  }
  std::ofstream f(out);
  if (!f) throw IoError("cannot write '" + out + "'");
  f << j.dump(2) << "\n";
  if (!f) throw IoError("write failed for '" + out + "'");
  std::cerr << "wrote " << out << "\n";
}

json meta_block(const std::string& command, uint64_t seed, const json& config) {
  return json{{"tool", "ctm"}, {"command", command}, {"seed", seed},
              {"config", config}};
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  std::stringstream ss(s);
  while (std::getline(ss, cur, ',')) {
    size_t a = cur.find_first_not_of(" \t");
    size_t b = cur.find_last_not_of(" \t");
    if (a == std::string::npos) {
      throw ValidationError("empty name in list '" + s + "'");
    }
    out.push_back(cur.substr(a, b - a + 1));
  }
  if (out.empty()) throw ValidationError("empty name list");
  return out;
}

void write_scores_csv(const ScoreMatrix& s, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot write '" + path + "'");
  f << "doc_id";
  for (const auto& n : s.names) f << "," << n;
  f << "\n";
  for (Eigen::Index d = 0; d < s.p.rows(); ++d) {
    f << s.doc_ids[d];
    for (Eigen::Index j = 0; j < s.p.cols(); ++j) {
      f << "," << format_double(s.p(d, j));
    }
    f << "\n";
  }
  if (!f) throw IoError("write failed for '" + path + "'");
}

void write_theta_csv(const std::string& path, const std::vector<std::string>& doc_ids,
                     const std::vector<std::string>& names,
                     const Eigen::MatrixXd& theta) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot write '" + path + "'");
  f << "doc_id";
  for (const auto& n : names) f << "," << n;
  f << "\n";
  for (Eigen::Index d = 0; d < theta.rows(); ++d) {
    f << doc_ids[d];
    for (Eigen::Index j = 0; j < theta.cols(); ++j) {
      f << "," << format_double(theta(d, j));
    }
    f << "\n";
  }
  if (!f) throw IoError("write failed for '" + path + "'");
}

struct ThetaFile {
  std::vector<std::string> doc_ids;
  std::vector<std::string> names;
  Eigen::MatrixXd theta;
};

ThetaFile read_theta_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(f, line)) throw IoError(path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  ThetaFile tf;
  {
    std::stringstream ss(line);
    std::string cell;
    bool first = true;
    while (std::getline(ss, cell, ',')) {
      if (first) {
        if (cell != "doc_id") {
          throw IoError(path + ": header must start with doc_id");
        }
        first = false;
      } else {
        tf.names.push_back(cell);
      }
    }
    if (tf.names.empty()) throw IoError(path + ": no topic columns in header");
  }
  const size_t k = tf.names.size();
  std::vector<std::vector<double>> rows;
  size_t lineno = 1;
  while (std::getline(f, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    if (!std::getline(ss, cell, ',')) continue;
    tf.doc_ids.push_back(cell);
    std::vector<double> vals;
    while (std::getline(ss, cell, ',')) {
      try {
        size_t used = 0;
        double v = std::stod(cell, &used);
        if (used != cell.size()) throw std::invalid_argument(cell);
        vals.push_back(v);
      } catch (const std::exception&) {
        throw IoError(path + ":" + std::to_string(lineno) + ": bad number '" +
                      cell + "'");
      }
    }
    if (vals.size() != k) {
      throw IoError(path + ":" + std::to_string(lineno) + ": expected " +
                    std::to_string(k) + " values, got " +
                    std::to_string(vals.size()));
    }
    rows.push_back(std::move(vals));
  }
  tf.theta.resize(static_cast<Eigen::Index>(rows.size()),
                  static_cast<Eigen::Index>(k));
  for (size_t d = 0; d < rows.size(); ++d) {
    for (size_t j = 0; j < k; ++j) {
      tf.theta(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(j)) =
          rows[d][j];
    }
  }
  return tf;
}

// labels.csv as written by the corpus serializer: header doc_id,label with
// multi-label cells joined by '|'
std::vector<std::pair<std::string, std::vector<std::string>>> read_labels_csv(
    const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(f, line)) throw IoError(path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "doc_id,label") {
    throw IoError(path + ": expected header 'doc_id,label'");
  }
  std::vector<std::pair<std::string, std::vector<std::string>>> out;
  size_t lineno = 1;
  while (std::getline(f, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    size_t comma = line.find(',');
    if (comma == std::string::npos) {
      throw IoError(path + ":" + std::to_string(lineno) + ": expected doc_id,label");
    }
    std::string id = line.substr(0, comma);
    std::string rest = line.substr(comma + 1);
    std::vector<std::string> labels;
    if (!rest.empty()) {
      std::stringstream ss(rest);
      std::string part;
      while (std::getline(ss, part, '|')) labels.push_back(part);
    }
    out.emplace_back(std::move(id), std::move(labels));
  }
  return out;
}

json breakdown_json(const LossBreakdown& b) {
  return json{{"total", b.total},
              {"neg_recon", b.neg_recon},
              {"kl_gauss", b.kl_gauss},
              {"r_beta", b.r_beta},
              {"r_theta", b.r_theta}};
}

// ---------------------------------------------------------------- preprocess

struct PreprocessOpts {
  std::string input, out, stopwords_file;
  double max_df = 0.70;
  long min_count = 10;
  bool keep_case = false;
  bool no_default_stopwords = false;
};

void cmd_preprocess(const PreprocessOpts& o) {
  PreprocessRules rules;
  rules.max_doc_frequency = o.max_df;
  rules.min_word_count = o.min_count;
  rules.lowercase = !o.keep_case;
  if (!o.no_default_stopwords) rules.stopwords = default_stopwords();
  if (!o.stopwords_file.empty()) {
    auto extra = load_stopwords(o.stopwords_file);
    rules.stopwords.insert(extra.begin(), extra.end());
  }

  std::vector<RawDoc> raw = read_jsonl(o.input);
  Corpus corpus = preprocess(raw, rules);

  json cfg{{"input", o.input},
           {"max_df", o.max_df},
           {"min_count", o.min_count},
           {"lowercase", rules.lowercase},
           {"default_stopwords", !o.no_default_stopwords},
           {"stopwords_file", o.stopwords_file}};
  save_corpus(corpus, o.out, meta_block("preprocess", 0, cfg).dump());

  int empty = 0;
  for (int d = 0; d < corpus.n_docs(); ++d) empty += corpus.doc_empty(d);
  json summary{{"corpus", o.out},
               {"docs", corpus.n_docs()},
               {"vocab", corpus.n_words()},
               {"tokens", corpus.total_tokens()},
               {"empty_docs", empty},
               {"labels", corpus.label_names}};
  std::cerr << "preprocessed " << corpus.n_docs() << " docs, vocab "
            << corpus.n_words() << ", " << empty << " empty\n";
  emit(summary, "");
}

// ----------------------------------------------------------- train-reference

struct TrainRefOpts {
  std::string corpus_dir, topics, out;
  LldaConfig cfg;
  uint64_t seed = 0;
};

void cmd_train_reference(const TrainRefOpts& o) {
  Corpus corpus = load_corpus(o.corpus_dir);
  std::vector<std::string> names = split_list(o.topics);
  LldaConfig cfg = o.cfg;
  cfg.seed = split_seed(o.seed, "reference");

  ReferenceTopics ref = train_llda(corpus, names, cfg);

  json cfgj{{"corpus", o.corpus_dir}, {"topics", names},
            {"alpha", cfg.alpha},    {"eta", cfg.eta},
            {"iters", cfg.iterations}, {"burn_in", cfg.burn_in},
            {"sample_every", cfg.sample_every}, {"chains", cfg.chains}};
  save_reference(ref, o.out, meta_block("train-reference", o.seed, cfgj).dump());

  std::cerr << "reference topics: k=" << ref.k() << ", vocab=" << ref.vocab_size()
            << "\n";
  emit(json{{"reference", o.out},
            {"k", ref.k()},
            {"vocab", ref.vocab_size()},
            {"names", ref.names}},
       "");
}

// ------------------------------------------------------------------ gen-prior

struct GenPriorOpts {
  std::string corpus_dir, ref_path, scores_path, embeddings, out;
  bool proxy = false;
  bool hard = false;
  double tau = 0.5;
  uint64_t embed_seed = 13;
};

void cmd_gen_prior(const GenPriorOpts& o) {
  if (o.proxy == !o.scores_path.empty()) {
    throw ValidationError("gen-prior: exactly one of --scores or --proxy required");
  }
  Corpus corpus = load_corpus(o.corpus_dir);
  ReferenceTopics ref = load_reference(o.ref_path);

  ScoreMatrix scores;
  std::vector<int> zero_docs;
  if (o.proxy) {
    if (o.embeddings.empty()) {
      throw ValidationError("gen-prior: --proxy requires --embeddings");
    }
    EmbeddingTable table = load_embeddings(o.embeddings);
    VocabEmbedding ve = project_vocab(table, corpus.vocab, o.embed_seed);
    Eigen::MatrixXd name_emb(table.dim, ref.k());
    for (int j = 0; j < ref.k(); ++j) {
      name_emb.col(j) = name_vector(table, ref.names[j], o.embed_seed);
    }
    scores = proxy_scores(corpus, ve, name_emb, ref.names, &zero_docs);
  } else {
    scores = import_scores(o.scores_path, corpus, ref.names);
  }

  PriorMatrix prior = o.hard ? hard_labels(scores, o.tau) : soft_labels(scores);

  json cfgj{{"corpus", o.corpus_dir},
            {"ref", o.ref_path},
            {"mode", o.proxy ? "proxy" : "scores"},
            {"scores", o.scores_path},
            {"hard", o.hard},
            {"tau", o.tau}};
  save_prior(prior, o.out, meta_block("gen-prior", o.embed_seed, cfgj).dump());

  std::cerr << "prior over " << prior.theta_t.rows() << " docs, k=" << ref.k()
            << ", " << prior.fallback_docs.size() << " uniform fallbacks\n";
  emit(json{{"prior", o.out},
            {"docs", prior.theta_t.rows()},
            {"k", ref.k()},
            {"fallback_docs", prior.fallback_docs.size()},
            {"zero_score_docs", zero_docs.size()}},
       "");
}

// ---------------------------------------------------------------------- train

struct TrainOpts {
  std::string corpus_dir, ref_path, prior_path, embeddings, out;
  EctmConfig cfg;
  uint64_t seed = 0;
  uint64_t embed_seed = 13;
};

void cmd_train(const TrainOpts& o) {
  Corpus corpus = load_corpus(o.corpus_dir);
  ReferenceTopics ref = load_reference(o.ref_path);
  PriorMatrix prior = load_prior(o.prior_path);
  EmbeddingTable table = load_embeddings(o.embeddings);

  VocabEmbedding rho = project_vocab(table, corpus.vocab, o.embed_seed);
  VocabEmbedding rho_tilde = project_vocab(table, ref.ref_vocab, o.embed_seed);

  EctmConfig cfg = o.cfg;
  cfg.k = ref.k();
  cfg.embed_dim = table.dim;
  cfg.seed = split_seed(o.seed, "ectm");

  EctmModel model = init_model(cfg, rho.matrix, rho_tilde.matrix, corpus);
  TrainResult result;
  try {
    result = train(model, corpus, ref, prior);
  } catch (const NumericalError&) {
    save_model(model, o.out);
    std::cerr << "saved last good checkpoint to " << o.out << "\n";
    throw;
  }
  save_model(model, o.out);

  json history = json::array();
  for (const auto& e : result.history) history.push_back(breakdown_json(e.mean));
  json summary{{"model", o.out},
               {"k", cfg.k},
               {"vocab", corpus.n_words()},
               {"epochs", static_cast<int>(result.history.size())},
               {"steps", result.total_steps},
               {"missing_embeddings", rho.missing.size()},
               {"missing_ref_embeddings", rho_tilde.missing.size()},
               {"final", breakdown_json(result.history.back().mean)},
               {"history", history}};
  std::cerr << "trained " << result.history.size() << " epochs ("
            << result.total_steps << " steps), final loss "
            << result.history.back().mean.total << "\n";
  emit(summary, "");
}

// ---------------------------------------------------------------------- infer

struct InferOpts {
  std::string model_path, corpus_dir, out;
};

void cmd_infer(const InferOpts& o) {
  EctmModel model = load_model(o.model_path);
  Corpus corpus = load_corpus(o.corpus_dir);
  if (corpus.vocab_hash() != model.corpus_vocab_hash) {
    throw ValidationError("infer: corpus vocabulary differs from the one the "
                          "model was trained on");
  }
  Eigen::MatrixXd theta = infer_theta(model, corpus);
  write_theta_csv(o.out, corpus.doc_ids, model.ref_names, theta);
  std::cerr << "wrote " << o.out << " (" << theta.rows() << " x " << theta.cols()
            << ")\n";
  emit(json{{"theta", o.out}, {"docs", theta.rows()}, {"k", theta.cols()}}, "");
}

// ------------------------------------------------------------------ top-words

struct TopWordsOpts {
  std::string model_path, out;
  int n = 5;
};

void cmd_top_words(const TopWordsOpts& o) {
  EctmModel model = load_model(o.model_path);
  auto words = top_words(model, o.n);
  json out{{"names", model.ref_names}, {"n", o.n}, {"words", words}};
  emit(out, o.out);
}

// ---------------------------------------------------------------- eval-topics

struct EvalTopicsOpts {
  std::string model_path, corpus_dir, out;
  int tc_words = 10;
  int td_words = 25;
};

void cmd_eval_topics(const EvalTopicsOpts& o) {
  EctmModel model = load_model(o.model_path);
  Corpus corpus = load_corpus(o.corpus_dir);
  if (corpus.vocab_hash() != model.corpus_vocab_hash) {
    throw ValidationError("eval-topics: corpus vocabulary differs from the one "
                          "the model was trained on");
  }
  TopicQualityReport rep;
  rep.coherence_words = o.tc_words;
  rep.diversity_words = o.td_words;
  rep.tc = topic_coherence(top_words(model, o.tc_words), corpus, &rep.per_topic_tc);
  rep.td = topic_diversity(top_words(model, o.td_words));
  rep.tq = topic_quality(rep.tc, rep.td);

  json out{{"tc", rep.tc},
           {"td", rep.td},
           {"tq", rep.tq},
           {"coherence_words", rep.coherence_words},
           {"diversity_words", rep.diversity_words},
           {"names", model.ref_names},
           {"per_topic_tc", rep.per_topic_tc}};
  std::cerr << "tc=" << rep.tc << " td=" << rep.td << " tq=" << rep.tq << "\n";
  emit(out, o.out);
}

// -------------------------------------------------------------- eval-classify

struct EvalClassifyOpts {
  std::string theta_path, gold_path, out;
};

void cmd_eval_classify(const EvalClassifyOpts& o) {
  ThetaFile tf = read_theta_csv(o.theta_path);
  auto gold_rows = read_labels_csv(o.gold_path);

  std::map<std::string, std::vector<std::string>> gold;
  for (auto& [id, labels] : gold_rows) {
    if (!gold.emplace(id, labels).second) {
      throw ValidationError("eval-classify: duplicate doc '" + id + "' in gold");
    }
  }
  if (gold.size() != tf.doc_ids.size()) {
    for (const auto& [id, labels] : gold) {
      if (std::find(tf.doc_ids.begin(), tf.doc_ids.end(), id) == tf.doc_ids.end()) {
        throw ValidationError("eval-classify: gold doc '" + id +
                              "' missing from theta");
      }
    }
  }

  std::vector<int> gold_ids;
  for (const auto& id : tf.doc_ids) {
    auto it = gold.find(id);
    if (it == gold.end()) {
      throw ValidationError("eval-classify: doc '" + id + "' has no gold label");
    }
    if (it->second.size() != 1) {
      throw ValidationError("eval-classify: doc '" + id +
                            "' needs exactly one gold label");
    }
    auto name_it = std::find(tf.names.begin(), tf.names.end(), it->second[0]);
    if (name_it == tf.names.end()) {
      throw ValidationError("eval-classify: gold label '" + it->second[0] +
                            "' is not a topic column");
    }
    gold_ids.push_back(static_cast<int>(name_it - tf.names.begin()));
  }

  std::vector<int> pred = classify(tf.theta);
  ClassificationReport rep =
      classification_report(pred, gold_ids, static_cast<int>(tf.names.size()));

  json out{{"docs", tf.doc_ids.size()},
           {"accuracy", rep.accuracy},
           {"macro_f1", rep.macro_f1},
           {"micro_f1", rep.micro_f1},
           {"names", tf.names},
           {"per_class_f1", rep.per_class_f1}};
  std::cerr << "accuracy=" << rep.accuracy << " macro_f1=" << rep.macro_f1
            << " micro_f1=" << rep.micro_f1 << "\n";
  emit(out, o.out);
}

// -------------------------------------------------------------------- compare

struct CompareOpts {
  std::string model_a, model_b, out, csv;
};

void cmd_compare(const CompareOpts& o) {
  EctmModel a = load_model(o.model_a);
  EctmModel b = load_model(o.model_b);
  ComparisonReport rep = corpus_divergence(a, b);

  json topics = json::array();
  for (Eigen::Index j = 0; j < rep.kl_ab.size(); ++j) {
    topics.push_back(json{{"name", rep.topic_names[j]},
                          {"kl_ab", rep.kl_ab[j]},
                          {"kl_ba", rep.kl_ba[j]},
                          {"kl_mean", rep.kl_mean[j]}});
  }
  json ranking = json::array();
  for (int id : rep.ranking) ranking.push_back(rep.topic_names[id]);
  json out{{"model_a", o.model_a},
           {"model_b", o.model_b},
           {"topics", topics},
           {"ranking", ranking}};

  if (!o.csv.empty()) {
    std::ofstream f(o.csv);
    if (!f) throw IoError("cannot write '" + o.csv + "'");
    f << "topic,kl_ab,kl_ba,kl_mean\n";
    for (int id : rep.ranking) {
      f << rep.topic_names[id] << "," << format_double(rep.kl_ab[id]) << ","
        << format_double(rep.kl_ba[id]) << "," << format_double(rep.kl_mean[id])
        << "\n";
    }
    if (!f) throw IoError("write failed for '" + o.csv + "'");
    std::cerr << "wrote " << o.csv << "\n";
  }
  std::cerr << "most divergent topic: " << rep.topic_names[rep.ranking[0]] << "\n";
  emit(out, o.out);
}

// -------------------------------------------------------------- context-words

struct ContextWordsOpts {
  std::string model_path, topic, out;
  int n = 20;
};

void cmd_context_words(const ContextWordsOpts& o) {
  EctmModel model = load_model(o.model_path);
  int j = topic_index(model, o.topic);
  auto words = context_words(model, j, o.n);
  emit(json{{"topic", o.topic}, {"n", o.n}, {"words", words}}, o.out);
}

// ----------------------------------------------------------------------- demo

struct DemoOpts {
  std::string dir = "ctm-demo";
  uint64_t seed = 7;
  double noise = 0.10;
};

void write_embeddings_file(const EmbeddingTable& table, const std::string& path) {
  std::vector<std::string> words;
  words.reserve(table.vectors.size());
  for (const auto& [w, v] : table.vectors) words.push_back(w);
  std::sort(words.begin(), words.end());
  std::ofstream f(path);
  if (!f) throw IoError("cannot write '" + path + "'");
  f << words.size() << " " << table.dim << "\n";
  for (const auto& w : words) {
    f << w;
    const Eigen::VectorXd& v = table.vectors.at(w);
    for (int i = 0; i < table.dim; ++i) f << " " << format_double(v[i]);
    f << "\n";
  }
  if (!f) throw IoError("write failed for '" + path + "'");
}

void cmd_demo(const DemoOpts& o) {
  fs::create_directories(o.dir);
  auto path = [&](const std::string& name) { return (fs::path(o.dir) / name).string(); };

  std::cerr << "[1/7] generating planted corpus\n";
  SyntheticSpec spec;
  spec.seed = split_seed(o.seed, "demo-data");
  SyntheticData data = make_planted(spec);
  {
    std::ofstream f(path("data.jsonl"));
    if (!f) throw IoError("cannot write data.jsonl");
    for (const auto& doc : data.raw) {
      f << json{{"id", doc.id}, {"text", doc.text}, {"label", doc.labels[0]}}.dump()
        << "\n";
    }
  }
  write_embeddings_file(data.embeddings, path("embeddings.txt"));

  std::cerr << "[2/7] preprocessing\n";
  std::vector<RawDoc> raw = read_jsonl(path("data.jsonl"));
  PreprocessRules rules;
  rules.stopwords = default_stopwords();
  Corpus corpus = preprocess(raw, rules);
  json pre_cfg{{"max_df", rules.max_doc_frequency},
               {"min_count", rules.min_word_count},
               {"lowercase", rules.lowercase}};
  save_corpus(corpus, path("corpus"), meta_block("demo", o.seed, pre_cfg).dump());

  std::cerr << "[3/7] reference topics (labeled Gibbs)\n";
  LldaConfig lcfg;
  lcfg.seed = split_seed(o.seed, "demo-reference");
  ReferenceTopics ref = train_llda(corpus, data.topic_names, lcfg);
  save_reference(ref, path("reference.json"),
                 meta_block("demo", o.seed, json{{"stage", "reference"}}).dump());

  std::cerr << "[4/7] prior from noisy oracle scores\n";
  ScoreMatrix scores =
      oracle_scores(data, corpus, o.noise, split_seed(o.seed, "demo-scores"));
  write_scores_csv(scores, path("scores.csv"));
  ScoreMatrix imported = import_scores(path("scores.csv"), corpus, ref.names);
  PriorMatrix prior = soft_labels(imported);
  save_prior(prior, path("prior.json"),
             meta_block("demo", o.seed, json{{"noise", o.noise}}).dump());

  std::cerr << "[5/7] training the topic model\n";
  EmbeddingTable table = load_embeddings(path("embeddings.txt"));
  VocabEmbedding rho = project_vocab(table, corpus.vocab, 13);
  VocabEmbedding rho_tilde = project_vocab(table, ref.ref_vocab, 13);
  EctmConfig cfg;
  cfg.k = ref.k();
  cfg.embed_dim = table.dim;
  cfg.seed = split_seed(o.seed, "demo-model");
  EctmModel model = init_model(cfg, rho.matrix, rho_tilde.matrix, corpus);
  TrainResult result = train(model, corpus, ref, prior);
  save_model(model, path("model.bin"));

  std::cerr << "[6/7] inference and topic words\n";
  Eigen::MatrixXd theta = infer_theta(model, corpus);
  write_theta_csv(path("theta.csv"), corpus.doc_ids, ref.names, theta);
  auto words10 = top_words(model, 10);
  {
    std::ofstream f(path("topics.json"));
    if (!f) throw IoError("cannot write topics.json");
    f << json{{"names", ref.names}, {"words", words10}}.dump(2) << "\n";
  }

  std::cerr << "[7/7] evaluation\n";
  std::vector<int> gold_topic = gold_topics(data, corpus);
  std::vector<int> pred = classify(theta);
  ClassificationReport crep =
      classification_report(pred, gold_topic, ref.k());

  std::vector<double> per_topic_tc;
  double tc = topic_coherence(words10, corpus, &per_topic_tc);
  double td = topic_diversity(top_words(model, 25));
  double tq = topic_quality(tc, td);

  json report{{"_meta", meta_block("demo", o.seed,
                                   json{{"noise", o.noise},
                                        {"docs", corpus.n_docs()},
                                        {"vocab", corpus.n_words()}})},
              {"accuracy", crep.accuracy},
              {"macro_f1", crep.macro_f1},
              {"micro_f1", crep.micro_f1},
              {"tc", tc},
              {"td", td},
              {"tq", tq},
              {"per_topic_tc", per_topic_tc},
              {"final_loss", breakdown_json(result.history.back().mean)},
              {"files",
               json{{"corpus", "corpus"},
                    {"reference", "reference.json"},
                    {"prior", "prior.json"},
                    {"model", "model.bin"},
                    {"theta", "theta.csv"},
                    {"topics", "topics.json"},
                    {"report", "report.json"}}}};
  {
    std::ofstream f(path("report.json"));
    if (!f) throw IoError("cannot write report.json");
    f << report.dump(2) << "\n";
  }
  std::cerr << "demo accuracy " << crep.accuracy << ", artifacts in " << o.dir
            << "\n";
  emit(report, "");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"coordinated topic modeling pipeline"};
  app.require_subcommand(1);
  app.set_config("--config", "", "read options from a TOML file");
  app.allow_config_extras(CLI::config_extras_mode::ignore);

  PreprocessOpts pre;
  auto* sp = app.add_subcommand("preprocess", "tokenize a JSONL corpus and save it");
  sp->add_option("--input", pre.input, "JSON Lines input file")->required();
  sp->add_option("--out", pre.out, "output corpus directory")->required();
  sp->add_option("--stopwords", pre.stopwords_file, "extra stopword file");
  sp->add_flag("--no-default-stopwords", pre.no_default_stopwords,
               "skip the built-in stopword list");
  sp->add_option("--max-df", pre.max_df, "prune words above this doc frequency");
  sp->add_option("--min-count", pre.min_count, "prune words below this count");
  sp->add_flag("--keep-case", pre.keep_case, "skip lowercasing");
  sp->callback([&] { cmd_preprocess(pre); });

  TrainRefOpts tr;
  auto* str_ = app.add_subcommand("train-reference",
                                  "labeled Gibbs sampler for reference topics");
  str_->add_option("--corpus", tr.corpus_dir, "corpus directory")->required();
  str_->add_option("--topics", tr.topics, "comma-separated topic names")->required();
  str_->add_option("--alpha", tr.cfg.alpha, "document-topic smoothing");
  str_->add_option("--eta", tr.cfg.eta, "topic-word smoothing");
  str_->add_option("--iters", tr.cfg.iterations, "Gibbs iterations");
  str_->add_option("--burn-in", tr.cfg.burn_in, "iterations before snapshots");
  str_->add_option("--sample-every", tr.cfg.sample_every, "snapshot stride");
  str_->add_option("--chains", tr.cfg.chains, "independent chains to average");
  str_->add_option("--seed", tr.seed, "root seed");
  str_->add_option("--out", tr.out, "reference JSON path")->required();
  str_->callback([&] { cmd_train_reference(tr); });

  GenPriorOpts gp;
  auto* sgp = app.add_subcommand("gen-prior", "document-topic prior from scores");
  sgp->add_option("--corpus", gp.corpus_dir, "corpus directory")->required();
  sgp->add_option("--ref", gp.ref_path, "reference JSON")->required();
  sgp->add_option("--scores", gp.scores_path, "score file (CSV or JSON)");
  sgp->add_flag("--proxy", gp.proxy, "cosine proxy scores from embeddings");
  sgp->add_option("--embeddings", gp.embeddings, "embedding file for --proxy");
  sgp->add_option("--embed-seed", gp.embed_seed, "fallback embedding seed");
  sgp->add_flag("--hard", gp.hard, "hard thresholded labels");
  sgp->add_option("--tau", gp.tau, "hard label threshold");
  sgp->add_option("--out", gp.out, "prior JSON path")->required();
  sgp->callback([&] { cmd_gen_prior(gp); });

  TrainOpts to;
  auto* st = app.add_subcommand("train", "train the embedded topic model");
  st->add_option("--corpus", to.corpus_dir, "corpus directory")->required();
  st->add_option("--ref", to.ref_path, "reference JSON")->required();
  st->add_option("--prior", to.prior_path, "prior JSON")->required();
  st->add_option("--embeddings", to.embeddings, "word embedding file")->required();
  st->add_option("--embed-seed", to.embed_seed, "fallback embedding seed");
  st->add_option("--hidden", to.cfg.hidden, "encoder width");
  st->add_option("--lr", to.cfg.lr, "Adam learning rate");
  st->add_option("--epochs", to.cfg.epochs, "training epochs");
  st->add_option("--batch-size", to.cfg.batch_size, "minibatch size");
  st->add_option("--lambda-beta", to.cfg.lambda_beta, "topic anchoring weight");
  st->add_option("--lambda-theta", to.cfg.lambda_theta, "prior anchoring weight");
  st->add_option("--self-train-period", to.cfg.self_train_period,
                 "steps between target updates");
  st->add_option("--self-train-blend", to.cfg.self_train_blend,
                 "weight kept on old targets");
  st->add_flag("--normalize-recon", to.cfg.normalize_recon,
               "renormalize the reconstruction mixture");
  st->add_option("--seed", to.seed, "root seed");
  st->add_option("--out", to.out, "model checkpoint path")->required();
  st->callback([&] { cmd_train(to); });

  InferOpts in_;
  auto* si = app.add_subcommand("infer", "document-topic mixtures for a corpus");
  si->add_option("--model", in_.model_path, "model checkpoint")->required();
  si->add_option("--corpus", in_.corpus_dir, "corpus directory")->required();
  si->add_option("--out", in_.out, "theta CSV path")->required();
  si->callback([&] { cmd_infer(in_); });

  TopWordsOpts tw;
  auto* stw = app.add_subcommand("top-words", "highest probability words per topic");
  stw->add_option("--model", tw.model_path, "model checkpoint")->required();
  stw->add_option("-n", tw.n, "words per topic");
  stw->add_option("--out", tw.out, "write JSON here instead of stdout");
  stw->callback([&] { cmd_top_words(tw); });

  EvalTopicsOpts et;
  auto* set_ = app.add_subcommand("eval-topics", "coherence and diversity metrics");
  set_->add_option("--model", et.model_path, "model checkpoint")->required();
  set_->add_option("--corpus", et.corpus_dir, "corpus directory")->required();
  set_->add_option("--tc-words", et.tc_words, "top words for coherence");
  set_->add_option("--td-words", et.td_words, "top words for diversity");
  set_->add_option("--out", et.out, "write JSON here instead of stdout");
  set_->callback([&] { cmd_eval_topics(et); });

  EvalClassifyOpts ec;
  auto* sec = app.add_subcommand("eval-classify",
                                 "classification metrics from theta vs gold labels");
  sec->add_option("--theta", ec.theta_path, "theta CSV from infer")->required();
  sec->add_option("--gold", ec.gold_path, "labels.csv with gold labels")->required();
  sec->add_option("--out", ec.out, "write JSON here instead of stdout");
  sec->callback([&] { cmd_eval_classify(ec); });

  CompareOpts co;
  auto* sco = app.add_subcommand("compare", "divergence between two trained models");
  sco->add_option("--model-a", co.model_a, "first model checkpoint")->required();
  sco->add_option("--model-b", co.model_b, "second model checkpoint")->required();
  sco->add_option("--out", co.out, "write JSON here instead of stdout");
  sco->add_option("--csv", co.csv, "also write a ranked CSV");
  sco->callback([&] { cmd_compare(co); });

  ContextWordsOpts cw;
  auto* scw = app.add_subcommand("context-words",
                                 "reference-vocabulary words for one topic");
  scw->add_option("--model", cw.model_path, "model checkpoint")->required();
  scw->add_option("--topic", cw.topic, "topic name")->required();
  scw->add_option("-n", cw.n, "number of words");
  scw->add_option("--out", cw.out, "write JSON here instead of stdout");
  scw->callback([&] { cmd_context_words(cw); });

  DemoOpts dm;
  auto* sd = app.add_subcommand("demo", "end-to-end pipeline on a planted corpus");
  sd->add_option("--seed", dm.seed, "root seed");
  sd->add_option("--dir", dm.dir, "artifact directory");
  sd->add_option("--noise", dm.noise, "oracle score noise rate");
  sd->callback([&] { cmd_demo(dm); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "ctm: " << e.what() << "\n\n" << app.help();
    return 1;
  } catch (const ValidationError& e) {
    std::cerr << "ctm: validation error: " << e.what() << "\n";
    return 1;
  } catch (const NumericalError& e) {
    std::cerr << "ctm: numerical error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "ctm: io error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "ctm: error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
