#include "ctm/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <sstream>
#include <unordered_map>

#include "json.hpp"

namespace fs = std::filesystem;

namespace ctm {

void PreprocessRules::validate() const {
  if (!(max_doc_frequency > 0.0 && max_doc_frequency <= 1.0)) {
    throw ValidationError("max_doc_frequency must be in (0, 1], got " +
                          format_double(max_doc_frequency));
  }
  if (min_word_count < 0) {
    throw ValidationError("min_word_count must be >= 0, got " +
                          std::to_string(min_word_count));
  }
}

std::vector<std::string> tokenize(const std::string& text, bool lowercase) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (cur.size() >= 2) {
      bool all_digits = std::all_of(cur.begin(), cur.end(), [](unsigned char c) {
        return std::isdigit(c) != 0;
      });
      if (!all_digits) out.push_back(cur);
    }
    cur.clear();
  };
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      cur.push_back(lowercase ? static_cast<char>(std::tolower(c)) : static_cast<char>(c));
    } else {
      flush();
    }
  }
  flush();
  return out;
}

long Corpus::doc_tokens(int d) const {
  long n = 0;
  for (const auto& [w, c] : docs[d]) n += c;
  return n;
}

long Corpus::total_tokens() const {
  long n = 0;
  for (int d = 0; d < n_docs(); ++d) n += doc_tokens(d);
  return n;
}

int Corpus::doc_index(const std::string& doc_id) const {
  for (int d = 0; d < n_docs(); ++d) {
    if (doc_ids[d] == doc_id) return d;
  }
  return -1;
}

int Corpus::word_index(const std::string& word) const {
  for (int v = 0; v < n_words(); ++v) {
    if (vocab[v] == word) return v;
  }
  return -1;
}

std::vector<int> Corpus::nonempty_docs() const {
  std::vector<int> out;
  for (int d = 0; d < n_docs(); ++d) {
    if (!doc_empty(d)) out.push_back(d);
  }
  return out;
}

Eigen::VectorXd Corpus::count_row(int d) const {
  Eigen::VectorXd row = Eigen::VectorXd::Zero(n_words());
  for (const auto& [w, c] : docs[d]) row[w] = static_cast<double>(c);
  return row;
}

std::vector<std::vector<int>> Corpus::word_doc_sets() const {
  std::vector<std::vector<int>> sets(n_words());
  for (int d = 0; d < n_docs(); ++d) {
    for (const auto& [w, c] : docs[d]) sets[w].push_back(d);
  }
  return sets;
}

uint64_t Corpus::vocab_hash() const {
  uint64_t h = 14695981039346656037ull;
  for (const auto& w : vocab) {
    h ^= fnv1a(w);
    h *= 1099511628211ull;
  }
  return h;
}

void Corpus::validate() const {
  if (docs.size() != doc_ids.size() || docs.size() != labels.size()) {
    throw ValidationError("corpus arrays out of sync");
  }
  for (int d = 0; d < n_docs(); ++d) {
    int prev = -1;
    for (const auto& [w, c] : docs[d]) {
      if (w < 0 || w >= n_words()) {
        throw ValidationError("doc " + doc_ids[d] + ": word id " +
                              std::to_string(w) + " out of range");
      }
      if (c <= 0) {
        throw ValidationError("doc " + doc_ids[d] + ": nonpositive count");
      }
      if (w <= prev) {
        throw ValidationError("doc " + doc_ids[d] + ": word ids not strictly increasing");
      }
      prev = w;
    }
    for (int l : labels[d]) {
      if (l < 0 || l >= static_cast<int>(label_names.size())) {
        throw ValidationError("doc " + doc_ids[d] + ": label id out of range");
      }
    }
  }
}

static void check_id_charset(const std::string& id) {
  if (id.empty()) throw ValidationError("empty doc id");
  if (id.find_first_of(",|\n\r") != std::string::npos) {
    throw ValidationError("doc id '" + id + "' contains a reserved character (, | or newline)");
  }
}

Corpus preprocess(const std::vector<RawDoc>& raw, const PreprocessRules& rules) {
  rules.validate();
  if (raw.empty()) throw ValidationError("no documents to preprocess");

  std::unordered_map<std::string, int> seen_ids;
  for (size_t i = 0; i < raw.size(); ++i) {
    check_id_charset(raw[i].id);
    auto [it, fresh] = seen_ids.emplace(raw[i].id, static_cast<int>(i));
    if (!fresh) {
      throw ValidationError("duplicate doc id '" + raw[i].id + "'");
    }
  }

  // tokenize (doc-parallel when CTM_THREADS allows; docs are independent so
  // the merged result is order-stable)
  std::vector<std::vector<std::string>> toks(raw.size());
  int nthreads = worker_threads();
  if (nthreads > 1 && raw.size() > 64) {
    std::vector<std::future<void>> futs;
    size_t chunk = (raw.size() + nthreads - 1) / nthreads;
    for (int t = 0; t < nthreads; ++t) {
      size_t lo = t * chunk;
      size_t hi = std::min(raw.size(), lo + chunk);
      if (lo >= hi) break;
      futs.push_back(std::async(std::launch::async, [&, lo, hi] {
        for (size_t i = lo; i < hi; ++i) toks[i] = tokenize(raw[i].text, rules.lowercase);
      }));
    }
    for (auto& f : futs) f.get();
  } else {
    for (size_t i = 0; i < raw.size(); ++i) toks[i] = tokenize(raw[i].text, rules.lowercase);
  }

  // corpus counts and document frequencies over the tokenized stream
  std::unordered_map<std::string, long> count;
  std::unordered_map<std::string, int> df;
  for (const auto& t : toks) {
    std::unordered_set<std::string> in_doc;
    for (const auto& w : t) {
      ++count[w];
      in_doc.insert(w);
    }
    for (const auto& w : in_doc) ++df[w];
  }

  double n_docs = static_cast<double>(raw.size());
  long dropped_stop = 0, dropped_df = 0, dropped_count = 0;
  std::vector<std::pair<std::string, long>> kept;
  for (const auto& [w, c] : count) {
    if (rules.stopwords.count(w) > 0) {
      ++dropped_stop;
      continue;
    }
    if (static_cast<double>(df[w]) / n_docs > rules.max_doc_frequency) {
      ++dropped_df;
      continue;
    }
    if (c < rules.min_word_count) {
      ++dropped_count;
      continue;
    }
    kept.emplace_back(w, c);
  }

  if (kept.empty()) {
    std::string rule = "min_word_count";
    long top = dropped_count;
    if (dropped_df > top) {
      rule = "max_doc_frequency";
      top = dropped_df;
    }
    if (dropped_stop > top) rule = "stopword_list";
    throw ValidationError(
        "empty vocabulary after pruning (triggering rule: " + rule +
        "; removed " + std::to_string(dropped_stop) + " stopwords, " +
        std::to_string(dropped_df) + " by max_doc_frequency, " +
        std::to_string(dropped_count) + " by min_word_count)");
  }

  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  Corpus corpus;
  corpus.vocab.reserve(kept.size());
  std::unordered_map<std::string, int> word_id;
  for (const auto& [w, c] : kept) {
    word_id.emplace(w, static_cast<int>(corpus.vocab.size()));
    corpus.vocab.push_back(w);
  }

  std::map<std::string, int> label_id;  // ordered: names come out sorted
  for (const auto& doc : raw) {
    for (const auto& l : doc.labels) {
      if (l.empty()) throw ValidationError("doc '" + doc.id + "': empty label string");
      label_id.emplace(l, 0);
    }
  }
  int next = 0;
  for (auto& [name, id] : label_id) {
    id = next++;
    corpus.label_names.push_back(name);
  }

  corpus.docs.resize(raw.size());
  corpus.doc_ids.reserve(raw.size());
  corpus.labels.resize(raw.size());
  for (size_t i = 0; i < raw.size(); ++i) {
    corpus.doc_ids.push_back(raw[i].id);
    std::map<int, int> doc_counts;
    for (const auto& w : toks[i]) {
      auto it = word_id.find(w);
      if (it != word_id.end()) ++doc_counts[it->second];
    }
    corpus.docs[i].assign(doc_counts.begin(), doc_counts.end());
    std::vector<int> lids;
    for (const auto& l : raw[i].labels) lids.push_back(label_id[l]);
    std::sort(lids.begin(), lids.end());
    lids.erase(std::unique(lids.begin(), lids.end()), lids.end());
    corpus.labels[i] = std::move(lids);
  }
  return corpus;
}

Eigen::VectorXd normalized_bow(const Corpus& corpus, int d) {
  if (d < 0 || d >= corpus.n_docs()) {
    throw ValidationError("doc index " + std::to_string(d) + " out of range");
  }
  if (corpus.doc_empty(d)) {
    throw ValidationError("empty document '" + corpus.doc_ids[d] +
                          "' has no normalized bag of words");
  }
  Eigen::VectorXd row = corpus.count_row(d);
  return row / row.sum();
}

void save_corpus(const Corpus& corpus, const std::string& dir,
                 const std::string& meta_json) {
  corpus.validate();
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir + "': " + ec.message());

  {
    std::ofstream f(fs::path(dir) / "vocab.txt");
    if (!f) throw IoError("cannot write " + dir + "/vocab.txt");
    for (const auto& w : corpus.vocab) f << w << '\n';
  }
  {
    std::ofstream f(fs::path(dir) / "counts.csv");
    if (!f) throw IoError("cannot write " + dir + "/counts.csv");
    f << "doc_id,word_id,count\n";
    for (int d = 0; d < corpus.n_docs(); ++d) {
      for (const auto& [w, c] : corpus.docs[d]) {
        f << corpus.doc_ids[d] << ',' << w << ',' << c << '\n';
      }
    }
  }
  {
    std::ofstream f(fs::path(dir) / "labels.csv");
    if (!f) throw IoError("cannot write " + dir + "/labels.csv");
    f << "doc_id,label\n";
    for (int d = 0; d < corpus.n_docs(); ++d) {
      f << corpus.doc_ids[d] << ',';
      for (size_t i = 0; i < corpus.labels[d].size(); ++i) {
        if (i > 0) f << '|';
        f << corpus.label_names[corpus.labels[d][i]];
      }
      f << '\n';
    }
  }
  if (!meta_json.empty()) {
    std::ofstream f(fs::path(dir) / "meta.json");
    if (!f) throw IoError("cannot write " + dir + "/meta.json");
    f << meta_json << '\n';
  }
}

static std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

static std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

Corpus load_corpus(const std::string& dir) {
  Corpus corpus;
  {
    std::ifstream f(fs::path(dir) / "vocab.txt");
    if (!f) throw IoError("cannot read " + dir + "/vocab.txt");
    std::string line;
    while (std::getline(f, line)) {
      line = strip_cr(line);
      if (!line.empty()) corpus.vocab.push_back(line);
    }
  }

  std::unordered_map<std::string, int> doc_pos;
  std::map<std::string, int> label_id;
  std::vector<std::vector<std::string>> doc_label_names;
  {
    std::ifstream f(fs::path(dir) / "labels.csv");
    if (!f) throw IoError("cannot read " + dir + "/labels.csv");
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
      ++lineno;
      line = strip_cr(line);
      if (lineno == 1) {
        if (line != "doc_id,label") {
          throw ValidationError(dir + "/labels.csv: expected header 'doc_id,label'");
        }
        continue;
      }
      if (line.empty()) continue;
      auto cols = split(line, ',');
      if (cols.size() != 2) {
        throw ValidationError(dir + "/labels.csv line " + std::to_string(lineno) +
                              ": expected 2 columns");
      }
      check_id_charset(cols[0]);
      if (doc_pos.count(cols[0]) > 0) {
        throw ValidationError(dir + "/labels.csv line " + std::to_string(lineno) +
                              ": duplicate doc id '" + cols[0] + "'");
      }
      doc_pos.emplace(cols[0], static_cast<int>(corpus.doc_ids.size()));
      corpus.doc_ids.push_back(cols[0]);
      std::vector<std::string> names;
      if (!cols[1].empty()) {
        for (const auto& name : split(cols[1], '|')) {
          if (name.empty()) {
            throw ValidationError(dir + "/labels.csv line " + std::to_string(lineno) +
                                  ": empty label name");
          }
          label_id.emplace(name, 0);
          names.push_back(name);
        }
      }
      doc_label_names.push_back(std::move(names));
    }
  }
  int next = 0;
  for (auto& [name, id] : label_id) {
    id = next++;
    corpus.label_names.push_back(name);
  }
  corpus.docs.resize(corpus.doc_ids.size());
  corpus.labels.resize(corpus.doc_ids.size());
  for (size_t d = 0; d < doc_label_names.size(); ++d) {
    std::vector<int> lids;
    for (const auto& name : doc_label_names[d]) lids.push_back(label_id[name]);
    std::sort(lids.begin(), lids.end());
    lids.erase(std::unique(lids.begin(), lids.end()), lids.end());
    corpus.labels[d] = std::move(lids);
  }

  {
    std::ifstream f(fs::path(dir) / "counts.csv");
    if (!f) throw IoError("cannot read " + dir + "/counts.csv");
    std::string line;
    int lineno = 0;
    std::vector<std::map<int, long>> acc(corpus.doc_ids.size());
    while (std::getline(f, line)) {
      ++lineno;
      line = strip_cr(line);
      if (lineno == 1) {
        if (line != "doc_id,word_id,count") {
          throw ValidationError(dir + "/counts.csv: expected header 'doc_id,word_id,count'");
        }
        continue;
      }
      if (line.empty()) continue;
      auto cols = split(line, ',');
      if (cols.size() != 3) {
        throw ValidationError(dir + "/counts.csv line " + std::to_string(lineno) +
                              ": expected 3 columns");
      }
      auto it = doc_pos.find(cols[0]);
      if (it == doc_pos.end()) {
        throw ValidationError(dir + "/counts.csv line " + std::to_string(lineno) +
                              ": doc id '" + cols[0] + "' not present in labels.csv");
      }
      int w;
      long c;
      try {
        w = std::stoi(cols[1]);
        c = std::stol(cols[2]);
      } catch (const std::exception&) {
        throw ValidationError(dir + "/counts.csv line " + std::to_string(lineno) +
                              ": malformed integer");
      }
      if (w < 0 || w >= corpus.n_words()) {
        throw ValidationError(dir + "/counts.csv line " + std::to_string(lineno) +
                              ": word id " + std::to_string(w) + " out of range");
      }
      if (c <= 0) {
        throw ValidationError(dir + "/counts.csv line " + std::to_string(lineno) +
                              ": count must be positive");
      }
      acc[it->second][w] += c;
    }
    for (size_t d = 0; d < acc.size(); ++d) {
      corpus.docs[d].reserve(acc[d].size());
      for (const auto& [w, c] : acc[d]) {
        corpus.docs[d].emplace_back(w, static_cast<int>(c));
      }
    }
  }
  corpus.validate();
  return corpus;
}

std::vector<RawDoc> read_jsonl(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot read '" + path + "'");
  std::vector<RawDoc> out;
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    line = strip_cr(line);
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(path + " line " + std::to_string(lineno) +
                            ": invalid JSON (" + e.what() + ")");
    }
    if (!j.is_object()) {
      throw ValidationError(path + " line " + std::to_string(lineno) +
                            ": expected a JSON object");
    }
    RawDoc doc;
    if (!j.contains("id")) {
      throw ValidationError(path + " line " + std::to_string(lineno) +
                            ": missing 'id'");
    }
    if (j["id"].is_string()) {
      doc.id = j["id"].get<std::string>();
    } else if (j["id"].is_number_integer()) {
      doc.id = std::to_string(j["id"].get<long long>());
    } else {
      throw ValidationError(path + " line " + std::to_string(lineno) +
                            ": 'id' must be a string or integer");
    }
    if (!j.contains("text") || !j["text"].is_string()) {
      throw ValidationError(path + " line " + std::to_string(lineno) +
                            ": missing or non-string 'text'");
    }
    doc.text = j["text"].get<std::string>();
    if (j.contains("label") && !j["label"].is_null()) {
      const auto& l = j["label"];
      if (l.is_string()) {
        for (const auto& name : split(l.get<std::string>(), '|')) {
          if (!name.empty()) doc.labels.push_back(name);
        }
      } else if (l.is_array()) {
        for (const auto& e : l) {
          if (!e.is_string()) {
            throw ValidationError(path + " line " + std::to_string(lineno) +
                                  ": 'label' array must hold strings");
          }
          doc.labels.push_back(e.get<std::string>());
        }
      } else {
        throw ValidationError(path + " line " + std::to_string(lineno) +
                              ": 'label' must be a string or array");
      }
    }
    out.push_back(std::move(doc));
  }
  return out;
}

std::unordered_set<std::string> load_stopwords(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot read stopword list '" + path + "'");
  std::unordered_set<std::string> out;
  std::string line;
  while (std::getline(f, line)) {
    line = strip_cr(line);
    if (!line.empty() && line[0] != '#') out.insert(line);
  }
  return out;
}

const std::unordered_set<std::string>& default_stopwords() {
  static const std::unordered_set<std::string> words = {
      "a", "about", "above", "after", "again", "against", "all", "am", "an",
      "and", "any", "are", "aren", "as", "at", "be", "because", "been",
      "before", "being", "below", "between", "both", "but", "by", "can",
      "cannot", "could", "couldn", "did", "didn", "do", "does", "doesn",
      "doing", "don", "down", "during", "each", "few", "for", "from",
      "further", "had", "hadn", "has", "hasn", "have", "haven", "having",
      "he", "her", "here", "hers", "herself", "him", "himself", "his", "how",
      "if", "in", "into", "is", "isn", "it", "its", "itself", "just", "ll",
      "me", "more", "most", "mustn", "my", "myself", "no", "nor", "not",
      "now", "of", "off", "on", "once", "only", "or", "other", "ought",
      "our", "ours", "ourselves", "out", "over", "own", "re", "same", "shan",
      "she", "should", "shouldn", "so", "some", "such", "than", "that",
      "the", "their", "theirs", "them", "themselves", "then", "there",
      "these", "they", "this", "those", "through", "to", "too", "under",
      "until", "up", "ve", "very", "was", "wasn", "we", "were", "weren",
      "what", "when", "where", "which", "while", "who", "whom", "why",
      "will", "with", "won", "would", "wouldn", "you", "your", "yours",
      "yourself", "yourselves",
  };
  return words;
}

}  // namespace ctm
