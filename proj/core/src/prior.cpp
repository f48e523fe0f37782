#include "ctm/prior.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "json.hpp"

namespace ctm {

void ScoreMatrix::validate() const {
  if (p.rows() != static_cast<Eigen::Index>(doc_ids.size()) ||
      p.cols() != static_cast<Eigen::Index>(names.size())) {
    throw ValidationError("score matrix shape mismatch");
  }
  for (Eigen::Index d = 0; d < p.rows(); ++d) {
    for (Eigen::Index j = 0; j < p.cols(); ++j) {
      double v = p(d, j);
      if (!(v >= 0.0 && v <= 1.0)) {
        throw ValidationError("score out of range [0,1] at doc '" + doc_ids[d] +
                              "', topic '" + names[j] + "': " + format_double(v));
      }
    }
  }
}

void PriorMatrix::validate() const {
  if (theta_t.rows() != static_cast<Eigen::Index>(doc_ids.size()) ||
      theta_t.cols() != static_cast<Eigen::Index>(names.size())) {
    throw ValidationError("prior matrix shape mismatch");
  }
  if (names.size() < 2) throw ValidationError("prior matrix needs k >= 2 topics");
  for (Eigen::Index d = 0; d < theta_t.rows(); ++d) {
    double sum = theta_t.row(d).sum();
    if (std::abs(sum - 1.0) > 1e-9) {
      throw ValidationError("prior row for doc '" + doc_ids[d] + "' sums to " +
                            format_double(sum) + ", expected 1 within 1e-9");
    }
    for (Eigen::Index j = 0; j < theta_t.cols(); ++j) {
      if (theta_t(d, j) < 0.0) {
        throw ValidationError("prior row for doc '" + doc_ids[d] + "' has a negative entry");
      }
    }
  }
}

namespace {

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

ScoreMatrix from_cells(
    const std::vector<std::pair<std::string, std::unordered_map<std::string, double>>>& rows,
    const Corpus& corpus, const std::vector<std::string>& names,
    const std::string& where) {
  ScoreMatrix scores;
  scores.doc_ids = corpus.doc_ids;
  scores.names = names;
  scores.p.setZero(corpus.n_docs(), static_cast<Eigen::Index>(names.size()));

  std::unordered_map<std::string, int> doc_pos;
  for (int d = 0; d < corpus.n_docs(); ++d) doc_pos.emplace(corpus.doc_ids[d], d);
  std::unordered_map<std::string, int> name_pos;
  for (size_t j = 0; j < names.size(); ++j) name_pos.emplace(names[j], static_cast<int>(j));

  std::vector<bool> filled(corpus.n_docs(), false);
  for (const auto& [doc_id, cells] : rows) {
    auto dit = doc_pos.find(doc_id);
    if (dit == doc_pos.end()) {
      throw ValidationError(where + ": doc id '" + doc_id + "' is not in the corpus");
    }
    if (filled[dit->second]) {
      throw ValidationError(where + ": duplicate scores for doc '" + doc_id + "'");
    }
    filled[dit->second] = true;
    if (cells.size() != names.size()) {
      throw ValidationError(where + ": doc '" + doc_id + "' has " +
                            std::to_string(cells.size()) + " scores, expected " +
                            std::to_string(names.size()));
    }
    for (const auto& [name, v] : cells) {
      auto nit = name_pos.find(name);
      if (nit == name_pos.end()) {
        throw ValidationError(where + ": unknown topic name '" + name + "' for doc '" +
                              doc_id + "'");
      }
      if (!(v >= 0.0 && v <= 1.0)) {
        throw ValidationError(where + ": score out of range [0,1] at doc '" + doc_id +
                              "', topic '" + name + "': " + format_double(v));
      }
      scores.p(dit->second, nit->second) = v;
    }
  }
  for (int d = 0; d < corpus.n_docs(); ++d) {
    if (!filled[d]) {
      throw ValidationError(where + ": missing scores for doc '" + corpus.doc_ids[d] + "'");
    }
  }
  return scores;
}

}  // namespace

ScoreMatrix import_scores(const std::string& path, const Corpus& corpus,
                          const std::vector<std::string>& names) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot read scores from '" + path + "'");

  // sniff: JSON object vs CSV
  char first = 0;
  f >> std::ws;
  f.get(first);
  f.unget();

  std::vector<std::pair<std::string, std::unordered_map<std::string, double>>> rows;
  if (first == '{') {
    nlohmann::json j;
    try {
      f >> j;
    } catch (const nlohmann::json::exception& e) {
      throw IoError("invalid JSON in '" + path + "': " + e.what());
    }
    for (const auto& [doc_id, cells] : j.items()) {
      if (!cells.is_object()) {
        throw ValidationError(path + ": entry for doc '" + doc_id + "' must be an object");
      }
      std::unordered_map<std::string, double> row;
      for (const auto& [name, v] : cells.items()) {
        if (!v.is_number()) {
          throw ValidationError(path + ": non-numeric score at doc '" + doc_id +
                                "', topic '" + name + "'");
        }
        row.emplace(name, v.get<double>());
      }
      rows.emplace_back(doc_id, std::move(row));
    }
  } else {
    std::string line;
    int lineno = 0;
    std::vector<std::string> header;
    while (std::getline(f, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      auto cols = split_csv(line);
      if (lineno == 1) {
        if (cols.size() < 2 || cols[0] != "doc_id") {
          throw ValidationError(path + ": expected header 'doc_id,<topic>,...'");
        }
        header.assign(cols.begin() + 1, cols.end());
        continue;
      }
      if (cols.size() != header.size() + 1) {
        throw ValidationError(path + " line " + std::to_string(lineno) +
                              ": expected " + std::to_string(header.size() + 1) +
                              " columns");
      }
      std::unordered_map<std::string, double> row;
      for (size_t i = 0; i < header.size(); ++i) {
        double v;
        try {
          size_t used = 0;
          v = std::stod(cols[i + 1], &used);
          if (used != cols[i + 1].size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
          throw ValidationError(path + " line " + std::to_string(lineno) +
                                ": malformed number '" + cols[i + 1] + "'");
        }
        if (!row.emplace(header[i], v).second) {
          throw ValidationError(path + ": duplicate column '" + header[i] + "'");
        }
      }
      rows.emplace_back(cols[0], std::move(row));
    }
  }
  ScoreMatrix scores = from_cells(rows, corpus, names, path);
  scores.validate();
  return scores;
}

ScoreMatrix proxy_scores(const Corpus& corpus, const VocabEmbedding& vocab_emb,
                         const Eigen::MatrixXd& name_emb,
                         const std::vector<std::string>& names,
                         std::vector<int>* zero_docs) {
  if (vocab_emb.matrix.cols() != corpus.n_words()) {
    throw ValidationError("proxy_scores: embedding matrix does not match vocabulary");
  }
  if (name_emb.cols() != static_cast<Eigen::Index>(names.size()) ||
      name_emb.rows() != vocab_emb.matrix.rows()) {
    throw ValidationError("proxy_scores: name embedding shape mismatch");
  }
  ScoreMatrix scores;
  scores.doc_ids = corpus.doc_ids;
  scores.names = names;
  scores.p.setZero(corpus.n_docs(), static_cast<Eigen::Index>(names.size()));

  Eigen::VectorXd name_norm(name_emb.cols());
  for (Eigen::Index j = 0; j < name_emb.cols(); ++j) name_norm[j] = name_emb.col(j).norm();

  for (int d = 0; d < corpus.n_docs(); ++d) {
    if (corpus.doc_empty(d)) {
      if (zero_docs) zero_docs->push_back(d);
      continue;
    }
    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(vocab_emb.matrix.rows());
    double total = 0.0;
    for (const auto& [w, c] : corpus.docs[d]) {
      centroid += static_cast<double>(c) * vocab_emb.matrix.col(w);
      total += c;
    }
    centroid /= total;
    double cn = centroid.norm();
    if (cn == 0.0) {
      if (zero_docs) zero_docs->push_back(d);
      continue;
    }
    for (Eigen::Index j = 0; j < name_emb.cols(); ++j) {
      double cos = 0.0;
      if (name_norm[j] > 0.0) cos = centroid.dot(name_emb.col(j)) / (cn * name_norm[j]);
      cos = std::clamp(cos, -1.0, 1.0);
      scores.p(d, j) = (cos + 1.0) / 2.0;
    }
  }
  scores.validate();
  return scores;
}

PriorMatrix soft_labels(const ScoreMatrix& scores) {
  scores.validate();
  const Eigen::Index D = scores.p.rows();
  const Eigen::Index k = scores.p.cols();

  Eigen::VectorXd f = scores.p.colwise().sum();
  for (Eigen::Index j = 0; j < k; ++j) {
    if (f[j] <= 0.0) {
      throw ValidationError("topic '" + scores.names[j] + "' received zero total score");
    }
  }

  PriorMatrix prior;
  prior.doc_ids = scores.doc_ids;
  prior.names = scores.names;
  prior.theta_t.resize(D, k);
  for (Eigen::Index d = 0; d < D; ++d) {
    Eigen::VectorXd q(k);
    for (Eigen::Index j = 0; j < k; ++j) q[j] = scores.p(d, j) * scores.p(d, j) / f[j];
    double denom = q.sum();
    if (denom <= 0.0) {
      prior.theta_t.row(d).setConstant(1.0 / static_cast<double>(k));
      prior.fallback_docs.push_back(static_cast<int>(d));
    } else {
      prior.theta_t.row(d) = q.transpose() / denom;
    }
  }
  prior.validate();
  return prior;
}

PriorMatrix hard_labels(const ScoreMatrix& scores, double tau) {
  scores.validate();
  if (!(tau >= 0.0 && tau <= 1.0)) {
    throw ValidationError("tau must be in [0,1], got " + format_double(tau));
  }
  const Eigen::Index D = scores.p.rows();
  const Eigen::Index k = scores.p.cols();

  PriorMatrix prior;
  prior.doc_ids = scores.doc_ids;
  prior.names = scores.names;
  prior.theta_t.setZero(D, k);
  for (Eigen::Index d = 0; d < D; ++d) {
    int winners = 0;
    for (Eigen::Index j = 0; j < k; ++j) {
      if (scores.p(d, j) > tau) ++winners;
    }
    if (winners == 0) {
      prior.theta_t.row(d).setConstant(1.0 / static_cast<double>(k));
      prior.fallback_docs.push_back(static_cast<int>(d));
    } else {
      for (Eigen::Index j = 0; j < k; ++j) {
        if (scores.p(d, j) > tau) {
          prior.theta_t(d, j) = 1.0 / static_cast<double>(winners);
        }
      }
    }
  }
  prior.validate();
  return prior;
}

void save_prior(const PriorMatrix& prior, const std::string& path,
                const std::string& meta_json) {
  prior.validate();
  nlohmann::ordered_json j;
  if (!meta_json.empty()) j["_meta"] = nlohmann::ordered_json::parse(meta_json);
  j["names"] = prior.names;
  auto rows = nlohmann::ordered_json::object();
  for (size_t d = 0; d < prior.doc_ids.size(); ++d) {
    auto row = nlohmann::ordered_json::array();
    for (Eigen::Index jj = 0; jj < prior.theta_t.cols(); ++jj) {
      row.push_back(prior.theta_t(static_cast<Eigen::Index>(d), jj));
    }
    rows[prior.doc_ids[d]] = std::move(row);
  }
  j["rows"] = std::move(rows);
  j["fallback_docs"] = prior.fallback_docs;
  std::ofstream f(path);
  if (!f) throw IoError("cannot write prior to '" + path + "'");
  f << j.dump(2) << '\n';
}

PriorMatrix load_prior(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot read prior from '" + path + "'");
  nlohmann::ordered_json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("invalid JSON in '" + path + "': " + e.what());
  }
  if (!j.contains("names") || !j.contains("rows")) {
    throw ValidationError("prior file '" + path + "' must contain names and rows");
  }
  PriorMatrix prior;
  try {
    prior.names = j["names"].get<std::vector<std::string>>();
    const auto& rows = j["rows"];
    prior.theta_t.resize(static_cast<Eigen::Index>(rows.size()),
                         static_cast<Eigen::Index>(prior.names.size()));
    Eigen::Index d = 0;
    for (const auto& [doc_id, row] : rows.items()) {
      prior.doc_ids.push_back(doc_id);
      if (!row.is_array() || row.size() != prior.names.size()) {
        throw ValidationError("prior file '" + path + "': bad row for doc '" + doc_id + "'");
      }
      for (size_t jj = 0; jj < row.size(); ++jj) {
        prior.theta_t(d, static_cast<Eigen::Index>(jj)) = row[jj].get<double>();
      }
      ++d;
    }
    if (j.contains("fallback_docs")) {
      prior.fallback_docs = j["fallback_docs"].get<std::vector<int>>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("prior file '" + path + "': " + e.what());
  }
  prior.validate();
  return prior;
}

}  // namespace ctm
