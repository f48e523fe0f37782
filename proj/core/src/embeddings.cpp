#include "ctm/embeddings.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "ctm/corpus.hpp"

namespace ctm {

EmbeddingTable load_embeddings(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot read embeddings file '" + path + "'");

  EmbeddingTable table;
  std::string line;
  int lineno = 0;
  bool first = true;
  while (std::getline(f, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ss(line);
    if (first) {
      first = false;
      // "count dim" header is optional; two integer tokens and nothing else
      long a, b;
      std::string rest;
      std::istringstream probe(line);
      if (probe >> a >> b && !(probe >> rest) && a > 0 && b > 0 &&
          line.find('.') == std::string::npos) {
        table.dim = static_cast<int>(b);
        continue;
      }
    }
    std::string word;
    if (!(ss >> word)) continue;
    std::vector<double> vals;
    double v;
    while (ss >> v) vals.push_back(v);
    if (!ss.eof()) {
      throw IoError("embeddings parse error at line " + std::to_string(lineno) +
                    " of '" + path + "'");
    }
    if (vals.empty()) {
      throw IoError("embeddings parse error at line " + std::to_string(lineno) +
                    " of '" + path + "': no values for word '" + word + "'");
    }
    for (double x : vals) {
      if (!std::isfinite(x)) {
        throw IoError("embeddings parse error at line " + std::to_string(lineno) +
                      " of '" + path + "': non-finite value");
      }
    }
    if (table.dim == 0) {
      table.dim = static_cast<int>(vals.size());
    } else if (static_cast<int>(vals.size()) != table.dim) {
      throw IoError("embeddings parse error at line " + std::to_string(lineno) +
                    " of '" + path + "': expected " + std::to_string(table.dim) +
                    " values, got " + std::to_string(vals.size()));
    }
    Eigen::VectorXd vec(table.dim);
    for (int i = 0; i < table.dim; ++i) vec[i] = vals[i];
    table.vectors[word] = std::move(vec);
  }
  if (table.vectors.empty()) {
    throw IoError("embeddings file '" + path + "' holds no vectors");
  }
  return table;
}

Eigen::VectorXd fallback_vector(const std::string& word, int dim, uint64_t seed) {
  Rng rng(split_seed(seed ^ fnv1a(word), "embed-fallback"));
  Eigen::VectorXd vec(dim);
  for (int i = 0; i < dim; ++i) vec[i] = rng.normal(0.0, 0.1);  // variance 0.01
  return vec;
}

VocabEmbedding project_vocab(const EmbeddingTable& table,
                             const std::vector<std::string>& vocab,
                             uint64_t seed) {
  if (table.dim <= 0) throw ValidationError("embedding table has no dimension");
  if (vocab.empty()) throw ValidationError("cannot project an empty vocabulary");
  VocabEmbedding out;
  out.matrix.resize(table.dim, static_cast<Eigen::Index>(vocab.size()));
  for (size_t v = 0; v < vocab.size(); ++v) {
    auto it = table.vectors.find(vocab[v]);
    if (it != table.vectors.end()) {
      out.matrix.col(static_cast<Eigen::Index>(v)) = it->second;
    } else {
      out.matrix.col(static_cast<Eigen::Index>(v)) =
          fallback_vector(vocab[v], table.dim, seed);
      out.missing.push_back(static_cast<int>(v));
    }
  }
  return out;
}

Eigen::VectorXd name_vector(const EmbeddingTable& table, const std::string& name,
                            uint64_t seed) {
  std::vector<std::string> toks = tokenize(name, true);
  if (toks.empty()) toks.push_back(name);
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(table.dim);
  for (const auto& t : toks) {
    auto it = table.vectors.find(t);
    if (it != table.vectors.end()) {
      acc += it->second;
    } else {
      acc += fallback_vector(t, table.dim, seed);
    }
  }
  return acc / static_cast<double>(toks.size());
}

}  // namespace ctm
