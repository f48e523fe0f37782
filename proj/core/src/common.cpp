#include "ctm/common.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <thread>

namespace ctm {

uint64_t fnv1a(std::string_view s) {
  uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

static uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

uint64_t split_seed(uint64_t root, std::string_view stage) {
  return splitmix64(root ^ fnv1a(stage));
}

Eigen::VectorXd softmax(const Eigen::VectorXd& z) {
  Eigen::VectorXd e = (z.array() - z.maxCoeff()).exp();
  return e / e.sum();
}

void softmax_columns(Eigen::MatrixXd& z) {
  for (Eigen::Index c = 0; c < z.cols(); ++c) {
    double m = z.col(c).maxCoeff();
    z.col(c) = (z.col(c).array() - m).exp();
    z.col(c) /= z.col(c).sum();
  }
}

double kl_divergence(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
  if (p.size() != q.size()) {
    throw ValidationError("kl_divergence: size mismatch " +
                          std::to_string(p.size()) + " vs " +
                          std::to_string(q.size()));
  }
  double kl = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) {
      kl += p[i] * (std::log(std::max(p[i], kProbFloor)) -
                    std::log(std::max(q[i], kProbFloor)));
    }
  }
  return kl;
}

int worker_threads() {
  const char* env = std::getenv("CTM_THREADS");
  if (env == nullptr || *env == '\0') return 1;
  char* end = nullptr;
  long v = std::strtol(env, &end, 10);
  if (end == env || v < 1) return 1;
  long hw = static_cast<long>(std::thread::hardware_concurrency());
  if (hw < 1) hw = 1;
  return static_cast<int>(std::min(v, hw));
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace ctm
