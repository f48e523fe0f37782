#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ctm {

// Bad inputs or configs. CLI maps this to exit code 1.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Training diverged or arithmetic broke down. CLI maps this to exit code 2.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Missing or malformed files. CLI maps this to exit code 3.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr double kProbFloor = 1e-12;

uint64_t fnv1a(std::string_view s);

// Stable per-stage seed derivation so every pipeline stage gets an
// independent stream from one root seed.
uint64_t split_seed(uint64_t root, std::string_view stage);

// Deterministic RNG. mt19937_64 output is fixed by the standard; the
// uniform/normal transforms here are hand-rolled because the std::
// distributions are implementation-defined and would break byte-identical
// artifacts across toolchains.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  // [0, 1), 53-bit resolution
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // standard normal via Box-Muller, one cached draw
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // integer in [0, n)
  size_t index(size_t n) {
    size_t i = static_cast<size_t>(uniform() * static_cast<double>(n));
    return i < n ? i : n - 1;
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[index(i)]);
    }
  }

  uint64_t raw() { return gen_(); }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// softmax of a vector, numerically stable
Eigen::VectorXd softmax(const Eigen::VectorXd& z);

// column-wise softmax in place
void softmax_columns(Eigen::MatrixXd& z);

// KL(p || q) with q floored at kProbFloor; 0*log(0) terms contribute zero
double kl_divergence(const Eigen::VectorXd& p, const Eigen::VectorXd& q);

// number of worker threads honoring the CTM_THREADS env cap (default 1)
int worker_threads();

std::string format_double(double v);

}  // namespace ctm
