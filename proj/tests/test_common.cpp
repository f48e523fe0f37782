#include <cmath>
#include <cstdlib>

#include "ctm/common.hpp"
#include "doctest.h"

using namespace ctm;

TEST_CASE("fnv1a matches reference digests") {
  // reference values computed from the FNV-1a 64-bit definition
  CHECK(fnv1a("") == 14695981039346656037ull);
  CHECK(fnv1a("a") == 12638187200555641996ull);
  CHECK(fnv1a("hello") == 11831194018420276491ull);
}

TEST_CASE("split_seed separates stages and is stable") {
  uint64_t a = split_seed(42, "shuffle");
  uint64_t b = split_seed(42, "noise");
  uint64_t c = split_seed(43, "shuffle");
  CHECK(a != b);
  CHECK(a != c);
  CHECK(split_seed(42, "shuffle") == a);
}

TEST_CASE("rng streams are reproducible") {
  Rng r1(7), r2(7), r3(8);
  for (int i = 0; i < 100; ++i) {
    double u = r1.uniform();
    CHECK(u == r2.uniform());
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
  CHECK(r1.normal() == r2.normal());
  CHECK(r1.uniform() != r3.uniform());
}

TEST_CASE("rng normal moments are sane") {
  Rng r(123);
  const int n = 200000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    double x = r.normal();
    sum += x;
    sq += x * x;
  }
  double mean = sum / n;
  double var = sq / n - mean * mean;
  CHECK(std::abs(mean) < 0.01);
  CHECK(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("rng shuffle is a permutation and seed-stable") {
  std::vector<int> v{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  Rng r1(5);
  r1.shuffle(v);
  std::vector<int> w{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  Rng r2(5);
  r2.shuffle(w);
  CHECK(v == w);
  std::vector<int> s = v;
  std::sort(s.begin(), s.end());
  CHECK(s == std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9});
}

TEST_CASE("softmax lands on the simplex and handles shifts") {
  Eigen::VectorXd z(3);
  z << 1.0, 2.0, 3.0;
  Eigen::VectorXd p = softmax(z);
  CHECK(p.sum() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(p[2] > p[1]);
  CHECK(p[1] > p[0]);
  Eigen::VectorXd q = softmax((z.array() + 100.0).matrix());
  CHECK((p - q).cwiseAbs().maxCoeff() < 1e-12);

  Eigen::VectorXd big(2);
  big << 1000.0, 0.0;
  Eigen::VectorXd pb = softmax(big);
  CHECK(std::isfinite(pb[0]));
  CHECK(pb[0] == doctest::Approx(1.0));
}

TEST_CASE("kl_divergence basics") {
  Eigen::VectorXd p(2), q(2);
  p << 1.0, 0.0;
  q << 0.5, 0.5;
  CHECK(kl_divergence(p, q) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(kl_divergence(q, q) == 0.0);
  // zero entries in p contribute nothing even when q is zero there
  Eigen::VectorXd q2(2);
  q2 << 1.0, 0.0;
  CHECK(kl_divergence(p, q2) == 0.0);
  CHECK_THROWS_AS(kl_divergence(p, Eigen::VectorXd::Ones(3)), ValidationError);
}

TEST_CASE("worker_threads respects the env cap") {
  unsetenv("CTM_THREADS");
  CHECK(worker_threads() == 1);
  setenv("CTM_THREADS", "1", 1);
  CHECK(worker_threads() == 1);
  setenv("CTM_THREADS", "garbage", 1);
  CHECK(worker_threads() == 1);
  setenv("CTM_THREADS", "0", 1);
  CHECK(worker_threads() == 1);
  unsetenv("CTM_THREADS");
}
