#include <doctest.h>

#include <cmath>
#include <vector>

#include "dabea/rng.hpp"

using dabea::Rng;

TEST_CASE("same seed gives the same stream") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("substream depends only on the path") {
  Rng a = Rng::substream(7, {3, 5});
  Rng b = Rng::substream(7, {3, 5});
  Rng c = Rng::substream(7, {5, 3});
  CHECK(a.next_u64() == b.next_u64());
  CHECK(a.next_u64() != c.next_u64());
}

TEST_CASE("uniform01 lies in [0,1) and covers the range") {
  Rng rng(1);
  double lo = 1.0, hi = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double v = rng.uniform01();
    CHECK(v >= 0.0);
    CHECK(v < 1.0);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  CHECK(lo < 0.01);
  CHECK(hi > 0.99);
}

TEST_CASE("uniform_index is close to uniform") {
  Rng rng(3);
  std::vector<int> counts(10, 0);
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) ++counts[rng.uniform_index(10)];
  for (int c : counts) {
    const double freq = static_cast<double>(c) / draws;
    CHECK(freq == doctest::Approx(0.1).epsilon(0.1));
  }
  CHECK(rng.uniform_index(1) == 0);
}

TEST_CASE("gaussian has roughly the requested moments") {
  Rng rng(9);
  const int n = 50000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double v = rng.gaussian(2.0, 3.0);
    sum += v;
    sum2 += v * v;
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  CHECK(mean == doctest::Approx(2.0).epsilon(0.05));
  CHECK(std::sqrt(var) == doctest::Approx(3.0).epsilon(0.05));
}
