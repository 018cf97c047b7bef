#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "dabea/error.hpp"
#include "dabea/rng.hpp"
#include "dabea/tensor.hpp"

using namespace dabea;

TEST_CASE("softmax of uniform logits is uniform") {
  const std::vector<double> z(7, 0.0);
  const auto p = softmax(z);
  for (double v : p) CHECK(v == doctest::Approx(1.0 / 7.0).epsilon(1e-12));
}

TEST_CASE("softmax is shift invariant") {
  const std::vector<double> z = {0.3, -1.2, 4.0, 0.0, 2.5, -0.7, 1.1};
  std::vector<double> shifted = z;
  for (double& v : shifted) v += 123.456;
  const auto a = softmax(z);
  const auto b = softmax(shifted);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
}

TEST_CASE("softmax single hot logit matches scalar arithmetic") {
  // e/(e+6) and 1/(e+6), evaluated independently
  const std::vector<double> z = {1, 0, 0, 0, 0, 0, 0};
  const auto p = softmax(z);
  CHECK(p[0] == doctest::Approx(0.31179100216579042).epsilon(1e-14));
  for (std::size_t i = 1; i < 7; ++i)
    CHECK(p[i] == doctest::Approx(0.11470149963903495).epsilon(1e-14));
}

TEST_CASE("softmax stays normalized for extreme logits") {
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> z(7);
    for (double& v : z) v = rng.uniform(-1e4, 1e4);
    const auto p = softmax(z);
    double sum = 0.0;
    for (double v : p) {
      CHECK(std::isfinite(v));
      sum += v;
    }
    CHECK(std::abs(sum - 1.0) < 1e-9);
    CHECK(argmax(p) == argmax(z));  // monotone; ties have measure zero here
  }
}

TEST_CASE("softmax rejects non-finite input") {
  std::vector<double> z(7, 0.0);
  z[3] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(softmax(z), NumericError);
  z[3] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(softmax(z), NumericError);
}

TEST_CASE("cross entropy basics") {
  std::vector<double> p(7, 0.0);
  p[2] = 1.0;
  CHECK(cross_entropy(p, 2) == 0.0);

  const std::vector<double> uniform(7, 1.0 / 7.0);
  CHECK(cross_entropy(uniform, 4) == doctest::Approx(1.9459101490553132).epsilon(1e-14));

  std::vector<double> q(7, 0.125);
  q[1] = 0.25;
  CHECK(cross_entropy(q, 1) == doctest::Approx(1.3862943611198906).epsilon(1e-14));
}

TEST_CASE("cross entropy clamps zero probability and rejects bad labels") {
  std::vector<double> p(7, 0.0);
  p[0] = 1.0;
  CHECK(cross_entropy(p, 6) == doctest::Approx(-std::log(1e-12)).epsilon(1e-12));
  CHECK(cross_entropy(p, 6) >= 0.0);
  CHECK_THROWS_AS(cross_entropy(p, 7), ValidationError);
}

TEST_CASE("cross entropy is non-negative and zero only at certainty") {
  Rng rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> z(7);
    for (double& v : z) v = rng.uniform(-5, 5);
    const auto p = softmax(z);
    const auto label = rng.uniform_index(7);
    const double ce = cross_entropy(p, label);
    CHECK(ce >= 0.0);
    if (p[label] < 1.0) CHECK(ce > 0.0);
  }
}

TEST_CASE("argmax tie-breaks to the lowest index") {
  CHECK(argmax(std::vector<double>{0.9, 0.1, 0, 0, 0, 0, 0}) == 0);
  CHECK(argmax(std::vector<double>(7, 0.5)) == 0);
  CHECK(argmax(std::vector<double>{0.1, 0.1, 0.5, 0.1, 0.05, 0.05, 0.1}) == 2);
  CHECK(argmax(std::vector<double>{0.0, 0.4, 0.4, 0.1}) == 1);
  CHECK_THROWS_AS(argmax(std::vector<double>{}), ValidationError);
}

TEST_CASE("DenseArray checks shape against data") {
  DenseArray a({2, 3});
  CHECK(a.size() == 6);
  CHECK_THROWS_AS(DenseArray({2, 3}, std::vector<double>(5, 0.0)), ValidationError);
  CHECK_THROWS_AS(DenseArray({2, 0, 3}), ValidationError);

  DenseArray b({2, 2}, {1.0, 2.0, 3.0, std::numeric_limits<double>::quiet_NaN()});
  CHECK_THROWS_AS(b.check_finite("test"), NumericError);
}
