#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "pfvae/rng.hpp"

using namespace pfvae;

TEST_CASE("same seed gives identical streams") {
  Rng a(123), b(123);
  for (int i = 0; i < 1000; ++i) {
    CHECK(a.next_u64() == b.next_u64());
  }
  Rng c(123), d(124);
  bool all_equal = true;
  for (int i = 0; i < 100; ++i) {
    if (c.next_u64() != d.next_u64()) all_equal = false;
  }
  CHECK_FALSE(all_equal);
}

TEST_CASE("uniform stays in [0,1) with the right mean") {
  Rng rng(7);
  const int n = 200000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    sum += u;
  }
  double mean = sum / n;
  // SE of the mean of U(0,1) is sqrt(1/12/n); allow 4 SE.
  double se = std::sqrt(1.0 / 12.0 / n);
  CHECK(std::abs(mean - 0.5) < 4.0 * se);
}

TEST_CASE("uniform(lo,hi) respects the interval") {
  Rng rng(11);
  for (int i = 0; i < 10000; ++i) {
    double u = rng.uniform(-3.0, 2.0);
    CHECK(u >= -3.0);
    CHECK(u < 2.0);
  }
}

TEST_CASE("normal has roughly standard moments") {
  Rng rng(42);
  const int n = 200000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    double x = rng.normal();
    CHECK(std::isfinite(x));
    sum += x;
    sumsq += x * x;
  }
  double mean = sum / n;
  double var = sumsq / n - mean * mean;
  CHECK(std::abs(mean) < 4.0 / std::sqrt(double(n)));
  // Var of the sample variance of N(0,1) is ~2/n.
  CHECK(std::abs(var - 1.0) < 4.0 * std::sqrt(2.0 / n));
}

TEST_CASE("below produces the full range and rejects zero") {
  Rng rng(5);
  std::vector<bool> seen(10, false);
  for (int i = 0; i < 5000; ++i) {
    std::uint64_t v = rng.below(10);
    CHECK(v < 10);
    seen[v] = true;
  }
  CHECK(std::all_of(seen.begin(), seen.end(), [](bool b) { return b; }));
  CHECK_THROWS_AS(rng.below(0), std::invalid_argument);
}

TEST_CASE("permutation is a permutation") {
  Rng rng(99);
  auto p = rng.permutation(257);
  REQUIRE(p.size() == 257);
  std::vector<bool> seen(257, false);
  for (auto v : p) {
    REQUIRE(v < 257);
    CHECK_FALSE(seen[v]);
    seen[v] = true;
  }
  // Not the identity with overwhelming probability.
  auto q = rng.permutation(257);
  CHECK(p != q);
}

TEST_CASE("state round-trips through text") {
  Rng rng(31337);
  for (int i = 0; i < 17; ++i) rng.next_u64();
  std::string s = rng.state();
  std::vector<std::uint64_t> expect;
  for (int i = 0; i < 50; ++i) expect.push_back(rng.next_u64());

  Rng other(1);
  other.restore(s);
  for (int i = 0; i < 50; ++i) CHECK(other.next_u64() == expect[std::size_t(i)]);

  CHECK_THROWS_AS(other.restore("not a state"), std::runtime_error);
}

TEST_CASE("mix separates streams") {
  CHECK(Rng::mix(42, 1) != Rng::mix(42, 2));
  CHECK(Rng::mix(42, 1) != Rng::mix(43, 1));
  CHECK(Rng::mix(42, 1) == Rng::mix(42, 1));
  Rng a(Rng::mix(42, 1)), b(Rng::mix(42, 2));
  CHECK(a.next_u64() != b.next_u64());
}

TEST_CASE("fill helpers populate every element") {
  Rng rng(3);
  Tensor t(Shape{5, 5});
  rng.fill_uniform(t, 0.25, 0.75);
  for (std::size_t i = 0; i < t.size(); ++i) {
    CHECK(t[i] >= 0.25);
    CHECK(t[i] < 0.75);
  }
  Tensor n = rng.normal_tensor(Shape{64});
  CHECK(n.size() == 64);
  bool any_nonzero = false;
  for (std::size_t i = 0; i < n.size(); ++i) {
    if (n[i] != 0.0) any_nonzero = true;
  }
  CHECK(any_nonzero);
}
