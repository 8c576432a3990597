#include <doctest.h>

#include <cmath>
#include <set>

#include "sisnet/rate_tree.hpp"
#include "sisnet/rng.hpp"

using namespace sisnet;

TEST_CASE("pair uniforms are symmetric and in [0,1)") {
  for (std::uint64_t i = 0; i < 50; ++i)
    for (std::uint64_t j = 0; j < 50; ++j) {
      const double v = pair_uniform(42, i, j);
      CHECK(v >= 0.0);
      CHECK(v < 1.0);
      CHECK(v == pair_uniform(42, j, i));
    }
  CHECK(pair_uniform(1, 2, 3) != pair_uniform(2, 2, 3));
}

TEST_CASE("derived seeds differ across label tuples") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t a = 0; a < 20; ++a)
    for (std::uint64_t b = 0; b < 20; ++b) seen.insert(derive_seed(7, a, b));
  CHECK(seen.size() == 400);
  CHECK(derive_seed(7, 1, 2) != derive_seed(7, 2, 1));
  CHECK(derive_seed(7, 1) != derive_seed(8, 1));
}

TEST_CASE("streams are reproducible") {
  Stream a(123), b(123), c(124);
  bool differs = false;
  for (int k = 0; k < 100; ++k) {
    const auto x = a(), y = b(), z = c();
    CHECK(x == y);
    differs |= x != z;
  }
  CHECK(differs);
}

TEST_CASE("stream variates have the right means") {
  Stream rng(9);
  const int m = 200000;
  double u = 0, e = 0, g = 0, b = 0;
  for (int k = 0; k < m; ++k) {
    u += rng.uniform();
    e += rng.exponential(2.0);
    g += static_cast<double>(rng.geometric(0.25));
    b += static_cast<double>(rng.below(10));
  }
  // 5 sigma bands
  CHECK(std::abs(u / m - 0.5) < 5 * std::sqrt(1.0 / 12 / m));
  CHECK(std::abs(e / m - 0.5) < 5 * 0.5 / std::sqrt(m));
  CHECK(std::abs(g / m - 3.0) < 5 * std::sqrt(12.0 / m));
  CHECK(std::abs(b / m - 4.5) < 5 * std::sqrt(8.25 / m));
  CHECK(rng.geometric(1.0) == 0);
}

TEST_CASE("rate tree selects proportionally to weight") {
  RateTree t(5);
  t.set(0, 1.0);
  t.set(2, 2.0);
  t.set(4, 1.0);
  CHECK(t.total() == 4.0);
  CHECK(t.select(0.0) == 0);
  CHECK(t.select(0.999) == 0);
  CHECK(t.select(1.0) == 2);
  CHECK(t.select(2.999) == 2);
  CHECK(t.select(3.0) == 4);
  t.set(2, 0.0);
  CHECK(t.total() == 2.0);
  CHECK(t.select(1.5) == 4);
}
