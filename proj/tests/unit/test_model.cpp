#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "sisnet/model.hpp"
#include "sisnet/rng.hpp"

using namespace sisnet;

TEST_CASE("effective_w of constant kernels") {
  const int n = 2000;
  const auto k = constant_kernels(1.0, 3.0 / n, 0.7);
  CHECK(effective_w(k, n, {0.1}, {0.9}) == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(effective_w(constant_kernels(0.0, 5.0, 0.7), n, {0.2}, {0.3}) == 0.0);
  CHECK_THROWS_AS(effective_w(k, n, {1.5}, {0.2}), std::domain_error);
}

TEST_CASE("paper scaling family at n0") {
  ScalingFamily f;  // alpha 0.3, n0 2000, base 1.2, target 3
  CHECK(f.wI_at(2000) == 1.2);
  CHECK(f.wE_at(2000) == doctest::Approx(0.00125).epsilon(1e-14));
  const auto k = f.kernel_at(2000, 0.7);
  CHECK(effective_w(k, 2000, {0.5}, {0.5}) == 3.0);
}

TEST_CASE("scaling identity holds exactly for every n") {
  for (double alpha : {0.0, 0.3, 0.5})
    for (int n : {1000, 2000, 7919, 100000}) {
      ScalingFamily f;
      f.alpha = alpha;
      const auto k = f.kernel_at(n, 0.7);
      CHECK(effective_w(k, n, {0.25}, {0.75}) == 3.0);
      CHECK(static_cast<double>(n) * *k.wE_const * *k.wI_const == doctest::Approx(3.0).epsilon(1e-14));
    }
}

TEST_CASE("scaling family rejects w_E above 1") {
  ScalingFamily f;
  f.alpha = 0.0;  // w_E^(2) = 3 / 2.4
  CHECK_THROWS_AS(f.kernel_at(2, 0.7), ModelError);
  CHECK_NOTHROW(f.kernel_at(3, 0.7));
}

TEST_CASE("compute_In examples") {
  const std::vector<Feature> three = {{0.1}, {0.5}, {0.9}};
  CHECK(compute_In(three, [](const Feature&, const Feature&) { return 0.5; }) == 0.5);
  const std::vector<Feature> two = {{0.0}, {1.0}};
  CHECK(compute_In(two, [](const Feature&, const Feature&) { return 7.0; }) == 1.0);
  // a = 0, b = 1: w_I(a,a)=0, w_I(a,b)=0.4, w_I(b,a)=0.8, w_I(b,b)=0
  auto hand = [](const Feature& x, const Feature& y) {
    if (x[0] == y[0]) return 0.0;
    return x[0] == 0.0 ? 0.4 : 0.8;
  };
  CHECK(compute_In(two, hand) == doctest::Approx(0.3).epsilon(1e-15));
}

TEST_CASE("the cap is applied inside the sum") {
  Stream rng(5);
  std::vector<Feature> xs;
  for (int i = 0; i < 40; ++i) xs.push_back({rng.uniform()});
  auto wI = [](const Feature& x, const Feature& y) { return 2.0 * std::abs(x[0] - y[0]); };
  auto shifted = [&](const Feature& x, const Feature& y) { return wI(x, y) + 1000.0; };
  CHECK(compute_In(xs, shifted) == 1.0);
  auto capped = [&](const Feature& x, const Feature& y) { return std::min(wI(x, y), 1.0); };
  CHECK(compute_In(xs, wI) == compute_In(xs, capped));
}

TEST_CASE("check_assumptions on homogeneous families") {
  const auto shape = constant_kernels(1.0, 1.0, 0.7);
  const std::vector<Feature> xs = {{0.1}, {0.4}, {0.8}};

  SUBCASE("alpha = 0.3: I_n follows min(1.2 (n/2000)^-0.3, 1)") {
    ScalingFamily f;
    const auto rep = check_assumptions(shape, f, {2000, 20000, 200000}, xs);
    REQUIRE(rep.rows.size() == 3);
    CHECK(rep.rows[0].In == 1.0);  // 1.2 is capped
    CHECK(rep.rows[1].In == doctest::Approx(1.2 * std::pow(10.0, -0.3)).epsilon(1e-12));
    // below the cap a tenfold n lowers I_n by 10^-0.3 ~ 0.501
    CHECK(rep.rows[2].In / rep.rows[1].In == doctest::Approx(std::pow(10.0, -0.3)).epsilon(1e-12));
    CHECK(rep.In_vanishing);
    for (const auto& r : rep.rows) {
      CHECK(r.sup_w_deviation <= 1e-12);
      CHECK(r.sup_gamma_deviation == 0.0);
    }
  }
  SUBCASE("alpha = 0: I_n stays at 1") {
    ScalingFamily f;
    f.alpha = 0.0;
    const auto rep = check_assumptions(shape, f, {2000, 20000}, xs);
    CHECK(rep.rows[0].In == 1.0);
    CHECK(rep.rows[1].In == 1.0);
    CHECK_FALSE(rep.In_vanishing);
  }
  CHECK_THROWS(check_assumptions(shape, ScalingFamily{}, {}, xs));
}

TEST_CASE("w_E is symmetric on random pairs") {
  Stream rng(11);
  const auto geo = geometric_kernel(Hypercube{2}, 0.3, 1.0, 0.7);
  const auto sbm = sbm_kernels({{0.9, 0.1}, {0.1, 0.5}}, {{1, 2}, {3, 4}}, {0.5, 0.7});
  for (int k = 0; k < 10000; ++k) {
    const Feature x = {rng.uniform(), rng.uniform()}, y = {rng.uniform(), rng.uniform()};
    CHECK(geo.wE(x, y) == geo.wE(y, x));
    const Feature p = {static_cast<double>(rng.below(2))}, q = {static_cast<double>(rng.below(2))};
    CHECK(sbm.wE(p, q) == sbm.wE(q, p));
  }
}

TEST_CASE("declared bounds are verified") {
  const auto good = explicit_kernels(
      Interval01{}, [](const Feature&, const Feature&) { return 0.5; },
      [](const Feature& x, const Feature&) { return 2.0 * x[0]; }, [](const Feature&) { return 0.7; }, 2.0, 0.7);
  CHECK_NOTHROW(verify_bounds(good));
  const auto low = explicit_kernels(
      Interval01{}, [](const Feature&, const Feature&) { return 0.5; },
      [](const Feature& x, const Feature&) { return 2.0 * x[0]; }, [](const Feature&) { return 0.7; }, 1.0, 0.7);
  CHECK_THROWS_AS(verify_bounds(low), ModelError);
  const auto asym = explicit_kernels(
      Interval01{}, [](const Feature& x, const Feature&) { return x[0]; },
      [](const Feature&, const Feature&) { return 1.0; }, [](const Feature&) { return 0.7; }, 1.0, 0.7);
  CHECK_THROWS_AS(verify_bounds(asym), ModelError);
}

TEST_CASE("feature space and measure invariants") {
  CHECK_THROWS(validate(FeatureSpace{Hypercube{0}}));
  CHECK_THROWS(validate(FeatureSpace{Discrete{0}}));
  CHECK_THROWS(validate(FeatureSpace{Explicit{}}));
  CHECK_NOTHROW(validate(FeatureSpace{Hypercube{3}}));
  CHECK_THROWS(validate(MeasureSpec{DiscreteWeights{{0.5, 0.6}}}));
  CHECK_THROWS(validate(MeasureSpec{DiscreteWeights{{1.5, -0.5}}}));
  CHECK_NOTHROW(validate(MeasureSpec{DiscreteWeights{{0.25, 0.75}}}));
  CHECK(contains(Interval01{}, {1.0}));
  CHECK_FALSE(contains(Interval01{}, {1.01}));
  CHECK(contains(Discrete{3}, {2.0}));
  CHECK_FALSE(contains(Discrete{3}, {3.0}));
}

TEST_CASE("factorized kernels give n w_E w_I = beta w_E theta") {
  const int n = 500;
  const auto k = factorized_kernels(
      Interval01{}, [](const Feature& x) { return 1.0 + x[0]; },
      [](const Feature&, const Feature&) { return 0.5; }, [](const Feature& y) { return 2.0 - y[0]; }, 2.0, 2.0, 0.7, n);
  const Feature x = {0.3}, y = {0.6};
  CHECK(static_cast<double>(n) * k.wE(x, y) * k.wI(x, y) == doctest::Approx(1.3 * 0.5 * 1.4).epsilon(1e-14));
}
