#include <doctest.h>

#include <cmath>

#include "sisnet/graph.hpp"
#include "sisnet/stats.hpp"

using namespace sisnet;

TEST_CASE("step-function averages") {
  const auto c = step_mean_std({0.0}, {0.4}, 20, 80);
  CHECK(c.mean == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(c.std == 0.0);
  const auto half = step_mean_std({0.0, 1.0}, {0.0, 1.0}, 0, 2);
  CHECK(half.mean == 0.5);
  CHECK(half.std == 0.5);
  CHECK(Window{}.length() == 60.0);
  CHECK_THROWS(step_mean_std({0.0}, {1.0}, 2, 2));
  CHECK_THROWS(step_mean_std({1.0}, {1.0}, 0, 2));
}

TEST_CASE("time reversal leaves sigma unchanged") {
  // values on [0,1), [1,3), [3,3.5), [3.5,6) and the reversed sequence on [0,6)
  const std::vector<double> t = {0, 1, 3, 3.5}, v = {0.2, 0.9, 0.1, 0.5};
  const std::vector<double> tr = {0, 2.5, 3, 5}, vr = {0.5, 0.1, 0.9, 0.2};
  const auto a = step_mean_std(t, v, 0, 6), b = step_mean_std(tr, vr, 0, 6);
  CHECK(a.mean == doctest::Approx(b.mean).epsilon(1e-14));
  CHECK(a.std == doctest::Approx(b.std).epsilon(1e-14));
}

TEST_CASE("temporal summary does not depend on the recording grid") {
  Stream grng(1);
  Stream frng(2);
  const auto pop = sample_features(Interval01{}, UniformOnSpace{}, 500, frng);
  const auto k = constant_kernels(0.02, 0.4, 0.7);
  const auto g = sample_graph(pop, k, grng);
  TemporalSummary first;
  bool have = false;
  for (double step : {1.0, 0.1, 0.013}) {
    Stream rng(3);
    SimConfig cfg;
    cfg.t_max = 80;
    cfg.record_grid = SimConfig::uniform_grid(80, step);
    cfg.mask = g.components().giant_mask;
    const auto s = temporal_summary(run(g, k, init_state(g, k, 1.0, rng), cfg, rng));
    CHECK(s.exact);
    if (!have) {
      first = s;
      have = true;
      continue;
    }
    CHECK(s.u_hat == first.u_hat);
    CHECK(s.sigma_hat == first.sigma_hat);
    CHECK(*s.v_hat == *first.v_hat);
  }
}

TEST_CASE("trapezoid fallback on a grid") {
  const auto r = trapezoid_mean_std({0, 1, 2}, {0, 1, 0}, 0, 2);
  CHECK(r.mean == doctest::Approx(0.5));
  // integral of (u - 1/2)^2 over a tent of height 1: 2 * (1/12)
  CHECK(r.std == doctest::Approx(std::sqrt(1.0 / 12)));
}

TEST_CASE("log-log regression examples") {
  std::vector<std::pair<double, double>> line;
  for (double n : {1e3, 1e4, 1e5, 1e6}) line.emplace_back(n, 2.0 * std::pow(n, -0.3));
  const auto fit = loglog_regression(line);
  CHECK(fit.slope == doctest::Approx(-0.3).epsilon(1e-12));
  CHECK(fit.r_squared_fit == doctest::Approx(1.0).epsilon(1e-12));

  CHECK(loglog_regression({{100, 1}, {10000, 0.01}}).slope == doctest::Approx(-1.0).epsilon(1e-14));

  std::vector<std::pair<double, double>> root;
  for (double n : {2000.0, 8000.0, 32000.0}) root.emplace_back(n, 0.4 / std::sqrt(n));
  const auto fs = fluctuation_scaling(root);
  CHECK(fs.slope == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(*fs.r_squared_fixed == doctest::Approx(1.0).epsilon(1e-12));

  CHECK_THROWS(fluctuation_scaling({{2000, 0.01}}));
  CHECK_THROWS(loglog_regression({{2000, 0.01}, {2000, 0.02}}));
  CHECK_THROWS(loglog_regression({{2000, 0.0}, {4000, 0.02}}));
  CHECK_THROWS(loglog_regression({{-1, 0.1}, {4000, 0.02}}));
}

TEST_CASE("scaling values leaves the slope and shifts the intercept") {
  const std::vector<std::pair<double, double>> pts = {{10, 0.5}, {100, 0.2}, {1000, 0.11}, {10000, 0.02}};
  auto scaled = pts;
  for (auto& p : scaled) p.second *= 7.0;
  const auto a = loglog_regression(pts), b = loglog_regression(scaled);
  CHECK(a.slope == doctest::Approx(b.slope).epsilon(1e-12));
  CHECK(b.intercept - a.intercept == doctest::Approx(std::log(7.0)).epsilon(1e-12));
  CHECK(a.r_squared_fit <= 1.0);
}

TEST_CASE("fixed-slope R^2 uses a refitted intercept") {
  // points on slope -1 line; imposing -1 gives 1, imposing 0 gives 0
  const std::vector<std::pair<double, double>> pts = {{1, 1}, {10, 0.1}, {100, 0.01}};
  CHECK(*loglog_regression(pts, -1.0).r_squared_fixed == doctest::Approx(1.0));
  CHECK(*loglog_regression(pts, 0.0).r_squared_fixed == doctest::Approx(0.0).epsilon(1e-12));
}
