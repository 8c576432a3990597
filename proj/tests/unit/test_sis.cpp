#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "sisnet/graph.hpp"
#include "sisnet/sis.hpp"
#include "sisnet/stats.hpp"

using namespace sisnet;

namespace {

Population uniform_pop(int n, std::uint64_t seed) {
  Stream rng(seed);
  return sample_features(Interval01{}, UniformOnSpace{}, n, rng, seed);
}

SampledGraph complete_graph(int n) {
  Population pop = uniform_pop(n, 1);
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) edges.emplace_back(i, j);
  return SampledGraph(pop, edges);
}

}  // namespace

TEST_CASE("init_state examples") {
  Stream rng(1);
  const auto k = constant_kernels(1.0, 0.1, 0.7);
  const auto g50 = complete_graph(50);
  auto all = init_state(g50, k, 1.0, rng);
  CHECK(all.infected_count == 50);
  auto none = init_state(g50, k, 0.0, rng);
  CHECK(none.infected_count == 0);
  CHECK(none.total_recovery_rate == 0.0);
  CHECK(none.total_infection_rate == 0.0);

  Stream grng(2);
  const auto big = sample_graph(uniform_pop(10000, 3), constant_kernels(0.0, 1.0, 1.0), grng);
  const auto half = init_state(big, k, 0.5, rng);
  CHECK(half.infected_count >= 4800);
  CHECK(half.infected_count <= 5200);
  CHECK_THROWS_AS(init_state(g50, k, 1.5, rng), std::invalid_argument);
  CHECK_THROWS_AS(init_state(g50, k, PointFn([](const Feature&) { return -0.1; }), rng), std::invalid_argument);
}

TEST_CASE("no initial infection gives a constant trajectory") {
  Stream rng(3);
  const auto g = complete_graph(20);
  const auto k = constant_kernels(1.0, 1.0, 0.7);
  SimConfig cfg;
  cfg.t_max = 10;
  cfg.record_grid = SimConfig::uniform_grid(10, 1);
  const auto traj = run(g, k, init_state(g, k, 0.0, rng), cfg, rng);
  CHECK(traj.event_count == 0);
  for (double u : traj.u) CHECK(u == 0.0);
}

TEST_CASE("isolated vertex recovers after an Exp(1) time") {
  Population pop = uniform_pop(1, 4);
  const SampledGraph g(pop, {});
  const auto k = constant_kernels(0.0, 1.0, 1.0);
  SimConfig cfg;
  cfg.t_max = 1e6;
  cfg.retain_events = true;
  double sum = 0;
  const int m = 10000;
  for (int r = 0; r < m; ++r) {
    Stream rng(derive_seed(5, r));
    const auto traj = run(g, k, init_state(g, k, 1.0, rng), cfg, rng);
    REQUIRE(traj.events.size() == 1);
    sum += traj.events[0].time;
  }
  CHECK(sum / m >= 0.97);
  CHECK(sum / m <= 1.03);
}

TEST_CASE("infected_fraction examples") {
  const auto k = constant_kernels(0.0, 1.0, 1.0);
  Population pop = uniform_pop(4, 6);
  const SampledGraph g(pop, {});
  Stream rng(7);
  SimConfig cfg;
  cfg.t_max = 50;
  cfg.retain_events = true;
  const auto traj = run(g, k, init_state(g, k, 1.0, rng), cfg, rng);
  CHECK(infected_fraction(traj, 0.0) == 1.0);
  REQUIRE(!traj.events.empty());
  const double t1 = traj.events[0].time;
  CHECK(infected_fraction(traj, t1) == 0.75);
  const std::vector<char> all(4, 1);
  for (double t : {0.0, t1, 0.5 * t1, 10.0}) CHECK(infected_fraction(traj, t, all) == infected_fraction(traj, t));
  CHECK_THROWS(infected_fraction(traj, 1.0, std::vector<char>(4, 0)));
}

TEST_CASE("event log, grid and step series agree") {
  Stream grng(8);
  const auto pop = uniform_pop(300, 9);
  const auto k = constant_kernels(0.05, 0.3, 0.7);
  const auto g = sample_graph(pop, k, grng);
  Stream rng(10);
  SimConfig cfg;
  cfg.t_max = 30;
  cfg.record_grid = SimConfig::uniform_grid(30, 0.25);
  cfg.retain_events = true;
  cfg.mask = g.components().giant_mask;
  const auto traj = run(g, k, init_state(g, k, 0.5, rng), cfg, rng);
  REQUIRE(traj.events.size() > 100);
  for (std::size_t e = 1; e < traj.events.size(); ++e) CHECK(traj.events[e].time > traj.events[e - 1].time);
  for (std::size_t r = 0; r < traj.grid.size(); ++r) {
    CHECK(traj.u[r] == infected_fraction(traj, traj.grid[r]));
    CHECK(traj.v[r] == infected_fraction(traj, traj.grid[r], cfg.mask));
    CHECK(traj.v[r] == masked_fraction(traj, traj.grid[r]));
  }
}

TEST_CASE("two-vertex chain: first event type and time") {
  // vertex 0 infected, vertex 1 susceptible: recovery at rate g, infection at rate a
  const double a = 1.3, gam = 0.6;
  Population pop = uniform_pop(2, 11);
  const SampledGraph g(pop, {{0, 1}});
  const auto k = constant_kernels(1.0, a, gam);
  EpidemicState s;
  s.states = {Health::Infected, Health::Susceptible};
  recompute_rates(s, g, k);
  CHECK(s.total_infection_rate == a);
  CHECK(s.total_recovery_rate == gam);
  SimConfig cfg;
  cfg.t_max = 1e3;
  cfg.retain_events = true;
  const int m = 100000;
  int infections = 0;
  std::vector<double> times;
  for (int r = 0; r < m; ++r) {
    Stream rng(derive_seed(12, r));
    const auto traj = run(g, k, s, cfg, rng);
    REQUIRE(!traj.events.empty());
    infections += traj.events[0].kind == EventKind::Infection;
    times.push_back(traj.events[0].time);
  }
  const double p = a / (a + gam);
  CHECK(std::abs(infections - m * p) <= 3 * std::sqrt(m * p * (1 - p)));
  // Kolmogorov-Smirnov against Exp(a + g), 0.1% critical value
  std::sort(times.begin(), times.end());
  double d = 0;
  for (int i = 0; i < m; ++i) {
    const double F = 1 - std::exp(-(a + gam) * times[i]);
    d = std::max({d, std::abs(F - static_cast<double>(i) / m), std::abs(F - static_cast<double>(i + 1) / m)});
  }
  CHECK(d * std::sqrt(m) < 1.95);
}

TEST_CASE("without recovery the infected count never decreases") {
  Stream grng(13);
  const auto pop = uniform_pop(400, 14);
  const auto k = constant_kernels(0.02, 0.5, 0.0);
  const auto g = sample_graph(pop, k, grng);
  Stream rng(15);
  SimConfig cfg;
  cfg.t_max = 20;
  const auto traj = run(g, k, init_state(g, k, 0.05, rng), cfg, rng);
  CHECK(traj.event_count > 0);
  CHECK(std::is_sorted(traj.step_count.begin(), traj.step_count.end()));
}

TEST_CASE("features and class counts do not change during a run") {
  Stream rng(16);
  const auto k = sbm_kernels({{0.1, 0.02}, {0.02, 0.1}}, {{1, 1}, {1, 1}}, {0.7, 0.7});
  const auto pop = sample_features(k.space, DiscreteWeights{{0.3, 0.7}}, 500, rng);
  const auto g = sample_graph(pop, k, rng);
  const auto before = g.population().features;
  SimConfig cfg;
  cfg.t_max = 5;
  run(g, k, init_state(g, k, 1.0, rng), cfg, rng);
  CHECK(g.population().features == before);
}

TEST_CASE("rate audits stay below 1e-9 relative deviation") {
  Stream grng(17);
  const auto pop = uniform_pop(2000, 18);
  const auto k = geometric_kernel(Interval01{}, 0.01, 0.8, 0.7);
  const auto g = sample_graph(pop, k, grng);
  Stream rng(19);
  SimConfig cfg;
  cfg.t_max = 40;
  cfg.audit_interval = 1000;
  const auto traj = run(g, k, init_state(g, k, 1.0, rng), cfg, rng);
  CHECK(traj.event_count > 10000);
  CHECK(traj.audit_max_deviation <= 1e-9);
}

TEST_CASE("non-finite rates abort with a model error") {
  Stream rng(20);
  const auto pop = uniform_pop(10, 21);
  auto k = explicit_kernels(
      Interval01{}, [](const Feature&, const Feature&) { return 1.0; },
      [](const Feature&, const Feature&) { return std::numeric_limits<double>::quiet_NaN(); },
      [](const Feature&) { return 0.7; }, 1.0, 0.7);
  const auto g = sample_graph(pop, k, rng);
  SimConfig cfg;
  cfg.t_max = 1;
  CHECK_THROWS_AS(run(g, k, init_state(g, k, 0.5, rng), cfg, rng), ModelError);
}

TEST_CASE("complete graph with w_I = 3/n sits near 23/30") {
  const int n = 2000;
  const auto g = complete_graph(n);
  const auto k = constant_kernels(1.0, 3.0 / n, 0.7);
  Stream rng(22);
  SimConfig cfg;
  cfg.t_max = 80;
  cfg.record_grid = SimConfig::uniform_grid(80, 1);
  cfg.keep_steps_from = 20;
  const auto traj = run(g, k, init_state(g, k, 1.0, rng), cfg, rng);
  const auto s = temporal_summary(traj);
  CHECK(std::abs(s.u_hat - 23.0 / 30.0) <= 0.03);
}
