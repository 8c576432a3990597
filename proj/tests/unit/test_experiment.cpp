#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "sisnet/experiment.hpp"

using namespace sisnet;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("sisnet_unit_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(slurp(p));
  for (std::string line; std::getline(in, line);) {
    std::vector<std::string> cells;
    std::istringstream ls(line);
    for (std::string c; std::getline(ls, c, ',');) cells.push_back(c);
    rows.push_back(cells);
  }
  return rows;
}

std::string error_of(const std::string& text) {
  try {
    parse_config(text, "cfg.ini");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("scenario defaults and overrides") {
  const auto c = parse_config("scenario = fig_tpl_std\n");
  CHECK(c.n_list == std::vector<int>{2000, 8000, 32000});
  CHECK(c.alpha_list == std::vector<double>{0.3, 0.0});
  CHECK(c.runs == 10);
  CHECK(c.t_max == 80.0);
  CHECK(c.window.begin == 20.0);

  const auto o = parse_config("scenario = fig_tpl_std\n[run]\nruns = 3\nn = 500, 1000\n");
  CHECK(o.runs == 3);
  CHECK(o.n_list == std::vector<int>{500, 1000});

  const auto sp = parse_config("scenario = fig_sparse_left\n");
  REQUIRE(sp.n_wE);
  CHECK(*sp.n_wE == 2.5);
  CHECK(sp.wI_list == std::vector<double>{1.2});
}

TEST_CASE("config errors name the line") {
  CHECK(error_of("scenario = custom\n[model]\nw_E = 0.1\nw_I = 1\nbogus = 3\n[run]\nn = 10\n").find("cfg.ini:5") !=
        std::string::npos);
  CHECK(error_of("[model]\nw_E = 0.1\nw_I = abc\n[run]\nn = 10\n").find("cfg.ini:3") != std::string::npos);
  CHECK_FALSE(error_of("[model]\nw_E = 0.1\nw_I = 1\n[run]\nn = 10\nruns = 0\n").empty());
  CHECK_FALSE(error_of("[model]\nw_E = 0.1\nw_I = 1\n[run]\nn = 10\nt_max = 10\n").empty());  // window past t_max
  CHECK_FALSE(error_of("[model]\nw_E = 0.1\nw_I = 1\n[run]\nn = 10\nwindow_begin = 30\nwindow_end = 25\n").empty());
  CHECK_FALSE(error_of("[model]\nw_E = 1.5\nw_I = 1\n[run]\nn = 10\n").empty());
  CHECK_FALSE(error_of("[model]\nkernel = sbm\n[run]\nn = 10\n").empty());
  CHECK_FALSE(error_of("scenario = nonexistent\n").empty());
  CHECK_THROWS_AS(load_config("/nonexistent/path.ini"), ConfigError);
}

TEST_CASE("sweep points and seeds") {
  const auto c = parse_config("scenario = fig_alpha_slopes\n");
  const auto pts = sweep_points(c);
  CHECK(pts.size() == 6 * 4);
  for (const auto& p : pts) CHECK(p.n * p.wE * p.wI == doctest::Approx(3.0).epsilon(1e-12));

  const auto r = parse_config("scenario = fig_sparse_right\n");
  for (const auto& p : sweep_points(r)) CHECK(2000 * p.wE * p.wI == doctest::Approx(3.0).epsilon(1e-12));

  std::set<std::uint64_t> seeds;
  for (const auto& p : pts)
    for (int k = 0; k < 25; ++k) seeds.insert(run_seed(7, c.scenario, p, k));
  CHECK(seeds.size() == pts.size() * 25);
  CHECK(run_seed(7, c.scenario, pts[0], 0) != run_seed(8, c.scenario, pts[0], 0));
  CHECK(run_seed(7, c.scenario, pts[0], 0) != run_seed(7, "fig_tpl_std", pts[0], 0));
  CHECK(run_seed(7, c.scenario, pts[0], 0) == run_seed(7, c.scenario, pts[0], 0));
}

TEST_CASE("meanfield command on the homogeneous kernel") {
  const auto dir = scratch("mf");
  auto c = parse_config("[model]\nw = 3\ngamma = 0.7\nu0 = 1\nw_E = 1\nw_I = 0.0015\n[run]\nn = 2000\n");
  REQUIRE(cmd_meanfield(c, {dir, 1, 1, false}) == 0);
  const auto rows = read_csv(dir / "meanfield.csv");
  CHECK(rows[0] == std::vector<std::string>{"t", "u"});
  bool seen = false;
  for (const auto& row : rows)
    if (row[0] == "20") {
      CHECK(std::abs(std::stod(row[1]) - 23.0 / 30.0) <= 1e-4);
      seen = true;
    }
  CHECK(seen);
  CHECK(nlohmann::json::parse(slurp(dir / "manifest.json"))["command"] == "meanfield");

  c.family.target_w = 0.0;
  REQUIRE(cmd_meanfield(c, {dir, 1, 1, false}) == 0);
  for (const auto& row : read_csv(dir / "meanfield.csv"))
    if (row[0] == "1") CHECK(std::stod(row[1]) == doctest::Approx(std::exp(-0.7)).epsilon(1e-12));
}

TEST_CASE("meanfield command on an sbm") {
  const auto dir = scratch("mf_sbm");
  const auto c = parse_config(
      "[model]\nkernel = sbm\nsbm_wE = 1, 0; 0, 1\nsbm_wI = 3, 0; 0, 3\nsbm_gamma = 0.7, 0.7\nsbm_mu = 0.5, 0.5\n"
      "[run]\nn = 100\nt_max = 40\nrecord_step = 1\nwindow_begin = 10\nwindow_end = 40\n");
  REQUIRE(cmd_meanfield(c, {dir, 1, 1, false}) == 0);
  const auto rows = read_csv(dir / "meanfield.csv");
  REQUIRE(rows[0].size() == 3);
  CHECK(rows[0][1].rfind("u[q=0;", 0) == 0);
  CHECK(std::stod(rows.back()[1]) == doctest::Approx(8.0 / 15.0).epsilon(1e-5));
}

TEST_CASE("simulate with no initial infection stays at zero") {
  const auto dir = scratch("sim0");
  const auto c = parse_config("[model]\nu0 = 0\nw_E = 0.01\nw_I = 0.5\n[run]\nn = 300\nruns = 2\nrecord_step = 1\n");
  REQUIRE(cmd_simulate(c, {dir, 3, 2, false}) == 0);
  const auto summary = read_csv(dir / "summary.csv");
  REQUIRE(summary.size() == 3);
  CHECK(summary[0][0] == "n");
  for (std::size_t r = 1; r < summary.size(); ++r) CHECK(std::stod(summary[r][3]) == 0.0);
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().filename().string().rfind("traj_", 0) == 0) {
      const auto rows = read_csv(e.path());
      for (std::size_t r = 1; r < rows.size(); ++r) CHECK(std::stod(rows[r][1]) == 0.0);
    }
}

TEST_CASE("couple command") {
  SUBCASE("complete graph gives zero disagreement") {
    const auto dir = scratch("couple1");
    const auto c = parse_config(
        "[model]\nw_E = 1\nw_I = 0.05\n[run]\nn = 60\nruns = 10\nt_max = 5\nrecord_step = 0.5\n"
        "window_begin = 1\nwindow_end = 5\nwrite_trajectories = false\n");
    REQUIRE(cmd_couple(c, {dir, 4, 2, false}) == 0);
    bool found = false;
    for (const auto& e : fs::directory_iterator(dir))
      if (e.path().filename().string().rfind("bound_", 0) == 0) {
        const auto j = nlohmann::json::parse(slurp(e.path()));
        CHECK(j["mean_sup_d"] == 0.0);
        found = true;
      }
    CHECK(found);
  }
  SUBCASE("population above the cap is refused") {
    const auto c = parse_config("[model]\nw_E = 0.0001\nw_I = 1\n[run]\nn = 20001\n");
    CHECK_THROWS_AS(cmd_couple(c, {scratch("couple2"), 1, 1, false}), ConfigError);
  }
  SUBCASE("oracle comparison passes") {
    const auto dir = scratch("couple3");
    const auto c = parse_config(
        "[family]\nalpha = 0.3\n[run]\nn = 200\nruns = 1\nt_max = 5\nrecord_step = 1\nwindow_begin = 1\n"
        "window_end = 5\nwrite_trajectories = false\n");
    CHECK(cmd_couple(c, {dir, 5, 1, true}) == 0);
    const auto rows = read_csv(dir / "oracle.csv");
    CHECK(rows.size() == 101);
  }
}

TEST_CASE("outputs do not depend on the thread count") {
  const std::string text =
      "scenario = fig_tpl_std\n[run]\nn = 300, 600\nruns = 3\nt_max = 30\nwindow_begin = 10\nwindow_end = 30\n";
  const auto c = parse_config(text);
  const auto a = scratch("det1"), b = scratch("det3");
  REQUIRE(cmd_sweep(c, {a, 11, 1, false}) == 0);
  REQUIRE(cmd_sweep(c, {b, 11, 3, false}) == 0);
  for (const char* f : {"summary.csv", "aggregate.csv", "regression.csv"}) {
    CHECK(fs::exists(a / f));
    CHECK(slurp(a / f) == slurp(b / f));
  }
  for (const auto& e : fs::directory_iterator(a))
    if (e.path().extension() == ".csv") CHECK(slurp(e.path()) == slurp(b / e.path().filename()));
}
