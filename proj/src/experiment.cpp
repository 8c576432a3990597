#include "sisnet/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <json.hpp>

#include "sisnet/coupling.hpp"
#include "sisnet/graph.hpp"
#include "sisnet/io.hpp"
#include "sisnet/meanfield.hpp"
#include "sisnet/sis.hpp"

namespace sisnet {

namespace pt = boost::property_tree;
namespace fs = std::filesystem;

namespace {

const std::set<std::string> kScenarios = {"fig_cvg_left",     "fig_cvg_right",   "fig_tpl_std", "fig_alpha_slopes",
                                          "fig_sparse_left", "fig_sparse_right", "custom"};

void apply_scenario_defaults(ExperimentConfig& c) {
  const auto& s = c.scenario;
  if (s == "fig_cvg_left") {
    c.n_list = {2000};
    c.wI_list = {0.1, 0.5, 1.0, 2.0};
  } else if (s == "fig_cvg_right") {
    c.n_list = {2000, 10000, 100000};
    c.alpha_list = {0.3};
  } else if (s == "fig_tpl_std") {
    c.n_list = {2000, 8000, 32000};
    c.alpha_list = {0.3, 0.0};
    c.runs = 10;
  } else if (s == "fig_alpha_slopes") {
    c.n_list = {2000, 6000, 20000, 60000};
    c.alpha_list = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5};
    c.runs = 25;
  } else if (s == "fig_sparse_left") {
    c.n_list = {2000, 8000, 32000};
    c.wI_list = {1.2};
    c.n_wE = 2.5;
    c.runs = 10;
  } else if (s == "fig_sparse_right") {
    c.n_list = {2000};
    c.wI_list = {0.5, 1.0, 1.5, 2.0, 2.5, 3.0};
    c.runs = 10;
  }
}

/// Line of `key` inside `section` of the raw text, 0 if not found.
int line_of(const std::string& text, const std::string& section, const std::string& key) {
  std::istringstream in(text);
  std::string line, current;
  for (int no = 1; std::getline(in, line); ++no) {
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == ';' || line[first] == '#') continue;
    if (line[first] == '[') {
      const auto close = line.find(']', first);
      current = line.substr(first + 1, close == std::string::npos ? std::string::npos : close - first - 1);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    std::string k = line.substr(first, eq - first);
    k.erase(k.find_last_not_of(" \t") + 1);
    if (current == section && k == key) return no;
  }
  return 0;
}

class Reader {
 public:
  Reader(const pt::ptree& tree, const std::string& text, std::string origin)
      : tree_(tree), text_(text), origin_(std::move(origin)) {}

  [[noreturn]] void fail(const std::string& section, const std::string& key, const std::string& what) const {
    const int line = line_of(text_, section, key);
    std::string where = origin_;
    if (line > 0) where += ":" + std::to_string(line);
    throw ConfigError(where + ": " + (section.empty() ? key : section + "." + key) + ": " + what);
  }

  std::optional<std::string> raw(const std::string& section, const std::string& key) {
    used_.insert({section, key});
    const auto* node = section.empty() ? &tree_ : find_section(section);
    if (!node) return std::nullopt;
    auto v = node->get_optional<std::string>(pt::ptree::path_type(key, '\0'));
    if (!v) return std::nullopt;
    std::string s = *v;
    s.erase(0, s.find_first_not_of(" \t\""));
    s.erase(s.find_last_not_of(" \t\"") + 1);
    return s;
  }

  double to_double(const std::string& section, const std::string& key, std::string_view s) const {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v))
      fail(section, key, "expected a number, got '" + std::string(s) + "'");
    return v;
  }

  void number(const std::string& section, const std::string& key, double& out) {
    if (auto s = raw(section, key)) out = to_double(section, key, *s);
  }
  void number(const std::string& section, const std::string& key, std::optional<double>& out) {
    if (auto s = raw(section, key)) out = to_double(section, key, *s);
  }
  void integer(const std::string& section, const std::string& key, int& out) {
    if (auto s = raw(section, key)) out = as_int(section, key, to_double(section, key, *s));
  }
  void boolean(const std::string& section, const std::string& key, bool& out) {
    if (auto s = raw(section, key)) {
      if (*s == "true" || *s == "1") out = true;
      else if (*s == "false" || *s == "0") out = false;
      else fail(section, key, "expected true or false");
    }
  }
  void text(const std::string& section, const std::string& key, std::string& out) {
    if (auto s = raw(section, key)) out = *s;
  }
  void list(const std::string& section, const std::string& key, std::vector<double>& out) {
    if (auto s = raw(section, key)) out = split(section, key, *s, ',');
  }
  void int_list(const std::string& section, const std::string& key, std::vector<int>& out) {
    if (auto s = raw(section, key)) {
      out.clear();
      for (double v : split(section, key, *s, ',')) out.push_back(as_int(section, key, v));
    }
  }
  /// Rows separated by ';', entries by ','.
  void matrix(const std::string& section, const std::string& key, std::vector<std::vector<double>>& out) {
    if (auto s = raw(section, key)) {
      out.clear();
      std::string_view rest = *s;
      while (true) {
        const auto semi = rest.find(';');
        out.push_back(split(section, key, std::string(rest.substr(0, semi)), ','));
        if (semi == std::string_view::npos) break;
        rest.remove_prefix(semi + 1);
      }
    }
  }

  void reject_unknown() const {
    for (const auto& [name, node] : tree_) {
      if (node.empty()) {
        if (!used_.count({"", name})) fail("", name, "unknown key");
        continue;
      }
      for (const auto& [key, value] : node)
        if (!used_.count({name, key})) fail(name, key, "unknown key");
    }
  }

 private:
  const pt::ptree* find_section(const std::string& section) const {
    auto it = tree_.find(section);
    return it == tree_.not_found() ? nullptr : &it->second;
  }

  int as_int(const std::string& section, const std::string& key, double v) const {
    if (v != std::floor(v) || std::abs(v) > 2e9) fail(section, key, "expected an integer");
    return static_cast<int>(v);
  }

  std::vector<double> split(const std::string& section, const std::string& key, const std::string& s,
                            char sep) const {
    std::vector<double> out;
    std::string_view rest = s;
    while (true) {
      const auto pos = rest.find(sep);
      out.push_back(to_double(section, key, rest.substr(0, pos)));
      if (pos == std::string_view::npos) break;
      rest.remove_prefix(pos + 1);
    }
    return out;
  }

  const pt::ptree& tree_;
  const std::string& text_;
  std::string origin_;
  std::set<std::pair<std::string, std::string>> used_;
};

std::string hex64(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex;
  s.width(16);
  s.fill('0');
  s << v;
  return s.str();
}

std::string opt_double(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

std::string point_tag(const SweepPoint& p) { return "n" + std::to_string(p.n) + "_p" + format_double(p.param); }

/// Runs body(k) for k in [0, count) on `threads` workers; the first
/// exception is rethrown after all workers stop.
template <class Body>
void parallel_for(std::size_t count, int threads, Body&& body) {
  const int workers = std::max(1, std::min<int>(threads, static_cast<int>(count)));
  if (workers == 1) {
    for (std::size_t k = 0; k < count; ++k) body(k);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t k; !failed && (k = next++) < count;) {
        try {
          body(k);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          failed = true;
        }
      }
    });
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

MeasureSpec point_measure(const ExperimentConfig& cfg) {
  if (cfg.kernel == "sbm") return DiscreteWeights{cfg.sbm_mu};
  return UniformOnSpace{};
}

EpidemicState point_initial(const ExperimentConfig& cfg, const SampledGraph& g, const KernelSpec& k, Stream& rng) {
  if (cfg.kernel == "sbm" && !cfg.sbm_u0.empty()) {
    auto u0 = cfg.sbm_u0;
    return init_state(g, k, PointFn([u0](const Feature& x) { return u0[static_cast<std::size_t>(x[0])]; }), rng);
  }
  return init_state(g, k, cfg.u0, rng);
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + dir.string() + ": " + ec.message());
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

nlohmann::ordered_json manifest_head(const ExperimentConfig& cfg, const CommandOptions& opt,
                                     const std::string& command) {
  nlohmann::ordered_json m;
  m["command"] = command;
  m["scenario"] = cfg.scenario;
  m["config_hash"] = hex64(hash_string(cfg.source_text));
  m["master_seed"] = opt.master_seed;
  m["version"] = kVersion;
  m["threads"] = opt.threads;
  m["kernel"] = cfg.kernel;
  m["t_max"] = cfg.t_max;
  return m;
}

void write_manifest(const fs::path& dir, const nlohmann::ordered_json& m) {
  auto out = open_out(dir / "manifest.json");
  out << m.dump(2) << '\n';
}

nlohmann::ordered_json run_entry(const RunResult& r) {
  nlohmann::ordered_json e;
  e["n"] = r.point.n;
  if (r.point.alpha) e["alpha"] = *r.point.alpha;
  e["w_I"] = r.point.wI;
  e["w_E"] = r.point.wE;
  e["run_index"] = r.run_index;
  e["seed"] = r.seed;
  e["edges"] = r.edges;
  e["events"] = r.events;
  e["wall_seconds"] = r.wall_seconds;
  if (!r.trajectory_file.empty()) e["trajectory"] = r.trajectory_file;
  return e;
}

void write_summary(const fs::path& path, const std::vector<RunResult>& results) {
  auto out = open_out(path);
  out << "n,alpha,run_index,u_hat,sigma_hat,v_hat_giant,sigma_hat_giant,abs_bias,w_I,w_E\n";
  for (const auto& r : results) {
    const auto& s = r.summary;
    std::optional<double> bias;
    if (r.u_star) bias = std::abs(s.u_hat - *r.u_star);
    out << csv_row({std::to_string(r.point.n), opt_double(r.point.alpha), std::to_string(r.run_index),
                    format_double(s.u_hat), format_double(s.sigma_hat), opt_double(s.v_hat),
                    opt_double(s.sigma_v_hat), opt_double(bias), format_double(r.point.wI),
                    format_double(r.point.wE)});
  }
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, const std::string& origin) {
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(origin + ":" + std::to_string(e.line()) + ": " + e.message());
  }
  Reader r(tree, text, origin);
  ExperimentConfig c;
  c.source_text = text;
  r.text("", "scenario", c.scenario);
  if (!kScenarios.count(c.scenario)) r.fail("", "scenario", "unknown scenario '" + c.scenario + "'");
  apply_scenario_defaults(c);

  r.text("model", "kernel", c.kernel);
  if (c.kernel != "constant" && c.kernel != "sbm" && c.kernel != "geometric")
    r.fail("model", "kernel", "expected constant, sbm or geometric");
  r.number("model", "gamma", c.gamma);
  r.number("model", "u0", c.u0);
  r.number("model", "w_E", c.wE);
  r.number("model", "w_I", c.wI);
  r.number("model", "n_wE", c.n_wE);
  r.number("model", "radius", c.radius);
  r.number("model", "w", c.family.target_w);
  r.matrix("model", "sbm_wE", c.sbm_wE);
  r.matrix("model", "sbm_wI", c.sbm_wI);
  r.list("model", "sbm_gamma", c.sbm_gamma);
  r.list("model", "sbm_mu", c.sbm_mu);
  r.list("model", "sbm_u0", c.sbm_u0);

  r.list("family", "alpha", c.alpha_list);
  r.integer("family", "n0", c.family.n0);
  r.number("family", "base_wI", c.family.base_wI);
  r.number("family", "target_w", c.family.target_w);

  r.int_list("run", "n", c.n_list);
  r.list("run", "w_I", c.wI_list);
  r.integer("run", "runs", c.runs);
  r.number("run", "t_max", c.t_max);
  r.number("run", "record_step", c.record_step);
  r.number("run", "window_begin", c.window.begin);
  r.number("run", "window_end", c.window.end);
  r.boolean("run", "write_trajectories", c.write_trajectories);

  r.integer("meanfield", "nodes", c.quad_nodes);
  r.number("meanfield", "dt", c.mf_dt);
  r.reject_unknown();

  try {
    validate(c);
  } catch (const ConfigError& e) {
    throw ConfigError(origin + ": " + e.what());
  }
  return c;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path.string() + ": cannot open config file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.string());
}

void validate(const ExperimentConfig& c) {
  if (c.runs < 1) throw ConfigError("runs must be >= 1");
  if (c.n_list.empty()) throw ConfigError("n list is empty");
  for (int n : c.n_list)
    if (n < 1) throw ConfigError("population sizes must be >= 1");
  if (!(c.t_max >= 0.0)) throw ConfigError("t_max must be >= 0");
  if (!(c.record_step > 0.0)) throw ConfigError("record_step must be > 0");
  if (!(c.window.begin >= 0.0 && c.window.end <= c.t_max && c.window.begin < c.window.end))
    throw ConfigError("window must be a non-empty subset of [0, t_max]");
  if (!(c.gamma >= 0.0)) throw ConfigError("gamma must be >= 0");
  if (!(c.u0 >= 0.0 && c.u0 <= 1.0)) throw ConfigError("u0 must lie in [0,1]");
  if (!c.alpha_list.empty() && !c.wI_list.empty()) throw ConfigError("give either family alphas or a w_I list");
  if (c.quad_nodes < 1) throw ConfigError("meanfield nodes must be >= 1");
  if (!(c.mf_dt > 0.0)) throw ConfigError("meanfield dt must be > 0");
  if (c.kernel == "constant" && c.alpha_list.empty() && c.wI_list.empty() && !(c.wE && c.wI))
    throw ConfigError("constant kernel needs family alphas, a w_I list, or both w_E and w_I");
  if (c.kernel == "sbm") {
    const auto k = c.sbm_gamma.size();
    if (k == 0 || c.sbm_wE.size() != k || c.sbm_wI.size() != k || c.sbm_mu.size() != k)
      throw ConfigError("sbm needs k x k sbm_wE and sbm_wI and length-k sbm_gamma and sbm_mu");
    if (!c.sbm_u0.empty() && c.sbm_u0.size() != k) throw ConfigError("sbm_u0 must have length k");
  }
  if (c.kernel == "geometric" && !(c.radius >= 0.0)) throw ConfigError("radius must be >= 0");
  sweep_points(c);
}

std::vector<SweepPoint> sweep_points(const ExperimentConfig& c) {
  std::vector<SweepPoint> pts;
  if (!c.alpha_list.empty()) {
    for (double alpha : c.alpha_list) {
      ScalingFamily f = c.family;
      f.alpha = alpha;
      for (int n : c.n_list) pts.push_back({n, alpha, f.wI_at(n), f.wE_at(n), alpha});
    }
  } else if (!c.wI_list.empty()) {
    for (double wI : c.wI_list)
      for (int n : c.n_list) {
        double wE;
        if (c.wE) wE = *c.wE;
        else if (c.n_wE) wE = *c.n_wE / n;
        else if (c.scenario == "fig_sparse_right") wE = c.family.target_w / (static_cast<double>(c.family.n0) * wI);
        else wE = c.family.target_w / (static_cast<double>(n) * wI);
        pts.push_back({n, std::nullopt, wI, wE, wI});
      }
  } else {
    for (int n : c.n_list) pts.push_back({n, std::nullopt, c.wI.value_or(0.0), c.wE.value_or(1.0), c.wI.value_or(0.0)});
  }
  if (c.kernel == "constant")
    for (const auto& p : pts)
      if (!(p.wE >= 0.0 && p.wE <= 1.0))
        throw ConfigError("w_E = " + format_double(p.wE) + " outside [0,1] at n = " + std::to_string(p.n));
  return pts;
}

std::uint64_t run_seed(std::uint64_t master, const std::string& scenario, const SweepPoint& point,
                       int run_index) {
  return derive_seed(master, hash_string(scenario), static_cast<std::uint64_t>(point.n),
                     std::bit_cast<std::uint64_t>(point.param), static_cast<std::uint64_t>(run_index));
}

KernelSpec point_kernel(const ExperimentConfig& cfg, const SweepPoint& point) {
  if (cfg.kernel == "sbm") return sbm_kernels(cfg.sbm_wE, cfg.sbm_wI, cfg.sbm_gamma);
  if (cfg.kernel == "geometric") return geometric_kernel(Interval01{}, cfg.radius, point.wI, cfg.gamma);
  return constant_kernels(point.wE, point.wI, cfg.gamma);
}

std::optional<double> point_u_star(const ExperimentConfig& cfg, const SweepPoint& point) {
  if (cfg.kernel != "constant") return std::nullopt;
  const double w = static_cast<double>(point.n) * point.wE * point.wI;
  if (w == 0.0 && cfg.gamma == 0.0) return std::nullopt;
  return equilibrium(w, cfg.gamma).u_star;
}

RunResult simulate_one(const ExperimentConfig& cfg, const SweepPoint& point, int run_index, std::uint64_t seed,
                       const std::optional<fs::path>& traj_dir) {
  const auto start = std::chrono::steady_clock::now();
  const KernelSpec kernel = point_kernel(cfg, point);
  Stream feature_rng(derive_seed(seed, 1)), graph_rng(derive_seed(seed, 2)), init_rng(derive_seed(seed, 3)),
      dynamics_rng(derive_seed(seed, 4));
  const auto pop = sample_features(kernel.space, point_measure(cfg), point.n, feature_rng, seed);
  const auto graph = sample_graph(pop, kernel, graph_rng);
  auto state = point_initial(cfg, graph, kernel, init_rng);

  SimConfig sc;
  sc.t_max = cfg.t_max;
  sc.record_grid = SimConfig::uniform_grid(cfg.t_max, cfg.record_step);
  sc.mask = graph.components().giant_mask;
  sc.keep_steps_from = cfg.window.begin;
  const auto traj = run(graph, kernel, std::move(state), sc, dynamics_rng);

  RunResult r;
  r.point = point;
  r.run_index = run_index;
  r.seed = seed;
  r.summary = temporal_summary(traj, cfg.window);
  r.u_star = point_u_star(cfg, point);
  r.giant_size = graph.giant_size();
  r.edges = graph.edge_count();
  r.events = traj.event_count;
  if (traj_dir) {
    r.trajectory_file = "traj_" + point_tag(point) + "_r" + std::to_string(run_index) + ".csv";
    auto out = open_out(*traj_dir / r.trajectory_file);
    out << "t,u,v_giant\n";
    for (std::size_t k = 0; k < traj.grid.size(); ++k)
      out << format_double(traj.grid[k]) << ',' << format_double(traj.u[k]) << ','
          << (traj.v.empty() ? std::string() : format_double(traj.v[k])) << '\n';
  }
  r.wall_seconds = seconds_since(start);
  return r;
}

std::vector<RunResult> run_simulations(const ExperimentConfig& cfg, std::uint64_t master_seed, int threads,
                                       const std::optional<fs::path>& traj_dir) {
  const auto pts = sweep_points(cfg);
  const std::size_t runs = static_cast<std::size_t>(cfg.runs);
  std::vector<RunResult> results(pts.size() * runs);
  parallel_for(results.size(), threads, [&](std::size_t k) {
    const auto& p = pts[k / runs];
    const int r = static_cast<int>(k % runs);
    results[k] = simulate_one(cfg, p, r, run_seed(master_seed, cfg.scenario, p, r), traj_dir);
  });
  return results;
}

int cmd_simulate(const ExperimentConfig& cfg, const CommandOptions& opt) {
  ensure_dir(opt.out_dir);
  std::optional<fs::path> traj_dir;
  if (cfg.write_trajectories) traj_dir = opt.out_dir;
  const auto results = run_simulations(cfg, opt.master_seed, opt.threads, traj_dir);
  write_summary(opt.out_dir / "summary.csv", results);
  auto m = manifest_head(cfg, opt, "simulate");
  m["files"] = {"summary.csv"};
  for (const auto& r : results) m["runs"].push_back(run_entry(r));
  write_manifest(opt.out_dir, m);
  return 0;
}

int cmd_meanfield(const ExperimentConfig& cfg, const CommandOptions& opt) {
  ensure_dir(opt.out_dir);
  const auto start = std::chrono::steady_clock::now();
  auto out = open_out(opt.out_dir / "meanfield.csv");
  std::string method;
  if (cfg.kernel == "constant") {
    method = "closed_form";
    const double w = cfg.family.target_w;
    const auto grid = SimConfig::uniform_grid(cfg.t_max, cfg.record_step);
    const auto u = solve_homogeneous(w, cfg.gamma, cfg.u0, grid);
    out << "t,u\n";
    for (std::size_t k = 0; k < grid.size(); ++k) out << format_double(grid[k]) << ',' << format_double(u[k]) << '\n';
  } else {
    MeanFieldSolution sol;
    if (cfg.kernel == "sbm") {
      auto u0 = cfg.sbm_u0.empty() ? std::vector<double>(cfg.sbm_gamma.size(), cfg.u0) : cfg.sbm_u0;
      sol = solve_sbm(cfg.sbm_wE, cfg.sbm_wI, cfg.sbm_gamma, cfg.sbm_mu, u0, cfg.t_max, cfg.mf_dt, cfg.record_step);
    } else {
      const double w = cfg.family.target_w, radius = cfg.radius, gamma = cfg.gamma, u0 = cfg.u0;
      sol = solve_general([w, radius](const Feature& x, const Feature& y) { return std::abs(x[0] - y[0]) <= radius ? w : 0.0; },
                          [gamma](const Feature&) { return gamma; }, midpoint_quadrature(Interval01{}, cfg.quad_nodes),
                          [u0](const Feature&) { return u0; }, cfg.t_max, cfg.mf_dt, cfg.record_step);
    }
    method = sol.method;
    // one column per node; the header carries its coordinates and weight
    out << 't';
    for (std::size_t k = 0; k < sol.nodes.size(); ++k) {
      out << ",u[" << (cfg.kernel == "sbm" ? "q=" : "x=");
      for (std::size_t d = 0; d < sol.nodes[k].size(); ++d) out << (d ? " " : "") << format_double(sol.nodes[k][d]);
      out << ";w=" << format_double(sol.weights[k]) << ']';
    }
    out << '\n';
    for (std::size_t r = 0; r < sol.times.size(); ++r) {
      out << format_double(sol.times[r]);
      for (double v : sol.values[r]) out << ',' << format_double(v);
      out << '\n';
    }
  }
  auto m = manifest_head(cfg, opt, "meanfield");
  m["method"] = method;
  m["files"] = {"meanfield.csv"};
  m["wall_seconds"] = seconds_since(start);
  write_manifest(opt.out_dir, m);
  return 0;
}

namespace {

struct CoupledResult {
  CoupledRecord record;
  std::vector<Feature> features;
  std::uint64_t seed = 0;
  double wall_seconds = 0.0;
};

/// n = 8 shared-table comparison of the event logic against the literal
/// evaluation; returns the number of mismatching seeds.
int run_oracle(const ExperimentConfig& cfg, const SweepPoint& base, std::uint64_t master, const fs::path& dir) {
  SweepPoint p = base;
  p.n = 8;
  if (cfg.kernel == "constant" && !cfg.alpha_list.empty()) {
    ScalingFamily f = cfg.family;
    f.alpha = *p.alpha;
    p.wI = f.wI_at(8);
    p.wE = std::min(1.0, f.wE_at(8));
  }
  const KernelSpec kernel = point_kernel(cfg, p);
  auto out = open_out(dir / "oracle.csv");
  out << "seed_index,seed,events,identical\n";
  int mismatches = 0;
  for (int s = 0; s < 100; ++s) {
    const auto seed = derive_seed(master, hash_string("oracle"), static_cast<std::uint64_t>(s));
    Stream feature_rng(derive_seed(seed, 1)), init_rng(derive_seed(seed, 3)), table_rng(derive_seed(seed, 6));
    const auto pop = sample_features(kernel.space, point_measure(cfg), p.n, feature_rng, seed);
    const auto graph = sample_graph_counter(pop, kernel, derive_seed(seed, 5));
    const auto init = point_initial(cfg, graph, kernel, init_rng).states;
    CoupledConfig cc;
    cc.t_max = cfg.t_max;
    cc.retain_events = true;
    const auto table = make_arrow_table(graph, kernel, cc.t_max, table_rng);
    const auto a = run_coupled_table(graph, kernel, init, cc, table);
    const auto b = brute_force_coupled(graph, kernel, init, cc, table);
    const bool same = a.events == b.events;
    mismatches += !same;
    out << s << ',' << seed << ',' << a.events.size() << ',' << (same ? "true" : "false") << '\n';
  }
  return mismatches;
}

}  // namespace

int cmd_couple(const ExperimentConfig& cfg, const CommandOptions& opt) {
  const auto pts = sweep_points(cfg);
  for (const auto& p : pts)
    if (p.n > kCoupleMaxN)
      throw ConfigError("couple refuses n = " + std::to_string(p.n) + " above the cap " + std::to_string(kCoupleMaxN));
  ensure_dir(opt.out_dir);
  const std::size_t runs = static_cast<std::size_t>(cfg.runs);
  std::vector<CoupledResult> results(pts.size() * runs);
  parallel_for(results.size(), opt.threads, [&](std::size_t k) {
    const auto start = std::chrono::steady_clock::now();
    const auto& p = pts[k / runs];
    const int run_index = static_cast<int>(k % runs);
    const auto seed = run_seed(opt.master_seed, cfg.scenario, p, run_index);
    const KernelSpec kernel = point_kernel(cfg, p);
    Stream feature_rng(derive_seed(seed, 1)), init_rng(derive_seed(seed, 3)), dynamics_rng(derive_seed(seed, 4));
    const auto pop = sample_features(kernel.space, point_measure(cfg), p.n, feature_rng, seed);
    const auto graph = sample_graph_counter(pop, kernel, derive_seed(seed, 5));
    const auto init = point_initial(cfg, graph, kernel, init_rng).states;
    CoupledConfig cc;
    cc.t_max = cfg.t_max;
    cc.record_grid = SimConfig::uniform_grid(cfg.t_max, cfg.record_step);
    auto& res = results[k];
    res.record = run_coupled(graph, kernel, init, cc, dynamics_rng);
    res.features = pop.features;
    res.seed = seed;
    if (cfg.write_trajectories) {
      auto out = open_out(opt.out_dir / ("couple_" + point_tag(p) + "_r" + std::to_string(run_index) + ".csv"));
      write_coupled_csv(out, res.record);
    }
    res.wall_seconds = seconds_since(start);
  });

  auto summary = open_out(opt.out_dir / "couple_summary.csv");
  summary << "n,alpha,w_I,w_E,run_index,sup_disagreement,fog_final_fraction,roots_final,domination_violations\n";
  auto m = manifest_head(cfg, opt, "couple");
  for (std::size_t k = 0; k < results.size(); ++k) {
    const auto& p = pts[k / runs];
    const auto& rec = results[k].record;
    summary << csv_row({std::to_string(p.n), opt_double(p.alpha), format_double(p.wI), format_double(p.wE),
                        std::to_string(k % runs), format_double(rec.sup_disagreement()),
                        format_double(static_cast<double>(rec.fog_final) / rec.n), std::to_string(rec.roots_final),
                        std::to_string(rec.domination_violations)});
    nlohmann::ordered_json e;
    e["n"] = p.n;
    e["run_index"] = k % runs;
    e["seed"] = results[k].seed;
    e["arrows"] = rec.arrows;
    e["wall_seconds"] = results[k].wall_seconds;
    m["runs"].push_back(e);
  }
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (runs < 10) {
      std::cerr << "couple: bound report skipped at n = " << pts[i].n << " (needs at least 10 runs)\n";
      continue;
    }
    std::vector<CoupledRecord> recs;
    for (std::size_t r = 0; r < runs; ++r) recs.push_back(results[i * runs + r].record);
    // I_n is evaluated on the features of the first replicate
    const auto report = coupling_bound_report(recs, point_kernel(cfg, pts[i]), results[i * runs].features);
    auto out = open_out(opt.out_dir / ("bound_" + point_tag(pts[i]) + ".json"));
    out << to_json(report) << '\n';
  }
  int status = 0;
  if (opt.oracle) {
    const int bad = run_oracle(cfg, pts.front(), opt.master_seed, opt.out_dir);
    m["oracle_mismatches"] = bad;
    if (bad) {
      std::cerr << "couple: oracle event logs differ on " << bad << " of 100 seeds\n";
      status = 1;
    }
  }
  write_manifest(opt.out_dir, m);
  return status;
}

int cmd_sweep(const ExperimentConfig& cfg, const CommandOptions& opt) {
  ensure_dir(opt.out_dir);
  std::optional<fs::path> traj_dir;
  if (cfg.write_trajectories) traj_dir = opt.out_dir;
  const auto pts = sweep_points(cfg);
  const std::size_t runs = static_cast<std::size_t>(cfg.runs);
  std::vector<RunResult> results(pts.size() * runs);
  parallel_for(results.size(), opt.threads, [&](std::size_t k) {
    const auto& p = pts[k / runs];
    const int r = static_cast<int>(k % runs);
    // trajectories of the first replicate only
    results[k] = simulate_one(cfg, p, r, run_seed(opt.master_seed, cfg.scenario, p, r),
                              r == 0 ? traj_dir : std::nullopt);
  });
  write_summary(opt.out_dir / "summary.csv", results);

  auto agg = open_out(opt.out_dir / "aggregate.csv");
  agg << "n,alpha,w_I,w_E,runs,u_star,mean_u_hat,mean_sigma_hat,mean_v_hat_giant,mean_sigma_hat_giant,"
         "mean_abs_bias,u_lo,u_hi,v_lo,v_hi\n";
  std::vector<double> mean_sigma(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    double u = 0, s = 0, v = 0, sv = 0, b = 0;
    bool have_v = true;
    const auto& u_star = results[i * runs].u_star;
    for (std::size_t r = 0; r < runs; ++r) {
      const auto& x = results[i * runs + r].summary;
      u += x.u_hat;
      s += x.sigma_hat;
      if (x.v_hat) {
        v += *x.v_hat;
        sv += *x.sigma_v_hat;
      } else {
        have_v = false;
      }
      if (u_star) b += std::abs(x.u_hat - *u_star);
    }
    const double m = static_cast<double>(runs);
    u /= m, s /= m, v /= m, sv /= m, b /= m;
    mean_sigma[i] = s;
    std::optional<double> ov, osv, ob, vlo, vhi;
    if (have_v) ov = v, osv = sv, vlo = v - 2 * sv, vhi = v + 2 * sv;
    if (u_star) ob = b;
    const auto& p = pts[i];
    agg << csv_row({std::to_string(p.n), opt_double(p.alpha), format_double(p.wI), format_double(p.wE),
                    std::to_string(runs), opt_double(u_star), format_double(u), format_double(s), opt_double(ov),
                    opt_double(osv), opt_double(ob), format_double(u - 2 * s), format_double(u + 2 * s),
                    opt_double(vlo), opt_double(vhi)});
  }

  // log-log regressions per parameter value across the n grid
  auto reg = open_out(opt.out_dir / "regression.csv");
  reg << "quantity,alpha,w_I,points,slope,intercept,r_squared_fit,fixed_slope,r_squared_fixed\n";
  std::vector<std::pair<double, double>> alpha_slopes;
  std::map<double, std::vector<std::size_t>> by_param;
  for (std::size_t i = 0; i < pts.size(); ++i) by_param[pts[i].param].push_back(i);
  for (const auto& [param, idx] : by_param) {
    std::set<int> ns;
    for (auto i : idx) ns.insert(pts[i].n);
    if (ns.size() < 2) continue;
    const auto& p0 = pts[idx.front()];
    const std::string alpha = opt_double(p0.alpha);
    const std::string wI = p0.alpha ? std::string() : format_double(p0.wI);
    auto emit = [&](const std::string& name, const RegressionResult& fit, std::size_t count) {
      reg << csv_row({name, alpha, wI, std::to_string(count), format_double(fit.slope), format_double(fit.intercept),
                      format_double(fit.r_squared_fit), opt_double(fit.fixed_slope), opt_double(fit.r_squared_fixed)});
    };
    std::vector<std::pair<double, double>> sigma_pts;
    for (auto i : idx) sigma_pts.emplace_back(pts[i].n, mean_sigma[i]);
    if (std::all_of(sigma_pts.begin(), sigma_pts.end(), [](auto q) { return q.second > 0.0; }))
      emit("sigma_hat", fluctuation_scaling(sigma_pts), sigma_pts.size());
    if (!results[idx.front() * runs].u_star) continue;
    std::vector<std::pair<double, double>> bias_pts;
    for (auto i : idx)
      for (std::size_t r = 0; r < runs; ++r) {
        const auto& x = results[i * runs + r];
        const double d = std::abs(x.summary.u_hat - *x.u_star);
        if (d > 0.0) bias_pts.emplace_back(x.point.n, d);
      }
    if (bias_pts.size() < 2) continue;
    std::optional<double> fixed;
    if (p0.alpha) fixed = -*p0.alpha;
    const auto fit = loglog_regression(bias_pts, fixed);
    emit("abs_bias", fit, bias_pts.size());
    if (p0.alpha) alpha_slopes.emplace_back(*p0.alpha, fit.slope);
  }

  auto m = manifest_head(cfg, opt, "sweep");
  m["files"] = {"summary.csv", "aggregate.csv", "regression.csv"};
  if (alpha_slopes.size() >= 2) {
    // share of slope variance explained by the prediction slope = -alpha
    double mean = 0.0;
    for (auto [a, s] : alpha_slopes) mean += s;
    mean /= static_cast<double>(alpha_slopes.size());
    double ss_tot = 0.0, ss_res = 0.0;
    for (auto [a, s] : alpha_slopes) {
      ss_tot += (s - mean) * (s - mean);
      ss_res += (s + a) * (s + a);
    }
    m["slope_prediction_r_squared"] = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 0.0;
  }
  for (const auto& r : results) m["runs"].push_back(run_entry(r));
  write_manifest(opt.out_dir, m);
  return 0;
}

}  // namespace sisnet
