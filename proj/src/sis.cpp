#include "sisnet/sis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "sisnet/rate_tree.hpp"

namespace sisnet {

namespace {

/// Rates of the fixed graph: gamma per vertex and, per half-edge (j -> i)
/// stored at j, the rate w_I(x_i, x_j) at which j infects i.
struct GraphRates {
  std::optional<double> wI_const;
  std::vector<double> out_rate;
  std::vector<double> gamma;

  GraphRates(const SampledGraph& g, const KernelSpec& k) : wI_const(k.wI_const) {
    const int n = g.size();
    gamma.resize(n);
    for (int i = 0; i < n; ++i) {
      gamma[i] = k.gamma_const ? *k.gamma_const : k.gamma(g.feature(i));
      if (!std::isfinite(gamma[i]) || gamma[i] < 0.0) throw ModelError("recovery rate is not finite and >= 0");
    }
    if (!wI_const) {
      out_rate.resize(g.half_edge_count());
      for (int j = 0; j < n; ++j) {
        int k_edge = g.half_edge_begin(j);
        for (int i : g.neighbors(j)) {
          const double r = k.wI(g.feature(i), g.feature(j));
          if (!std::isfinite(r) || r < 0.0) throw ModelError("infection rate is not finite and >= 0");
          out_rate[k_edge++] = r;
        }
      }
    } else if (!std::isfinite(*wI_const) || *wI_const < 0.0) {
      throw ModelError("infection rate is not finite and >= 0");
    }
  }

  double rate(int half_edge) const { return wI_const ? *wI_const : out_rate[half_edge]; }
};

void fill_pressure(EpidemicState& s, const SampledGraph& g, const GraphRates& rates) {
  const int n = g.size();
  s.pressure.assign(n, 0.0);
  s.infected_count = 0;
  s.total_recovery_rate = 0.0;
  s.total_infection_rate = 0.0;
  for (int j = 0; j < n; ++j) {
    if (s.states[j] != Health::Infected) continue;
    ++s.infected_count;
    s.total_recovery_rate += rates.gamma[j];
    int k = g.half_edge_begin(j);
    for (int i : g.neighbors(j)) s.pressure[i] += rates.rate(k++);
  }
  for (int i = 0; i < n; ++i)
    if (s.states[i] == Health::Susceptible) s.total_infection_rate += s.pressure[i];
}

class Engine {
 public:
  Engine(const SampledGraph& g, const KernelSpec& k, EpidemicState state, const SimConfig& cfg,
         Stream& rng)
      : g_(g), rates_(g, k), s_(std::move(state)), cfg_(cfg), rng_(rng), infect_(g.size()),
        recover_(g.size()), infected_nbrs_(g.size(), 0) {
    const int n = g.size();
    if (static_cast<int>(s_.states.size()) != n) throw std::invalid_argument("state size differs from graph size");
    if (cfg.mask && static_cast<int>(cfg.mask->size()) != n) throw std::invalid_argument("mask size differs from graph size");
    if (!(cfg.t_max > 0.0)) throw std::invalid_argument("t_max must be positive");
    for (double t : cfg.record_grid)
      if (t < 0.0 || t > cfg.t_max) throw std::invalid_argument("record time outside [0, t_max]");
    if (!std::is_sorted(cfg.record_grid.begin(), cfg.record_grid.end()))
      throw std::invalid_argument("record grid must be sorted");
    refresh();
  }

  Trajectory run() {
    Trajectory tr;
    const int n = g_.size();
    tr.n = n;
    tr.t_max = cfg_.t_max;
    tr.initial_states = s_.states;
    tr.events_retained = cfg_.retain_events;
    tr.grid = cfg_.record_grid;
    if (cfg_.mask) tr.mask_size = static_cast<int>(std::count(cfg_.mask->begin(), cfg_.mask->end(), 1));
    mask_count_ = 0;
    if (cfg_.mask)
      for (int i = 0; i < n; ++i) mask_count_ += (*cfg_.mask)[i] && s_.states[i] == Health::Infected;

    double t = 0.0;
    std::size_t next_grid = 0;
    bool steps_started = false;
    auto record_until = [&](double t_next) {
      // grid points in [t, t_next) see the current state
      while (next_grid < tr.grid.size() && tr.grid[next_grid] < t_next) {
        tr.u.push_back(static_cast<double>(s_.infected_count) / n);
        if (cfg_.mask) tr.v.push_back(tr.mask_size ? static_cast<double>(mask_count_) / tr.mask_size : 0.0);
        ++next_grid;
      }
    };
    auto push_step = [&](double time) {
      tr.step_time.push_back(time);
      tr.step_count.push_back(s_.infected_count);
      tr.step_mask_count.push_back(mask_count_);
    };
    if (cfg_.keep_steps_from <= 0.0) {
      push_step(0.0);
      steps_started = true;
    }

    std::int64_t since_audit = 0;
    while (true) {
      const double r_rec = recover_.total();
      const double r_inf = infect_.total();
      const double total = r_rec + r_inf;
      if (!std::isfinite(total)) throw ModelError("non-finite total event rate");
      if (s_.infected_count == 0 || total <= 0.0) break;  // absorbing
      const double t_next = t + rng_.exponential(total);
      if (t_next > cfg_.t_max) break;
      record_until(t_next);
      if (!steps_started && t_next >= cfg_.keep_steps_from) {
        push_step(cfg_.keep_steps_from);
        steps_started = true;
      }
      t = t_next;

      int vertex;
      EventKind kind;
      if (rng_.uniform() * total < r_rec) {
        vertex = pick(recover_);
        kind = EventKind::Recovery;
        recover(vertex);
      } else {
        vertex = pick(infect_);
        kind = EventKind::Infection;
        infect(vertex);
      }
      ++tr.event_count;
      if (cfg_.retain_events) tr.events.push_back({t, vertex, kind});
      if (steps_started) push_step(t);

      if (++since_audit >= cfg_.audit_interval) {
        since_audit = 0;
        tr.audit_max_deviation = std::max(tr.audit_max_deviation, audit());
        if (tr.audit_max_deviation > 1e-9) throw ModelError("rate audit failed: incremental rates drifted");
        refresh();
      }
    }
    record_until(std::nextafter(cfg_.t_max, INFINITY));
    if (!steps_started) push_step(cfg_.keep_steps_from);
    tr.end_time = s_.infected_count == 0 ? t : cfg_.t_max;
    return tr;
  }

 private:
  int pick(const RateTree& tree) {
    for (int attempt = 0; attempt < 64; ++attempt) {
      const auto i = tree.select(rng_.uniform() * tree.total());
      if (tree.weight(i) > 0.0) return static_cast<int>(i);
    }
    throw ModelError("event selection failed: rate tree inconsistent");
  }

  void infect(int i) {
    s_.states[i] = Health::Infected;
    ++s_.infected_count;
    if (cfg_.mask && (*cfg_.mask)[i]) ++mask_count_;
    infect_.set(i, 0.0);
    recover_.set(i, rates_.gamma[i]);
    int k = g_.half_edge_begin(i);
    for (int j : g_.neighbors(i)) {
      s_.pressure[j] += rates_.rate(k++);
      ++infected_nbrs_[j];
      if (s_.states[j] == Health::Susceptible) infect_.set(j, s_.pressure[j]);
    }
  }

  void recover(int i) {
    s_.states[i] = Health::Susceptible;
    --s_.infected_count;
    if (cfg_.mask && (*cfg_.mask)[i]) --mask_count_;
    recover_.set(i, 0.0);
    infect_.set(i, s_.pressure[i]);
    int k = g_.half_edge_begin(i);
    for (int j : g_.neighbors(i)) {
      s_.pressure[j] -= rates_.rate(k++);
      if (--infected_nbrs_[j] == 0) s_.pressure[j] = 0.0;
      if (s_.states[j] == Health::Susceptible) infect_.set(j, s_.pressure[j]);
    }
  }

  /// Largest relative deviation between maintained and recomputed rates.
  double audit() const {
    EpidemicState fresh;
    fresh.states = s_.states;
    fill_pressure(fresh, g_, rates_);
    double dev = 0.0;
    auto rel = [](double a, double b) {
      const double scale = std::max(std::abs(a), std::abs(b));
      return scale > 0.0 ? std::abs(a - b) / scale : 0.0;
    };
    for (std::size_t i = 0; i < fresh.pressure.size(); ++i) dev = std::max(dev, rel(fresh.pressure[i], s_.pressure[i]));
    dev = std::max(dev, rel(fresh.total_infection_rate, infect_.total()));
    dev = std::max(dev, rel(fresh.total_recovery_rate, recover_.total()));
    return dev;
  }

  void refresh() {
    fill_pressure(s_, g_, rates_);
    const int n = g_.size();
    std::fill(infected_nbrs_.begin(), infected_nbrs_.end(), 0);
    for (int j = 0; j < n; ++j) {
      if (s_.states[j] != Health::Infected) continue;
      for (int i : g_.neighbors(j)) ++infected_nbrs_[i];
    }
    for (int i = 0; i < n; ++i) {
      const bool inf = s_.states[i] == Health::Infected;
      infect_.set(i, inf ? 0.0 : s_.pressure[i]);
      recover_.set(i, inf ? rates_.gamma[i] : 0.0);
    }
    infect_.rebuild();
    recover_.rebuild();
  }

  const SampledGraph& g_;
  GraphRates rates_;
  EpidemicState s_;
  const SimConfig& cfg_;
  Stream& rng_;
  RateTree infect_;
  RateTree recover_;
  std::vector<int> infected_nbrs_;
  int mask_count_ = 0;
};

}  // namespace

std::vector<double> SimConfig::uniform_grid(double t_max, double step) {
  if (!(step > 0.0)) throw std::invalid_argument("grid step must be positive");
  std::vector<double> g;
  const auto count = static_cast<std::int64_t>(std::floor(t_max / step + 1e-9));
  // k / (1/step) keeps decimal steps such as 0.1 exact at every grid point
  const double per_unit = std::round(1.0 / step);
  const bool divides = std::abs(1.0 / step - per_unit) < 1e-9;
  for (std::int64_t k = 0; k <= count; ++k) {
    const double t = divides ? static_cast<double>(k) / per_unit : static_cast<double>(k) * step;
    g.push_back(std::min(t_max, t));
  }
  return g;
}

void recompute_rates(EpidemicState& state, const SampledGraph& graph, const KernelSpec& kernel) {
  fill_pressure(state, graph, GraphRates(graph, kernel));
}

EpidemicState init_state(const SampledGraph& graph, const KernelSpec& kernel, const PointFn& u0,
                         Stream& rng) {
  EpidemicState s;
  const int n = graph.size();
  s.states.resize(n);
  for (int i = 0; i < n; ++i) {
    const double p = u0(graph.feature(i));
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("initial infection probability outside [0,1]");
    s.states[i] = rng.uniform() < p ? Health::Infected : Health::Susceptible;
  }
  recompute_rates(s, graph, kernel);
  return s;
}

EpidemicState init_state(const SampledGraph& graph, const KernelSpec& kernel, double u0, Stream& rng) {
  if (!(u0 >= 0.0 && u0 <= 1.0)) throw std::invalid_argument("initial infection probability outside [0,1]");
  return init_state(graph, kernel, [u0](const Feature&) { return u0; }, rng);
}

Trajectory run(const SampledGraph& graph, const KernelSpec& kernel, EpidemicState state,
               const SimConfig& config, Stream& rng) {
  Engine engine(graph, kernel, std::move(state), config, rng);
  return engine.run();
}

double infected_fraction(const Trajectory& traj, double t, const std::optional<std::vector<char>>& mask) {
  if (t < 0.0 || t > traj.t_max) throw std::invalid_argument("time outside [0, t_max]");
  if (mask) {
    if (static_cast<int>(mask->size()) != traj.n) throw std::invalid_argument("mask size differs from n");
    const auto members = std::count(mask->begin(), mask->end(), 1);
    if (members == 0) throw std::invalid_argument("empty mask");
    if (!traj.events_retained) throw std::logic_error("masked evaluation needs the retained event log");
    auto states = traj.initial_states;
    for (const auto& e : traj.events) {
      if (e.time > t) break;
      states[e.vertex] = e.kind == EventKind::Infection ? Health::Infected : Health::Susceptible;
    }
    std::int64_t count = 0;
    for (int i = 0; i < traj.n; ++i) count += (*mask)[i] && states[i] == Health::Infected;
    return static_cast<double>(count) / static_cast<double>(members);
  }
  if (!traj.step_time.empty() && t >= traj.step_time.front()) {
    const auto k = std::upper_bound(traj.step_time.begin(), traj.step_time.end(), t) - traj.step_time.begin() - 1;
    return static_cast<double>(traj.step_count[k]) / traj.n;
  }
  if (!traj.events_retained) throw std::logic_error("time precedes the kept step series");
  auto count = std::count(traj.initial_states.begin(), traj.initial_states.end(), Health::Infected);
  for (const auto& e : traj.events) {
    if (e.time > t) break;
    count += e.kind == EventKind::Infection ? 1 : -1;
  }
  return static_cast<double>(count) / traj.n;
}

double masked_fraction(const Trajectory& traj, double t) {
  if (traj.mask_size == 0) throw std::invalid_argument("trajectory has no (non-empty) mask");
  if (traj.step_time.empty() || t < traj.step_time.front()) throw std::logic_error("time precedes the kept step series");
  const auto k = std::upper_bound(traj.step_time.begin(), traj.step_time.end(), t) - traj.step_time.begin() - 1;
  return static_cast<double>(traj.step_mask_count[k]) / traj.mask_size;
}

}  // namespace sisnet
