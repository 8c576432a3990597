#include "sisnet/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <unordered_map>

#include <json.hpp>

#include "sisnet/io.hpp"
#include "sisnet/rate_tree.hpp"

namespace sisnet {

namespace {

constexpr bool infected(Health h) { return h == Health::Infected; }

void check_inputs(const SampledGraph& graph, const std::vector<Health>& initial, const CoupledConfig& config) {
  if (static_cast<int>(initial.size()) != graph.size()) throw std::invalid_argument("initial state size differs from n");
  if (!(config.t_max >= 0.0)) throw std::invalid_argument("t_max must be non-negative");
  for (double t : config.record_grid)
    if (t < 0.0 || t > config.t_max) throw std::invalid_argument("record time outside [0, t_max]");
  if (!std::is_sorted(config.record_grid.begin(), config.record_grid.end()))
    throw std::invalid_argument("record grid must be sorted");
}

std::vector<double> vertex_gamma(const SampledGraph& g, const KernelSpec& k) {
  std::vector<double> gamma(g.size());
  for (int i = 0; i < g.size(); ++i) {
    gamma[i] = k.gamma_const ? *k.gamma_const : k.gamma(g.feature(i));
    if (!std::isfinite(gamma[i]) || gamma[i] < 0.0) throw ModelError("recovery rate is not finite and >= 0");
  }
  return gamma;
}

double wI_of(const KernelSpec& k, const SampledGraph& g, int target, int source) {
  return k.wI_const ? *k.wI_const : k.wI(g.feature(target), g.feature(source));
}

double wE_of(const KernelSpec& k, const SampledGraph& g, int a, int b) {
  return k.wE_const ? *k.wE_const : k.wE(g.feature(a), g.feature(b));
}

/// Grid sampling shared by the simulators.
class Recorder {
 public:
  Recorder(CoupledRecord& rec, const CoupledConfig& cfg) : rec_(rec) {
    rec_.grid = cfg.record_grid;
  }

  void advance(double t_next, int disagree, int fog, int roots) {
    while (next_ < rec_.grid.size() && rec_.grid[next_] < t_next) {
      rec_.disagreement.push_back(static_cast<double>(disagree) / rec_.n);
      rec_.fog_fraction.push_back(static_cast<double>(fog) / rec_.n);
      rec_.roots.push_back(roots);
      ++next_;
    }
  }

 private:
  CoupledRecord& rec_;
  std::size_t next_ = 0;
};

/// State of the coupled pair plus fog, updated arrow by arrow.
class CoupledCore {
 public:
  CoupledCore(std::vector<double> gamma, const std::vector<Health>& initial, const CoupledConfig& cfg,
              CoupledRecord& rec)
      : gamma_(std::move(gamma)), orig_(initial), coup_(initial), fog_(initial.size(), 0),
        union_(initial.size()), rec_(rec), cfg_(cfg), recorder_(rec, cfg) {
    for (std::size_t i = 0; i < initial.size(); ++i) {
      if (infected(initial[i])) {
        ++inf_orig_;
        ++inf_coup_;
        union_.set(i, gamma_[i]);
      }
    }
  }

  RateTree& union_tree() { return union_; }

  void advance(double t_next) { recorder_.advance(t_next, disagree_, fog_count_, roots_); }

  /// Arrow j -> i activated for eta (C) and/or eta~ (Ct). `pair_count` is
  /// the arrow count of the pair after this arrow (0 when not tracked).
  void arrow(double t, int j, int i, bool C, bool Ct, bool on_edge, int pair_count) {
    ++rec_.arrows;
    const bool before = orig_[i] != coup_[i];
    if (!fog_[i]) {
      if (Ct && fog_[j]) {
        enter_fog(t, i, CoupledEventKind::FogChild);
      } else if (C != Ct) {
        if (on_edge && pair_count < 2) ++rec_.root_gating_violations;
        ++roots_;
        enter_fog(t, i, CoupledEventKind::FogRoot);
      }
    }
    const bool inf_o = C && infected(orig_[j]) && !infected(orig_[i]);
    const bool inf_c = Ct && infected(coup_[j]) && !infected(coup_[i]);
    if (inf_o) {
      orig_[i] = Health::Infected;
      ++inf_orig_;
      log(t, i, CoupledEventKind::InfectOriginal);
    }
    if (inf_c) {
      coup_[i] = Health::Infected;
      ++inf_coup_;
      log(t, i, CoupledEventKind::InfectCoupled);
    }
    if (inf_o || inf_c) {
      union_.set(i, gamma_[i]);
      settle(i, before);
    }
  }

  void recovery(double t, int i) {
    const bool before = orig_[i] != coup_[i];
    bool changed = false;
    if (infected(orig_[i])) {
      orig_[i] = Health::Susceptible;
      --inf_orig_;
      log(t, i, CoupledEventKind::RecoverOriginal);
      changed = true;
    }
    if (infected(coup_[i])) {
      coup_[i] = Health::Susceptible;
      --inf_coup_;
      log(t, i, CoupledEventKind::RecoverCoupled);
      changed = true;
    }
    if (changed) {
      union_.set(i, 0.0);
      settle(i, before);
    }
  }

  void finish() {
    advance(std::nextafter(cfg_.t_max, INFINITY));
    rec_.fog_final = fog_count_;
    rec_.roots_final = roots_;
    rec_.infected_original_final = inf_orig_;
    rec_.infected_coupled_final = inf_coup_;
  }

 private:
  void enter_fog(double t, int i, CoupledEventKind kind) {
    fog_[i] = 1;
    ++fog_count_;
    log(t, i, kind);
  }

  void settle(int i, bool before) {
    const bool after = orig_[i] != coup_[i];
    disagree_ += static_cast<int>(after) - static_cast<int>(before);
    if (after && !fog_[i]) ++rec_.domination_violations;
    rec_.sup_disagreement_count = std::max(rec_.sup_disagreement_count, disagree_);
  }

  void log(double t, int i, CoupledEventKind kind) {
    if (cfg_.retain_events) rec_.events.push_back({t, i, kind});
  }

  std::vector<double> gamma_;
  std::vector<Health> orig_;
  std::vector<Health> coup_;
  std::vector<char> fog_;
  RateTree union_;
  CoupledRecord& rec_;
  const CoupledConfig& cfg_;
  Recorder recorder_;
  int inf_orig_ = 0;
  int inf_coup_ = 0;
  int disagree_ = 0;
  int fog_count_ = 0;
  int roots_ = 0;
};

std::uint64_t pair_key(int a, int b) {
  const auto lo = static_cast<std::uint64_t>(std::min(a, b));
  const auto hi = static_cast<std::uint64_t>(std::max(a, b));
  return (hi << 32) | lo;
}

void check_edge_key(const SampledGraph& graph, const KernelSpec& kernel, Stream& rng) {
  if (!graph.edge_key) throw ModelError("coupling needs a graph sampled from counter-based edge uniforms");
  const int n = graph.size();
  if (n < 2) return;
  Stream probe(derive_seed(*graph.edge_key, 0xc0ffeeULL));
  (void)rng;
  for (int s = 0; s < 1000; ++s) {
    const int i = static_cast<int>(probe.below(n));
    int j = static_cast<int>(probe.below(n - 1));
    if (j >= i) ++j;
    const bool from_v = pair_uniform(*graph.edge_key, i, j) < wE_of(kernel, graph, i, j);
    if (from_v != graph.has_edge(i, j))
      throw ModelError("counter-based edge uniforms disagree with the stored adjacency");
  }
}

}  // namespace

CoupledRecord run_coupled(const SampledGraph& graph, const KernelSpec& kernel,
                          const std::vector<Health>& initial, const CoupledConfig& config, Stream& rng) {
  check_inputs(graph, initial, config);
  check_edge_key(graph, kernel, rng);
  const int n = graph.size();
  CoupledRecord rec;
  rec.n = n;
  rec.t_max = config.t_max;
  CoupledCore core(vertex_gamma(graph, kernel), initial, config, rec);

  // Edge arrows: one stream per half-edge (j -> i), rate w_I(x_i, x_j).
  const int half_edges = graph.half_edge_count();
  const auto& nbr = graph.flat_neighbors();
  std::vector<int> owner(half_edges), partner(half_edges);
  for (int j = 0; j < n; ++j)
    for (int k = graph.half_edge_begin(j); k < graph.half_edge_begin(j) + graph.degree(j); ++k) owner[k] = j;
  for (int k = 0; k < half_edges; ++k) {
    const int i = nbr[k];
    auto nb = graph.neighbors(i);
    partner[k] = graph.half_edge_begin(i) + static_cast<int>(std::lower_bound(nb.begin(), nb.end(), owner[k]) - nb.begin());
  }
  std::vector<double> edge_cdf;
  double rate_edges = 0.0;
  if (kernel.wI_const) {
    rate_edges = *kernel.wI_const * half_edges;
  } else {
    edge_cdf.resize(half_edges);
    for (int k = 0; k < half_edges; ++k) edge_cdf[k] = (rate_edges += wI_of(kernel, graph, nbr[k], owner[k]));
  }
  std::vector<int> pair_count(half_edges, 0);

  // Activated non-edge arrows: candidates thinned from n(n-1) sup(w_I w_E).
  const double m_bound = kernel.wIE_bound;
  const bool exact_bound = kernel.wI_const && kernel.wE_const;
  const double rate_nonedge = n >= 2 ? static_cast<double>(n) * (n - 1) * m_bound : 0.0;
  std::unordered_map<std::uint64_t, double> first_arrival;

  double t = 0.0;
  while (true) {
    const double rate_rec = core.union_tree().total();
    const double total = rate_rec + rate_edges + rate_nonedge;
    if (!std::isfinite(total)) throw ModelError("non-finite coupled event rate");
    if (total <= 0.0) break;
    const double t_next = t + rng.exponential(total);
    if (t_next > config.t_max) break;
    core.advance(t_next);
    t = t_next;
    const double u = rng.uniform() * total;
    if (u < rate_rec) {
      const auto& tree = core.union_tree();
      const auto i = tree.select(rng.uniform() * tree.total());
      if (tree.weight(i) > 0.0) core.recovery(t, static_cast<int>(i));
    } else if (u < rate_rec + rate_edges) {
      int k;
      if (kernel.wI_const) {
        k = static_cast<int>(rng.below(half_edges));
      } else {
        k = static_cast<int>(std::upper_bound(edge_cdf.begin(), edge_cdf.end(), rng.uniform() * rate_edges) -
                             edge_cdf.begin());
        k = std::min(k, half_edges - 1);
      }
      const int j = owner[k], i = nbr[k];
      const int count = ++pair_count[std::min(k, partner[k])];
      const bool coupled_active = count == 1 || rng.uniform() < wE_of(kernel, graph, i, j);
      core.arrow(t, j, i, true, coupled_active, true, count);
    } else {
      const int j = static_cast<int>(rng.below(n));
      int i = static_cast<int>(rng.below(n - 1));
      if (i >= j) ++i;
      if (!exact_bound) {
        const double r = wI_of(kernel, graph, i, j) * wE_of(kernel, graph, i, j);
        if (!(rng.uniform() * m_bound < r)) continue;
      }
      if (graph.has_edge(i, j)) continue;
      auto [it, fresh] = first_arrival.try_emplace(pair_key(i, j), 0.0);
      if (fresh) {
        const double pair_rate = wI_of(kernel, graph, i, j) + wI_of(kernel, graph, j, i);
        it->second = rng.exponential(pair_rate);
      }
      if (t < it->second) continue;
      core.arrow(t, j, i, false, true, false, 0);
    }
  }
  core.finish();
  return rec;
}

ArrowTable make_arrow_table(const SampledGraph& graph, const KernelSpec& kernel, double t_max, Stream& rng) {
  if (!graph.edge_key) throw ModelError("arrow table needs a graph sampled from counter-based edge uniforms");
  const int n = graph.size();
  ArrowTable table;
  table.t_max = t_max;
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b) {
      const double into_a = wI_of(kernel, graph, a, b);
      const double into_b = wI_of(kernel, graph, b, a);
      const double total = into_a + into_b;
      if (!(total > 0.0)) continue;
      double t = 0.0;
      for (int index = 1;; ++index) {
        t += rng.exponential(total);
        if (t > t_max) break;
        const bool to_a = rng.uniform() * total < into_a;
        const double mark = index == 1 ? pair_uniform(*graph.edge_key, a, b) : rng.uniform();
        table.arrows.push_back({t, to_a ? b : a, to_a ? a : b, index, mark});
      }
    }
  const auto gamma = vertex_gamma(graph, kernel);
  for (int i = 0; i < n; ++i) {
    if (!(gamma[i] > 0.0)) continue;
    for (double t = rng.exponential(gamma[i]); t <= t_max; t += rng.exponential(gamma[i]))
      table.recoveries.emplace_back(t, i);
  }
  std::sort(table.arrows.begin(), table.arrows.end(),
            [](const TableArrow& x, const TableArrow& y) { return x.time < y.time; });
  std::sort(table.recoveries.begin(), table.recoveries.end());
  return table;
}

namespace {

/// Visits recoveries and arrows of a table in time order.
template <class OnRecovery, class OnArrow>
void replay(const ArrowTable& table, double t_max, OnRecovery&& on_recovery, OnArrow&& on_arrow) {
  std::size_t a = 0, r = 0;
  while (a < table.arrows.size() || r < table.recoveries.size()) {
    const bool take_recovery =
        r < table.recoveries.size() && (a == table.arrows.size() || table.recoveries[r].first < table.arrows[a].time);
    const double t = take_recovery ? table.recoveries[r].first : table.arrows[a].time;
    if (t > t_max) break;
    if (take_recovery)
      on_recovery(table.recoveries[r++]);
    else
      on_arrow(table.arrows[a++]);
  }
}

}  // namespace

CoupledRecord run_coupled_table(const SampledGraph& graph, const KernelSpec& kernel,
                                const std::vector<Health>& initial, const CoupledConfig& config,
                                const ArrowTable& table) {
  check_inputs(graph, initial, config);
  if (table.t_max < config.t_max) throw std::invalid_argument("arrow table shorter than t_max");
  CoupledRecord rec;
  rec.n = graph.size();
  rec.t_max = config.t_max;
  CoupledCore core(vertex_gamma(graph, kernel), initial, config, rec);
  replay(
      table, config.t_max,
      [&](const std::pair<double, int>& r) {
        core.advance(r.first);
        if (core.union_tree().weight(r.second) > 0.0) core.recovery(r.first, r.second);
      },
      [&](const TableArrow& a) {
        const bool edge = graph.has_edge(a.source, a.target);
        const double e = wE_of(kernel, graph, a.target, a.source);
        if (edge) {
          core.advance(a.time);
          core.arrow(a.time, a.source, a.target, true, a.index == 1 || a.mark < e, true, a.index);
        } else if (a.index >= 2 && a.mark < e) {
          core.advance(a.time);
          core.arrow(a.time, a.source, a.target, false, true, false, a.index);
        }
      });
  core.finish();
  return rec;
}

CoupledRecord brute_force_coupled(const SampledGraph& graph, const KernelSpec& kernel,
                                  const std::vector<Health>& initial, const CoupledConfig& config,
                                  const ArrowTable& table) {
  const int n = graph.size();
  if (n > 64) throw std::invalid_argument("brute-force coupling is limited to n <= 64");
  check_inputs(graph, initial, config);
  if (!graph.edge_key) throw ModelError("brute force needs counter-based edge uniforms");
  if (table.t_max < config.t_max) throw std::invalid_argument("arrow table shorter than t_max");

  CoupledRecord rec;
  rec.n = n;
  rec.t_max = config.t_max;
  rec.grid = config.record_grid;
  std::vector<Health> E = initial, Et = initial;
  std::vector<char> xi(n, 0);
  int roots = 0;
  std::size_t next_grid = 0;
  auto count_disagree = [&] {
    int d = 0;
    for (int i = 0; i < n; ++i) d += E[i] != Et[i];
    return d;
  };
  auto count_fog = [&] { return static_cast<int>(std::count(xi.begin(), xi.end(), 1)); };
  auto sample_until = [&](double t_next) {
    while (next_grid < rec.grid.size() && rec.grid[next_grid] < t_next) {
      rec.disagreement.push_back(static_cast<double>(count_disagree()) / n);
      rec.fog_fraction.push_back(static_cast<double>(count_fog()) / n);
      rec.roots.push_back(roots);
      ++next_grid;
    }
  };
  auto log = [&](double t, int i, CoupledEventKind kind) {
    if (config.retain_events) rec.events.push_back({t, i, kind});
  };
  auto after_event = [&] {
    for (int i = 0; i < n; ++i)
      if (E[i] != Et[i] && !xi[i]) ++rec.domination_violations;
    rec.sup_disagreement_count = std::max(rec.sup_disagreement_count, count_disagree());
  };

  replay(
      table, config.t_max,
      [&](const std::pair<double, int>& r) {
        sample_until(r.first);
        const int i = r.second;
        // A and A~: the shared candidate recovers each copy where it is infected
        const bool A = E[i] == Health::Infected;
        const bool At = Et[i] == Health::Infected;
        if (A) {
          E[i] = Health::Susceptible;
          log(r.first, i, CoupledEventKind::RecoverOriginal);
        }
        if (At) {
          Et[i] = Health::Susceptible;
          log(r.first, i, CoupledEventKind::RecoverCoupled);
        }
        after_event();
      },
      [&](const TableArrow& a) {
        sample_until(a.time);
        const int i = a.target, j = a.source;
        const double wE = wE_of(kernel, graph, i, j);
        const double V1 = pair_uniform(*graph.edge_key, i, j);
        const bool C = V1 < wE;
        const bool Ct = (a.index == 1 ? V1 : a.mark) < wE;
        const bool H_prop = !xi[i] && Ct && xi[j];
        const bool H_xor = !xi[i] && (C != Ct);
        const bool H_root = !H_prop && H_xor;
        const bool B = C && E[i] == Health::Susceptible && E[j] == Health::Infected;
        const bool Bt = Ct && Et[i] == Health::Susceptible && Et[j] == Health::Infected;
        if (C || Ct) ++rec.arrows;
        if (H_root) {
          xi[i] = 1;
          ++roots;
          if (C && a.index < 2) ++rec.root_gating_violations;
          log(a.time, i, CoupledEventKind::FogRoot);
        } else if (H_prop) {
          xi[i] = 1;
          log(a.time, i, CoupledEventKind::FogChild);
        }
        if (B) {
          E[i] = Health::Infected;
          log(a.time, i, CoupledEventKind::InfectOriginal);
        }
        if (Bt) {
          Et[i] = Health::Infected;
          log(a.time, i, CoupledEventKind::InfectCoupled);
        }
        after_event();
      });
  sample_until(std::nextafter(config.t_max, INFINITY));
  rec.fog_final = count_fog();
  rec.roots_final = roots;
  rec.infected_original_final = static_cast<int>(std::count(E.begin(), E.end(), Health::Infected));
  rec.infected_coupled_final = static_cast<int>(std::count(Et.begin(), Et.end(), Health::Infected));
  return rec;
}

CoupledRecord brute_force_coupled(const SampledGraph& graph, const KernelSpec& kernel,
                                  const std::vector<Health>& initial, const CoupledConfig& config, Stream& rng) {
  if (graph.size() > 64) throw std::invalid_argument("brute-force coupling is limited to n <= 64");
  return brute_force_coupled(graph, kernel, initial, config, make_arrow_table(graph, kernel, config.t_max, rng));
}

double coupling_constant(double T, double C_w) {
  return 4.0 * T * std::max(T, 1.0) * C_w * std::exp(C_w * T);
}

BoundReport coupling_bound_report(const std::vector<CoupledRecord>& records, const KernelSpec& kernel,
                                  const std::vector<Feature>& features) {
  if (records.size() < 10) throw std::invalid_argument("bound report needs at least 10 records");
  BoundReport r;
  r.n = records.front().n;
  r.T = records.front().t_max;
  for (const auto& rec : records)
    if (rec.n != r.n || rec.t_max != r.T) throw std::invalid_argument("records mix different n or T");
  r.In = compute_In(features, kernel);
  r.C_w = static_cast<double>(r.n) * kernel.wIE_bound;
  r.C_T = coupling_constant(r.T, r.C_w);
  const double m = static_cast<double>(records.size());
  double sum = 0.0, sum_sq = 0.0, fog = 0.0;
  for (const auto& rec : records) {
    const double s = rec.sup_disagreement();
    sum += s;
    sum_sq += s * s;
    fog += static_cast<double>(rec.fog_final) / rec.n;
    r.domination_violations += rec.domination_violations;
  }
  r.mean_sup_d = sum / m;
  const double var = std::max(0.0, (sum_sq - m * r.mean_sup_d * r.mean_sup_d) / (m - 1.0));
  r.stderr_sup_d = std::sqrt(var / m);
  r.mean_fog_fraction = fog / m;
  r.ratio_to_In = r.In > 0.0 ? r.mean_sup_d / r.In : 0.0;
  const double bound = r.C_T * r.In;
  r.bound_checked = bound < 1.0;
  r.bound_satisfied = r.mean_sup_d <= bound;
  return r;
}

std::string to_json(const BoundReport& r) {
  nlohmann::ordered_json j;
  j["n"] = r.n;
  j["T"] = r.T;
  j["I_n"] = r.In;
  j["C_w"] = r.C_w;
  j["C_T"] = r.C_T;
  j["mean_sup_d"] = r.mean_sup_d;
  j["stderr"] = r.stderr_sup_d;
  j["mean_fog_fraction"] = r.mean_fog_fraction;
  j["ratio_to_I_n"] = r.ratio_to_In;
  j["bound_checked"] = r.bound_checked;
  j["bound_satisfied"] = r.bound_satisfied;
  j["domination_violations"] = r.domination_violations;
  return j.dump(2);
}

void write_coupled_csv(std::ostream& out, const CoupledRecord& record) {
  out << "t,disagreement,fog_fraction,roots,tv_full_mass\n";
  for (std::size_t k = 0; k < record.grid.size(); ++k)
    out << format_double(record.grid[k]) << ',' << format_double(record.disagreement[k]) << ','
        << format_double(record.fog_fraction[k]) << ',' << record.roots[k] << ','
        << format_double(2.0 * record.disagreement[k]) << '\n';
}

}  // namespace sisnet
