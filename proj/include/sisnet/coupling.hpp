#pragma once

// Coupled pair (eta, eta~) driven by shared Poisson arrows, where eta~ lives
// on the complete graph with infection rate w_E * w_I, together with the
// fog process that dominates the set of vertices where the two disagree.
//
// Arrows j -> i arrive at rate w_I(x_i, x_j). An arrow is activated for eta
// iff {i,j} is an edge (V_1(i,j) < w_E). For eta~ the first arrow between i
// and j (either direction) reuses V_1; every later one draws a fresh V_l.
// A vertex outside the fog enters it as a child when an arrow activated
// for eta~ comes from a foggy source, and as a root when the arrow is
// activated for exactly one of the two processes.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sisnet/graph.hpp"
#include "sisnet/model.hpp"
#include "sisnet/rng.hpp"
#include "sisnet/sis.hpp"

namespace sisnet {

enum class CoupledEventKind : std::uint8_t {
  FogRoot = 0,
  FogChild = 1,
  InfectOriginal = 2,
  InfectCoupled = 3,
  RecoverOriginal = 4,
  RecoverCoupled = 5,
};

struct CoupledEvent {
  double time;
  int vertex;
  CoupledEventKind kind;
  friend bool operator==(const CoupledEvent&, const CoupledEvent&) = default;
};

struct CoupledConfig {
  double t_max = 80.0;
  std::vector<double> record_grid;
  bool retain_events = false;
};

struct CoupledRecord {
  int n = 0;
  double t_max = 0.0;
  std::vector<double> grid;
  std::vector<double> disagreement;  // (1/n) #{i : E_i != E~_i}
  std::vector<double> fog_fraction;  // Xi_t / n
  std::vector<int> roots;            // |R_t|

  int sup_disagreement_count = 0;  // max over event times
  int fog_final = 0;
  int roots_final = 0;
  int infected_original_final = 0;
  int infected_coupled_final = 0;

  std::int64_t domination_violations = 0;  // events with E_i != E~_i and xi_i = 0
  std::int64_t root_gating_violations = 0;  // edge roots created on a first arrow
  std::int64_t arrows = 0;                  // activated arrows processed
  std::vector<CoupledEvent> events;

  double sup_disagreement() const { return n ? static_cast<double>(sup_disagreement_count) / n : 0.0; }
};

/// Aggregate-stream simulation: shared recoveries, every arrow on an edge,
/// and activated non-edge arrows found by thinning a global candidate
/// stream and gating with a lazily drawn first-arrival time per pair.
/// The graph must carry its counter-based edge key; 10^3 random pairs are
/// checked against the adjacency at startup (ModelError on mismatch).
CoupledRecord run_coupled(const SampledGraph& graph, const KernelSpec& kernel,
                          const std::vector<Health>& initial, const CoupledConfig& config, Stream& rng);

/// One arrow of a pair's explicit arrow sequence.
struct TableArrow {
  double time;
  int source;
  int target;
  int index;    // position l >= 1 in the pair's arrow sequence
  double mark;  // V_l; V_1 is the graph's counter-based pair uniform
};

/// Explicit realisation of every arrow and recovery candidate up to t_max.
struct ArrowTable {
  double t_max = 0.0;
  std::vector<TableArrow> arrows;                 // sorted by time
  std::vector<std::pair<double, int>> recoveries;  // (time, vertex), sorted
};

/// Every unordered pair gets a Poisson arrow sequence of rate
/// w_I(x_i,x_j) + w_I(x_j,x_i); every vertex a recovery clock of rate gamma.
ArrowTable make_arrow_table(const SampledGraph& graph, const KernelSpec& kernel, double t_max, Stream& rng);

/// The optimized event logic driven by an explicit table: only activated
/// arrows reach it, with activation flags precomputed.
CoupledRecord run_coupled_table(const SampledGraph& graph, const KernelSpec& kernel,
                                const std::vector<Health>& initial, const CoupledConfig& config,
                                const ArrowTable& table);

/// Reference simulation: every arrow of every ordered pair, activation
/// events and fog rules evaluated literally. Refuses n > 64.
CoupledRecord brute_force_coupled(const SampledGraph& graph, const KernelSpec& kernel,
                                  const std::vector<Health>& initial, const CoupledConfig& config,
                                  const ArrowTable& table);
CoupledRecord brute_force_coupled(const SampledGraph& graph, const KernelSpec& kernel,
                                  const std::vector<Health>& initial, const CoupledConfig& config, Stream& rng);

struct BoundReport {
  int n = 0;
  double T = 0.0;
  double In = 0.0;
  double C_w = 0.0;
  double C_T = 0.0;
  double mean_sup_d = 0.0;
  double stderr_sup_d = 0.0;
  double mean_fog_fraction = 0.0;
  double ratio_to_In = 0.0;
  bool bound_checked = false;  // C_T * I_n < 1; otherwise the bound is vacuous
  bool bound_satisfied = false;
  std::int64_t domination_violations = 0;
};

/// C_T = 4 T (T v 1) C_w e^{C_w T}.
double coupling_constant(double T, double C_w);

/// Mean and standard error of sup_t d(t) over at least 10 records, compared
/// with C_T * I_n(w_I ^ 1), C_w = n sup(w_E w_I).
BoundReport coupling_bound_report(const std::vector<CoupledRecord>& records, const KernelSpec& kernel,
                                  const std::vector<Feature>& features);

std::string to_json(const BoundReport& report);

/// Header "t,disagreement,fog_fraction,roots,tv_full_mass".
void write_coupled_csv(std::ostream& out, const CoupledRecord& record);

}  // namespace sisnet
