#pragma once

// Exact event-driven (Gillespie direct method) simulation of the SIS
// epidemic on a fixed graph.

#include <cstdint>
#include <optional>
#include <vector>

#include "sisnet/graph.hpp"
#include "sisnet/model.hpp"
#include "sisnet/rng.hpp"

namespace sisnet {

enum class Health : std::uint8_t { Susceptible = 0, Infected = 1 };

/// Per-vertex states plus the aggregate rates of the direct method.
struct EpidemicState {
  std::vector<Health> states;
  int infected_count = 0;
  /// lambda_i = sum over infected neighbours j of w_I(x_i, x_j).
  std::vector<double> pressure;
  double total_recovery_rate = 0.0;
  double total_infection_rate = 0.0;
};

/// Each vertex infected independently with probability u0(x_i).
EpidemicState init_state(const SampledGraph& graph, const KernelSpec& kernel, const PointFn& u0,
                         Stream& rng);
EpidemicState init_state(const SampledGraph& graph, const KernelSpec& kernel, double u0, Stream& rng);

/// Recomputes pressures and aggregate rates from the states.
void recompute_rates(EpidemicState& state, const SampledGraph& graph, const KernelSpec& kernel);

enum class EventKind : std::uint8_t { Infection = 0, Recovery = 1 };

struct Event {
  double time;
  int vertex;
  EventKind kind;
  friend bool operator==(const Event&, const Event&) = default;
};

struct SimConfig {
  double t_max = 80.0;
  std::vector<double> record_grid;
  /// Vertices whose infected fraction v(t) is tracked (giant component).
  std::optional<std::vector<char>> mask;
  /// Keep the per-vertex event log (small n).
  bool retain_events = false;
  /// The step series of infected counts is kept from this time on.
  double keep_steps_from = 0.0;
  /// Events between exact rate recomputations.
  std::int64_t audit_interval = 10000;

  static std::vector<double> uniform_grid(double t_max, double step);
};

struct Trajectory {
  int n = 0;
  double t_max = 0.0;
  std::vector<Health> initial_states;
  bool events_retained = false;
  std::vector<Event> events;

  std::vector<double> grid;
  std::vector<double> u;        // infected fraction at grid times
  std::vector<double> v;        // masked infected fraction; empty without mask
  int mask_size = 0;

  // Right-continuous step function of counts: value on [step_time[k], step_time[k+1]).
  std::vector<double> step_time;
  std::vector<int> step_count;
  std::vector<int> step_mask_count;

  std::int64_t event_count = 0;
  double audit_max_deviation = 0.0;
  double end_time = 0.0;  // time of absorption or t_max
};

/// Runs the epidemic from `state` until config.t_max or absorption.
/// Throws ModelError on non-finite rates or failed rate audits.
Trajectory run(const SampledGraph& graph, const KernelSpec& kernel, EpidemicState state,
               const SimConfig& config, Stream& rng);

/// Infected fraction at time t (right-continuous). With a mask, the
/// fraction is relative to the mask size and needs the retained event log.
double infected_fraction(const Trajectory& traj, double t,
                         const std::optional<std::vector<char>>& mask = std::nullopt);

/// Infected fraction within the config mask at time t, from the step series.
double masked_fraction(const Trajectory& traj, double t);

}  // namespace sisnet
