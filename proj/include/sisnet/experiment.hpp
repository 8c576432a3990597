#pragma once

// Experiment configuration, seed management and the scenario drivers
// behind the `sisnet` command line.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sisnet/model.hpp"
#include "sisnet/stats.hpp"

namespace sisnet {

/// Configuration problem; the message names the offending line when known.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  std::string scenario = "custom";
  std::string kernel = "constant";  // constant | sbm | geometric

  std::vector<int> n_list;
  std::vector<double> alpha_list;  // family scenarios: w_I^(n) = base_wI (n/n0)^-alpha
  std::vector<double> wI_list;     // fixed-w_I scenarios
  int runs = 1;
  double t_max = 80.0;
  double record_step = 0.1;
  Window window;
  double gamma = 0.7;
  double u0 = 1.0;
  bool write_trajectories = true;

  ScalingFamily family;
  std::optional<double> n_wE;  // w_E = n_wE / n instead of target_w / (n w_I)
  std::optional<double> wE;    // custom constant kernel
  std::optional<double> wI;

  // sbm: features are classes drawn from mu
  std::vector<std::vector<double>> sbm_wE;
  std::vector<std::vector<double>> sbm_wI;
  std::vector<double> sbm_gamma;
  std::vector<double> sbm_mu;
  std::vector<double> sbm_u0;

  // geometric on [0,1]: w_E = 1{|x-y| <= radius}
  double radius = 0.1;

  int quad_nodes = 256;
  double mf_dt = 0.01;

  std::string source_text;  // raw config, hashed into the manifest
};

/// Reads an INI-style key/value file: top-level `scenario`, sections
/// [model], [family], [run], [meanfield]. Scenario defaults are applied
/// first and overridden by explicit keys.
ExperimentConfig parse_config(const std::string& text, const std::string& origin = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path);

/// Throws ConfigError if the config cannot describe a run.
void validate(const ExperimentConfig& cfg);

/// One (n, parameter) point of a scenario grid with its kernel constants.
struct SweepPoint {
  int n = 0;
  std::optional<double> alpha;
  double wI = 0.0;
  double wE = 0.0;
  double param = 0.0;  // alpha for family scenarios, w_I otherwise
};

std::vector<SweepPoint> sweep_points(const ExperimentConfig& cfg);

/// Seed of replicate `run_index` at a point; distinct for distinct tuples.
std::uint64_t run_seed(std::uint64_t master, const std::string& scenario, const SweepPoint& point,
                       int run_index);

/// Kernel of a point: constant (w_E, w_I, gamma), sbm or geometric.
KernelSpec point_kernel(const ExperimentConfig& cfg, const SweepPoint& point);

/// Endemic level 1 - gamma/w for constant kernels; empty otherwise.
std::optional<double> point_u_star(const ExperimentConfig& cfg, const SweepPoint& point);

struct RunResult {
  SweepPoint point;
  int run_index = 0;
  std::uint64_t seed = 0;
  TemporalSummary summary;
  std::optional<double> u_star;
  int giant_size = 0;
  std::int64_t edges = 0;
  std::int64_t events = 0;
  double wall_seconds = 0.0;
  std::string trajectory_file;  // empty when not written
};

/// Samples a graph and runs one epidemic; writes the trajectory CSV into
/// `traj_dir` when given.
RunResult simulate_one(const ExperimentConfig& cfg, const SweepPoint& point, int run_index, std::uint64_t seed,
                       const std::optional<std::filesystem::path>& traj_dir = std::nullopt);

/// All replicates of all points, ordered by (point, run_index) regardless of
/// the number of worker threads.
std::vector<RunResult> run_simulations(const ExperimentConfig& cfg, std::uint64_t master_seed, int threads,
                                       const std::optional<std::filesystem::path>& traj_dir = std::nullopt);

struct CommandOptions {
  std::filesystem::path out_dir;
  std::uint64_t master_seed = 0;
  int threads = 1;
  bool oracle = false;
};

/// Each returns the process exit status.
int cmd_simulate(const ExperimentConfig& cfg, const CommandOptions& opt);
int cmd_meanfield(const ExperimentConfig& cfg, const CommandOptions& opt);
int cmd_couple(const ExperimentConfig& cfg, const CommandOptions& opt);
int cmd_sweep(const ExperimentConfig& cfg, const CommandOptions& opt);

inline constexpr int kCoupleMaxN = 20000;
inline constexpr const char* kVersion = "0.1.0";

}  // namespace sisnet
