#pragma once

// Feature sampling, W-random graphs and component analysis.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "sisnet/model.hpp"
#include "sisnet/rng.hpp"

namespace sisnet {

struct Population {
  int n = 0;
  std::vector<Feature> features;
  std::uint64_t source_seed = 0;
};

Population sample_features(const FeatureSpace& space, const MeasureSpec& mu, int n, Stream& rng,
                           std::uint64_t source_seed = 0);

struct Components {
  int giant_size = 0;
  std::vector<int> label;      // labels ordered by smallest member vertex
  std::vector<char> giant_mask;
};

class SampledGraph {
 public:
  SampledGraph() = default;

  /// Builds from an undirected edge list. Self-loops and duplicates are rejected.
  SampledGraph(Population pop, const std::vector<std::pair<int, int>>& edges);

  int size() const { return population_.n; }
  const Population& population() const { return population_; }
  const Feature& feature(int i) const { return population_.features[i]; }

  std::span<const int> neighbors(int i) const {
    return {neighbors_.data() + offsets_[i], neighbors_.data() + offsets_[i + 1]};
  }
  int degree(int i) const { return offsets_[i + 1] - offsets_[i]; }
  /// Index of the first half-edge of i in the flat neighbor array.
  int half_edge_begin(int i) const { return offsets_[i]; }
  int half_edge_count() const { return static_cast<int>(neighbors_.size()); }
  const std::vector<int>& flat_neighbors() const { return neighbors_; }

  bool has_edge(int i, int j) const;
  std::int64_t edge_count() const { return static_cast<std::int64_t>(neighbors_.size()) / 2; }

  const Components& components() const { return components_; }
  int giant_size() const { return components_.giant_size; }

  /// Key of the counter-based per-pair uniforms the graph was drawn from, if any.
  std::optional<std::uint64_t> edge_key;

 private:
  Population population_;
  std::vector<int> offsets_;
  std::vector<int> neighbors_;
  Components components_;
};

/// Supplies the next candidate pair of the constant-p_max fast path as a
/// skip count over the pair sequence (1,0), (2,0), (2,1), (3,0), ...
using SkipSource = std::function<std::uint64_t()>;
/// Returns a variate uniform on [0, p_max) for a candidate pair; the pair
/// becomes an edge iff the variate is below w_E(x_i, x_j).
using ThinSource = std::function<double(int i, int j)>;

/// Skip-and-thin sampler driven by explicit randomness sources.
SampledGraph sample_graph_with(const Population& pop, const KernelSpec& kernel, double p_max,
                               const SkipSource& skip, const ThinSource& thin);

/// Each pair {i,j} is an edge independently with probability w_E(x_i, x_j).
SampledGraph sample_graph(const Population& pop, const KernelSpec& kernel, Stream& rng);

/// Same law, with V(i,j) = pair_uniform(key, i, j) and edge iff V(i,j) < w_E(x_i,x_j).
/// O(n^2); lets the coupling reconstruct first-arrow indicators.
SampledGraph sample_graph_counter(const Population& pop, const KernelSpec& kernel, std::uint64_t key);

/// Naive O(n^2) Bernoulli loop over a caller-provided uniform V(i,j).
SampledGraph sample_graph_naive(const Population& pop, const KernelSpec& kernel,
                                const std::function<double(int, int)>& pair_uniform_fn);

/// Breadth-first labelling; the giant component is the largest, ties going
/// to the component with the smallest vertex index.
Components giant_component(int n, const std::vector<int>& offsets, const std::vector<int>& neighbors);

/// (1/n) sum over ordered adjacent pairs of w_I(x_i, x_j); halved when
/// `ordered_pairs` is false.
double compute_Jn(const SampledGraph& graph, const PairFn& wI, bool ordered_pairs = true);

void write_edge_list(std::ostream& out, const SampledGraph& graph, std::uint64_t seed);

/// Header "n,edge_count,giant_size,giant_fraction".
void write_component_summary_header(std::ostream& out);
void write_component_summary_row(std::ostream& out, const SampledGraph& graph);

}  // namespace sisnet
