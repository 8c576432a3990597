#include "sisnet/graph.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "sisnet/io.hpp"

namespace sisnet {

Population sample_features(const FeatureSpace& space, const MeasureSpec& mu, int n, Stream& rng,
                           std::uint64_t source_seed) {
  if (n < 1) throw std::invalid_argument("population size must be >= 1");
  validate(space);
  validate(mu);
  Population pop;
  pop.n = n;
  pop.source_seed = source_seed;
  pop.features.reserve(n);

  if (const auto* ex = std::get_if<Explicit>(&space)) {
    if (std::holds_alternative<EmpiricalFromFeatures>(mu)) {
      if (static_cast<int>(ex->points.size()) != n)
        throw ModelError("explicit features: n must equal the number of points");
      pop.features = ex->points;
      return pop;
    }
    if (!std::holds_alternative<UniformOnSpace>(mu))
      throw ModelError("explicit feature space needs an empirical or uniform measure");
    for (int i = 0; i < n; ++i) pop.features.push_back(ex->points[rng.below(ex->points.size())]);
    return pop;
  }
  if (std::holds_alternative<EmpiricalFromFeatures>(mu))
    throw ModelError("empirical measure requires an explicit feature space");

  if (const auto* d = std::get_if<Discrete>(&space)) {
    if (const auto* dw = std::get_if<DiscreteWeights>(&mu)) {
      if (static_cast<int>(dw->weights.size()) != d->classes)
        throw ModelError("discrete weights length differs from class count");
      std::vector<double> cdf(dw->weights.size());
      double acc = 0.0;
      for (std::size_t q = 0; q < cdf.size(); ++q) cdf[q] = (acc += dw->weights[q]);
      for (int i = 0; i < n; ++i) {
        const double u = rng.uniform() * acc;
        auto q = std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin();
        if (q == static_cast<long>(cdf.size())) --q;
        // zero-weight classes can only be hit on an exact cdf boundary
        while (dw->weights[q] == 0.0 && q > 0) --q;
        while (dw->weights[q] == 0.0) ++q;
        pop.features.push_back({static_cast<double>(q)});
      }
    } else {
      for (int i = 0; i < n; ++i) pop.features.push_back({static_cast<double>(rng.below(d->classes))});
    }
    return pop;
  }

  if (!std::holds_alternative<UniformOnSpace>(mu))
    throw ModelError("continuous feature space needs the uniform measure");
  const int dim = dimension(space);
  for (int i = 0; i < n; ++i) {
    Feature x(dim);
    for (auto& c : x) c = rng.uniform();
    pop.features.push_back(std::move(x));
  }
  return pop;
}

SampledGraph::SampledGraph(Population pop, const std::vector<std::pair<int, int>>& edges)
    : population_(std::move(pop)) {
  const int n = population_.n;
  offsets_.assign(n + 1, 0);
  for (auto [a, b] : edges) {
    if (a < 0 || b < 0 || a >= n || b >= n) throw std::out_of_range("edge endpoint out of range");
    if (a == b) throw std::invalid_argument("self-loops are not allowed");
    ++offsets_[a + 1];
    ++offsets_[b + 1];
  }
  for (int i = 0; i < n; ++i) offsets_[i + 1] += offsets_[i];
  neighbors_.resize(offsets_[n]);
  std::vector<int> fill(offsets_.begin(), offsets_.end() - 1);
  for (auto [a, b] : edges) {
    neighbors_[fill[a]++] = b;
    neighbors_[fill[b]++] = a;
  }
  for (int i = 0; i < n; ++i) {
    auto first = neighbors_.begin() + offsets_[i];
    auto last = neighbors_.begin() + offsets_[i + 1];
    std::sort(first, last);
    if (std::adjacent_find(first, last) != last) throw std::invalid_argument("duplicate edge");
  }
  components_ = giant_component(n, offsets_, neighbors_);
}

bool SampledGraph::has_edge(int i, int j) const {
  auto nb = neighbors(i);
  return std::binary_search(nb.begin(), nb.end(), j);
}

SampledGraph sample_graph_with(const Population& pop, const KernelSpec& kernel, double p_max,
                               const SkipSource& skip, const ThinSource& thin) {
  if (p_max > 1.0) throw ModelError("w_E upper bound exceeds 1");
  std::vector<std::pair<int, int>> edges;
  const std::int64_t n = pop.n;
  if (p_max <= 0.0 || n < 2) return SampledGraph(pop, edges);
  const bool exact_constant = kernel.wE_const && *kernel.wE_const == p_max;

  // Pair (v, w) with w < v; position advances in the order (1,0),(2,0),(2,1),...
  std::int64_t v = 1, w = -1;
  while (v < n) {
    const std::uint64_t s = skip();
    if (s >= static_cast<std::uint64_t>(n) * static_cast<std::uint64_t>(n)) break;
    w += 1 + static_cast<std::int64_t>(s);
    while (w >= v && v < n) {
      w -= v;
      ++v;
    }
    if (v >= n) break;
    const int i = static_cast<int>(v), j = static_cast<int>(w);
    const double y = thin(i, j);
    const double e = exact_constant ? p_max : kernel.wE(pop.features[i], pop.features[j]);
    if (e > p_max * (1 + 1e-12)) throw ModelError("w_E exceeds the declared upper bound");
    if (y < e) edges.emplace_back(j, i);
  }
  return SampledGraph(pop, edges);
}

SampledGraph sample_graph(const Population& pop, const KernelSpec& kernel, Stream& rng) {
  const double p_max = kernel.wE_const ? *kernel.wE_const : kernel.wE_bound;
  return sample_graph_with(
      pop, kernel, p_max, [&] { return rng.geometric(p_max); },
      [&](int, int) { return rng.uniform() * p_max; });
}

SampledGraph sample_graph_naive(const Population& pop, const KernelSpec& kernel,
                                const std::function<double(int, int)>& pair_uniform_fn) {
  std::vector<std::pair<int, int>> edges;
  for (int v = 1; v < pop.n; ++v)
    for (int w = 0; w < v; ++w) {
      const double e = kernel.wE(pop.features[v], pop.features[w]);
      if (e > 1.0) throw ModelError("w_E exceeds 1");
      if (pair_uniform_fn(w, v) < e) edges.emplace_back(w, v);
    }
  return SampledGraph(pop, edges);
}

SampledGraph sample_graph_counter(const Population& pop, const KernelSpec& kernel, std::uint64_t key) {
  std::vector<std::pair<int, int>> edges;
  const bool constant = kernel.wE_const.has_value();
  const double c = constant ? *kernel.wE_const : 0.0;
  if (c > 1.0) throw ModelError("w_E exceeds 1");
  for (int v = 1; v < pop.n; ++v)
    for (int w = 0; w < v; ++w) {
      const double e = constant ? c : kernel.wE(pop.features[v], pop.features[w]);
      if (pair_uniform(key, w, v) < e) edges.emplace_back(w, v);
    }
  SampledGraph g(pop, edges);
  g.edge_key = key;
  return g;
}

Components giant_component(int n, const std::vector<int>& offsets, const std::vector<int>& neighbors) {
  Components c;
  c.label.assign(n, -1);
  std::vector<int> sizes;
  std::vector<int> queue;
  queue.reserve(n);
  for (int s = 0; s < n; ++s) {
    if (c.label[s] >= 0) continue;
    const int lab = static_cast<int>(sizes.size());
    queue.clear();
    queue.push_back(s);
    c.label[s] = lab;
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const int u = queue[head];
      for (int k = offsets[u]; k < offsets[u + 1]; ++k) {
        const int v = neighbors[k];
        if (c.label[v] < 0) {
          c.label[v] = lab;
          queue.push_back(v);
        }
      }
    }
    sizes.push_back(static_cast<int>(queue.size()));
  }
  c.giant_mask.assign(n, 0);
  if (n == 0) return c;
  // max_element returns the first maximum: the smallest label wins ties
  const int giant = static_cast<int>(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
  c.giant_size = sizes[giant];
  for (int i = 0; i < n; ++i) c.giant_mask[i] = c.label[i] == giant;
  return c;
}

double compute_Jn(const SampledGraph& graph, const PairFn& wI, bool ordered_pairs) {
  const int n = graph.size();
  if (n == 0) return 0.0;
  double total = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j : graph.neighbors(i)) total += wI(graph.feature(i), graph.feature(j));
  if (!ordered_pairs) total *= 0.5;
  return total / n;
}

void write_edge_list(std::ostream& out, const SampledGraph& graph, std::uint64_t seed) {
  out << "# n=" << graph.size() << " seed=" << seed << '\n';
  for (int i = 0; i < graph.size(); ++i)
    for (int j : graph.neighbors(i))
      if (i < j) out << i << ' ' << j << '\n';
}

void write_component_summary_header(std::ostream& out) {
  out << "n,edge_count,giant_size,giant_fraction\n";
}

void write_component_summary_row(std::ostream& out, const SampledGraph& graph) {
  out << graph.size() << ',' << graph.edge_count() << ',' << graph.giant_size() << ','
      << format_double(static_cast<double>(graph.giant_size()) / graph.size()) << '\n';
}

}  // namespace sisnet
