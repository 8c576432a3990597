#include "sisnet/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sisnet/rng.hpp"

namespace sisnet {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

double distance(const Feature& x, const Feature& y) {
  double s = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) s += (x[k] - y[k]) * (x[k] - y[k]);
  return std::sqrt(s);
}

void finalize(KernelSpec& k) {
  if (k.wE_const && k.wI_const)
    k.wIE_bound = *k.wE_const * *k.wI_const;
  else
    k.wIE_bound = k.wE_bound * k.wI_bound;
}

Feature random_point(const FeatureSpace& space, Stream& rng) {
  return std::visit(overloaded{
                        [&](const Interval01&) { return Feature{rng.uniform()}; },
                        [&](const Hypercube& h) {
                          Feature x(h.dim);
                          for (auto& c : x) c = rng.uniform();
                          return x;
                        },
                        [&](const Discrete& d) {
                          return Feature{static_cast<double>(rng.below(d.classes))};
                        },
                        [&](const Explicit& e) { return e.points[rng.below(e.points.size())]; },
                    },
                    space);
}

}  // namespace

void validate(const FeatureSpace& space) {
  std::visit(overloaded{
                 [](const Interval01&) {},
                 [](const Hypercube& h) {
                   if (h.dim < 1) throw ModelError("hypercube dimension must be >= 1");
                 },
                 [](const Discrete& d) {
                   if (d.classes < 1) throw ModelError("discrete class count must be >= 1");
                 },
                 [](const Explicit& e) {
                   if (e.points.empty()) throw ModelError("explicit point list is empty");
                 },
             },
             space);
}

bool contains(const FeatureSpace& space, const Feature& x) {
  auto in01 = [](double v) { return v >= 0.0 && v <= 1.0; };
  return std::visit(overloaded{
                        [&](const Interval01&) { return x.size() == 1 && in01(x[0]); },
                        [&](const Hypercube& h) {
                          return static_cast<int>(x.size()) == h.dim &&
                                 std::all_of(x.begin(), x.end(), in01);
                        },
                        [&](const Discrete& d) {
                          return x.size() == 1 && x[0] >= 0 && x[0] < d.classes &&
                                 x[0] == std::floor(x[0]);
                        },
                        [&](const Explicit& e) {
                          return std::find(e.points.begin(), e.points.end(), x) != e.points.end();
                        },
                    },
                    space);
}

int dimension(const FeatureSpace& space) {
  return std::visit(overloaded{
                        [](const Interval01&) { return 1; },
                        [](const Hypercube& h) { return h.dim; },
                        [](const Discrete&) { return 1; },
                        [](const Explicit& e) { return static_cast<int>(e.points.front().size()); },
                    },
                    space);
}

void validate(const MeasureSpec& mu) {
  if (const auto* dw = std::get_if<DiscreteWeights>(&mu)) {
    if (dw->weights.empty()) throw ModelError("discrete weights are empty");
    for (double w : dw->weights)
      if (!(w >= 0.0)) throw ModelError("discrete weights must be non-negative");
    const double total = std::accumulate(dw->weights.begin(), dw->weights.end(), 0.0);
    if (std::abs(total - 1.0) > 1e-12) throw ModelError("discrete weights must sum to 1");
  }
}

KernelSpec constant_kernels(double wE, double wI, double gamma, FeatureSpace space) {
  if (!(wE >= 0.0 && wE <= 1.0)) throw ModelError("w_E must lie in [0,1]");
  if (!(wI >= 0.0) || !(gamma >= 0.0) || !std::isfinite(wI) || !std::isfinite(gamma))
    throw ModelError("w_I and gamma must be finite and non-negative");
  KernelSpec k;
  k.tag = "constant";
  k.space = std::move(space);
  k.wE = [wE](const Feature&, const Feature&) { return wE; };
  k.wI = [wI](const Feature&, const Feature&) { return wI; };
  k.gamma = [gamma](const Feature&) { return gamma; };
  k.wE_bound = wE;
  k.wI_bound = wI;
  k.gamma_bound = gamma;
  k.wE_const = wE;
  k.wI_const = wI;
  k.gamma_const = gamma;
  finalize(k);
  return k;
}

KernelSpec sbm_kernels(const std::vector<std::vector<double>>& wE,
                       const std::vector<std::vector<double>>& wI, const std::vector<double>& gamma) {
  const std::size_t k = gamma.size();
  if (k == 0 || wE.size() != k || wI.size() != k) throw ModelError("SBM dimensions mismatch");
  double wI_max = 0.0, wE_max = 0.0;
  for (std::size_t q = 0; q < k; ++q) {
    if (wE[q].size() != k || wI[q].size() != k) throw ModelError("SBM matrices must be k x k");
    for (std::size_t r = 0; r < k; ++r) {
      if (!(wE[q][r] >= 0.0 && wE[q][r] <= 1.0)) throw ModelError("SBM w_E outside [0,1]");
      if (wE[q][r] != wE[r][q]) throw ModelError("SBM w_E must be symmetric");
      if (!(wI[q][r] >= 0.0) || !std::isfinite(wI[q][r])) throw ModelError("SBM w_I invalid");
      wI_max = std::max(wI_max, wI[q][r]);
      wE_max = std::max(wE_max, wE[q][r]);
    }
    if (!(gamma[q] >= 0.0) || !std::isfinite(gamma[q])) throw ModelError("SBM gamma invalid");
  }
  KernelSpec spec;
  spec.tag = "sbm";
  spec.space = Discrete{static_cast<int>(k)};
  auto cls = [](const Feature& x) { return static_cast<std::size_t>(x[0]); };
  spec.wE = [wE, cls](const Feature& x, const Feature& y) { return wE[cls(x)][cls(y)]; };
  spec.wI = [wI, cls](const Feature& x, const Feature& y) { return wI[cls(x)][cls(y)]; };
  spec.gamma = [gamma, cls](const Feature& x) { return gamma[cls(x)]; };
  spec.wE_bound = wE_max;
  spec.wI_bound = wI_max;
  spec.gamma_bound = *std::max_element(gamma.begin(), gamma.end());
  double wie = 0.0;
  for (std::size_t q = 0; q < k; ++q)
    for (std::size_t r = 0; r < k; ++r) wie = std::max(wie, wE[q][r] * wI[q][r]);
  if (k == 1) {
    spec.wE_const = wE[0][0];
    spec.wI_const = wI[0][0];
    spec.gamma_const = gamma[0];
  }
  finalize(spec);
  spec.wIE_bound = wie;
  return spec;
}

KernelSpec geometric_profile_kernel(FeatureSpace space, std::function<double(double)> profile,
                                    double wI, double gamma) {
  validate(space);
  if (std::holds_alternative<Discrete>(space))
    throw ModelError("geometric kernel needs a metric feature space");
  KernelSpec k = constant_kernels(1.0, wI, gamma, std::move(space));
  k.tag = "geometric";
  k.wE = [profile = std::move(profile)](const Feature& x, const Feature& y) {
    return profile(distance(x, y));
  };
  k.wE_const.reset();
  k.wE_bound = 1.0;
  finalize(k);
  return k;
}

KernelSpec geometric_kernel(FeatureSpace space, double radius, double wI, double gamma) {
  if (!(radius > 0.0)) throw ModelError("geometric radius must be positive");
  return geometric_profile_kernel(
      std::move(space), [radius](double d) { return d <= radius ? 1.0 : 0.0; }, wI, gamma);
}

KernelSpec factorized_kernels(FeatureSpace space, PointFn beta, PairFn wE, PointFn theta,
                              double beta_bound, double theta_bound, double gamma, int n) {
  if (n < 1) throw ModelError("population size must be positive");
  validate(space);
  KernelSpec k;
  k.tag = "factorized";
  k.space = std::move(space);
  const double inv_n = 1.0 / n;
  k.wE = wE;
  k.wI = [beta, theta, inv_n](const Feature& x, const Feature& y) {
    return beta(x) * theta(y) * inv_n;
  };
  k.gamma = [gamma](const Feature&) { return gamma; };
  k.wE_bound = 1.0;
  k.wI_bound = beta_bound * theta_bound * inv_n;
  k.gamma_bound = gamma;
  k.gamma_const = gamma;
  k.limit_w = [beta, theta, wE](const Feature& x, const Feature& y) {
    return beta(x) * wE(x, y) * theta(y);
  };
  finalize(k);
  return k;
}

KernelSpec explicit_kernels(FeatureSpace space, PairFn wE, PairFn wI, PointFn gamma,
                            double wI_bound, double gamma_bound) {
  validate(space);
  KernelSpec k;
  k.tag = "explicit";
  k.space = std::move(space);
  k.wE = std::move(wE);
  k.wI = std::move(wI);
  k.gamma = std::move(gamma);
  k.wE_bound = 1.0;
  k.wI_bound = wI_bound;
  k.gamma_bound = gamma_bound;
  finalize(k);
  return k;
}

double effective_w(const KernelSpec& spec, int n, const Feature& x, const Feature& y) {
  if (n < 1) throw std::invalid_argument("n must be >= 1");
  if (!contains(spec.space, x) || !contains(spec.space, y))
    throw std::domain_error("feature outside the feature space");
  if (spec.limit_w) return spec.limit_w(x, y);
  return static_cast<double>(n) * spec.wE(x, y) * spec.wI(x, y);
}

double compute_In(const std::vector<Feature>& features, const PairFn& wI) {
  if (features.empty()) throw std::invalid_argument("compute_In needs a non-empty population");
  const double n = static_cast<double>(features.size());
  double total = 0.0;
  for (const auto& xi : features) {
    double row = 0.0;
    for (const auto& xj : features) row += std::min(wI(xi, xj), 1.0);
    total += row;
  }
  return total / (n * n);
}

double compute_In(const std::vector<Feature>& features, const KernelSpec& spec) {
  if (features.empty()) throw std::invalid_argument("compute_In needs a non-empty population");
  if (spec.wI_const) return std::min(*spec.wI_const, 1.0);
  return compute_In(features, spec.wI);
}

std::vector<Feature> test_grid(const FeatureSpace& space) {
  return std::visit(overloaded{
                        [](const Interval01&) {
                          std::vector<Feature> g;
                          for (int a = 0; a < 64; ++a) g.push_back({(a + 0.5) / 64.0});
                          g.push_back({0.0});
                          g.push_back({1.0});
                          return g;
                        },
                        [](const Hypercube& h) {
                          int per_axis = 64;
                          while (h.dim > 1 && std::pow(per_axis, h.dim) > 4096) per_axis /= 2;
                          per_axis = std::max(per_axis, 2);
                          std::vector<Feature> g;
                          std::vector<int> idx(h.dim, 0);
                          while (true) {
                            Feature x(h.dim);
                            for (int d = 0; d < h.dim; ++d) x[d] = (idx[d] + 0.5) / per_axis;
                            g.push_back(std::move(x));
                            int d = 0;
                            while (d < h.dim && ++idx[d] == per_axis) idx[d++] = 0;
                            if (d == h.dim) break;
                          }
                          return g;
                        },
                        [](const Discrete& d) {
                          std::vector<Feature> g;
                          for (int q = 0; q < d.classes; ++q) g.push_back({static_cast<double>(q)});
                          return g;
                        },
                        [](const Explicit& e) { return e.points; },
                    },
                    space);
}

void verify_bounds(const KernelSpec& spec, std::uint64_t seed) {
  validate(spec.space);
  const double tol = 1e-12;
  auto check_pair = [&](const Feature& x, const Feature& y) {
    const double e = spec.wE(x, y);
    if (!(e >= 0.0 && e <= 1.0)) throw ModelError(spec.tag + ": w_E outside [0,1]");
    if (e != spec.wE(y, x)) throw ModelError(spec.tag + ": w_E is not symmetric");
    const double r = spec.wI(x, y);
    if (!(r >= 0.0) || !std::isfinite(r)) throw ModelError(spec.tag + ": w_I negative or non-finite");
    if (r > spec.wI_bound * (1 + tol)) throw ModelError(spec.tag + ": w_I exceeds declared bound");
    if (e * r > spec.wIE_bound * (1 + tol))
      throw ModelError(spec.tag + ": w_I*w_E exceeds declared bound");
  };
  auto check_point = [&](const Feature& x) {
    const double g = spec.gamma(x);
    if (!(g >= 0.0) || !std::isfinite(g)) throw ModelError(spec.tag + ": gamma negative or non-finite");
    if (g > spec.gamma_bound * (1 + tol)) throw ModelError(spec.tag + ": gamma exceeds declared bound");
  };

  const auto grid = test_grid(spec.space);
  Stream rng(seed);
  for (const auto& x : grid) check_point(x);
  if (grid.size() <= 128) {
    for (const auto& x : grid)
      for (const auto& y : grid) check_pair(x, y);
  } else {
    for (int s = 0; s < 4096; ++s) check_pair(grid[rng.below(grid.size())], grid[rng.below(grid.size())]);
  }
  for (int s = 0; s < 10000; ++s) {
    const Feature x = random_point(spec.space, rng);
    const Feature y = random_point(spec.space, rng);
    check_point(x);
    check_pair(x, y);
  }
}

double ScalingFamily::eps(int n) const {
  return std::pow(static_cast<double>(n) / static_cast<double>(n0), -alpha);
}

double ScalingFamily::wI_at(int n) const { return base_wI * eps(n); }

double ScalingFamily::wE_at(int n) const { return target_w / (static_cast<double>(n) * wI_at(n)); }

KernelSpec ScalingFamily::kernel_at(int n, double gamma) const {
  if (n < 1) throw std::invalid_argument("n must be >= 1");
  const double wE = wE_at(n);
  if (wE > 1.0)
    throw ModelError("scaling family gives w_E > 1 at n = " + std::to_string(n));
  KernelSpec k = constant_kernels(wE, wI_at(n), gamma);
  const double w = target_w;
  k.limit_w = [w](const Feature&, const Feature&) { return w; };
  return k;
}

KernelSpec ScalingFamily::scale(const KernelSpec& shape, int n) const {
  if (n < 1) throw std::invalid_argument("n must be >= 1");
  if (!(shape.wI_bound > 0.0)) throw ModelError("shape kernel needs a positive w_I bound");
  const double e = eps(n);
  const double i_scale = base_wI * e / shape.wI_bound;
  const double e_scale = target_w / (base_wI * static_cast<double>(n) * e);
  if (shape.wE_bound * e_scale > 1.0)
    throw ModelError("scaling family gives w_E > 1 at n = " + std::to_string(n));
  KernelSpec k = shape;
  k.wI = [f = shape.wI, i_scale](const Feature& x, const Feature& y) { return i_scale * f(x, y); };
  k.wE = [f = shape.wE, e_scale](const Feature& x, const Feature& y) { return e_scale * f(x, y); };
  k.wI_bound = shape.wI_bound * i_scale;
  k.wE_bound = shape.wE_bound * e_scale;
  if (shape.wI_const) k.wI_const = *shape.wI_const * i_scale;
  if (shape.wE_const) k.wE_const = *shape.wE_const * e_scale;
  k.wIE_bound = shape.wIE_bound * i_scale * e_scale;
  const double limit_scale = target_w / shape.wI_bound;
  k.limit_w = [fi = shape.wI, fe = shape.wE, limit_scale](const Feature& x, const Feature& y) {
    return limit_scale * fi(x, y) * fe(x, y);
  };
  return k;
}

AssumptionReport check_assumptions(const KernelSpec& shape, const ScalingFamily& family,
                                   const std::vector<int>& n_list,
                                   const std::vector<Feature>& features) {
  if (n_list.empty()) throw std::invalid_argument("check_assumptions needs at least one n");
  AssumptionReport report;
  const auto grid = test_grid(shape.space);
  const KernelSpec limit = family.scale(shape, family.n0);
  for (int n : n_list) {
    const KernelSpec k = family.scale(shape, n);
    AssumptionRow row;
    row.n = n;
    for (const auto& x : grid) {
      row.sup_gamma_deviation = std::max(row.sup_gamma_deviation, std::abs(k.gamma(x) - limit.gamma(x)));
      for (const auto& y : grid) {
        const double wn = static_cast<double>(n) * k.wE(x, y) * k.wI(x, y);
        row.sup_w_deviation = std::max(row.sup_w_deviation, std::abs(wn - limit.limit_w(x, y)));
      }
    }
    row.In = compute_In(features, k);
    report.rows.push_back(row);
  }
  auto sorted = report.rows;
  std::sort(sorted.begin(), sorted.end(), [](auto& a, auto& b) { return a.n < b.n; });
  report.In_vanishing = sorted.size() >= 2;
  for (std::size_t r = 1; r < sorted.size(); ++r)
    if (!(sorted[r].In < sorted[r - 1].In)) report.In_vanishing = false;
  return report;
}

}  // namespace sisnet
