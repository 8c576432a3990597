#pragma once

// Feature spaces, reference measures, rate kernels and scaling families.

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace sisnet {

/// Raised when a model definition violates its contract (bad bounds,
/// w_E outside [0,1], non-finite rates, ...).
class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A point of the feature space. Discrete classes are stored as {q}
/// with q in [0, k).
using Feature = std::vector<double>;

struct Interval01 {};
struct Hypercube {
  int dim = 1;
};
struct Discrete {
  int classes = 1;
};
struct Explicit {
  std::vector<Feature> points;
};
using FeatureSpace = std::variant<Interval01, Hypercube, Discrete, Explicit>;

void validate(const FeatureSpace& space);
bool contains(const FeatureSpace& space, const Feature& x);
int dimension(const FeatureSpace& space);

struct UniformOnSpace {};
struct DiscreteWeights {
  std::vector<double> weights;
};
struct EmpiricalFromFeatures {};
using MeasureSpec = std::variant<UniformOnSpace, DiscreteWeights, EmpiricalFromFeatures>;

void validate(const MeasureSpec& mu);

using PairFn = std::function<double(const Feature&, const Feature&)>;
using PointFn = std::function<double(const Feature&)>;

/// Connection density w_E, infection rate w_I (rate at which the first
/// argument is infected by the second) and recovery rate gamma, with the
/// declared sup bounds used as C_w-style constants.
struct KernelSpec {
  std::string tag;
  FeatureSpace space;
  PairFn wE;
  PairFn wI;
  PointFn gamma;
  double wE_bound = 1.0;
  double wI_bound = 0.0;
  double gamma_bound = 0.0;

  // Set when the corresponding function is constant; enables fast paths.
  std::optional<double> wE_const;
  std::optional<double> wI_const;
  std::optional<double> gamma_const;

  // Limit kernel w for kernels produced by a ScalingFamily.
  PairFn limit_w;

  /// sup of w_I * w_E, used for thinning non-edge arrows.
  double wIE_bound = 0.0;
};

KernelSpec constant_kernels(double wE, double wI, double gamma, FeatureSpace space = Interval01{});

/// Stochastic block model: features are class indices {q}.
KernelSpec sbm_kernels(const std::vector<std::vector<double>>& wE,
                       const std::vector<std::vector<double>>& wI, const std::vector<double>& gamma);

/// Random geometric graph: w_E(x,y) = 1{|x-y| <= radius}, Euclidean norm.
KernelSpec geometric_kernel(FeatureSpace space, double radius, double wI, double gamma);

/// Radial profile variant: w_E(x,y) = profile(|x-y|), profile values in [0,1].
KernelSpec geometric_profile_kernel(FeatureSpace space, std::function<double(double)> profile,
                                    double wI, double gamma);

/// w_E^(n) = wE, n w_I^(n)(x,y) = beta(x) theta(y).
KernelSpec factorized_kernels(FeatureSpace space, PointFn beta, PairFn wE, PointFn theta,
                              double beta_bound, double theta_bound, double gamma, int n);

/// Arbitrary functions with declared bounds.
KernelSpec explicit_kernels(FeatureSpace space, PairFn wE, PairFn wI, PointFn gamma,
                            double wI_bound, double gamma_bound);

/// Overall propagation rate n * w_E(x,y) * w_I(x,y).
double effective_w(const KernelSpec& spec, int n, const Feature& x, const Feature& y);

/// (1/n^2) sum over all ordered pairs, diagonal included, of min(w_I(x_i,x_j), 1).
double compute_In(const std::vector<Feature>& features, const PairFn& wI);
double compute_In(const std::vector<Feature>& features, const KernelSpec& spec);

/// Verifies w_E in [0,1] and symmetric, w_I and gamma non-negative and
/// below their declared bounds, on a 64-point-per-axis grid plus random
/// samples. Throws ModelError on the first violation.
void verify_bounds(const KernelSpec& spec, std::uint64_t seed = 0x5eed);

/// Sparsity scaling w_I^(n) = eps_n * base_wI * shape_I, w_E^(n) = shape_E / (n eps_n)
/// with eps_n = (n/n0)^-alpha.
struct ScalingFamily {
  double alpha = 0.3;
  int n0 = 2000;
  double base_wI = 1.2;
  double target_w = 3.0;

  double eps(int n) const;
  double wI_at(int n) const;
  double wE_at(int n) const;

  /// Homogeneous Erdos-Renyi kernel at population size n. Throws ModelError
  /// if w_E^(n) > 1.
  KernelSpec kernel_at(int n, double gamma) const;

  /// Scales a base kernel: shape_I = base.wI / base.wI_bound,
  /// shape_E = base.wE * target_w / base_wI.
  KernelSpec scale(const KernelSpec& shape, int n) const;
};

struct AssumptionRow {
  int n = 0;
  double sup_w_deviation = 0.0;
  double sup_gamma_deviation = 0.0;
  double In = 0.0;
};

struct AssumptionReport {
  std::vector<AssumptionRow> rows;
  bool In_vanishing = false;
};

/// Per-n diagnostics for a family built from `shape`: distance of w^(n) to
/// the limit kernel and of gamma^(n) to gamma on a test grid, and
/// I_n(w_I^(n) ^ 1) over `features`.
AssumptionReport check_assumptions(const KernelSpec& shape, const ScalingFamily& family,
                                   const std::vector<int>& n_list,
                                   const std::vector<Feature>& features);

/// Deterministic test points: 64 per axis (capped at 4096 points), all
/// classes for Discrete, all points for Explicit.
std::vector<Feature> test_grid(const FeatureSpace& space);

}  // namespace sisnet
