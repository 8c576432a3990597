#pragma once

// Deterministic limit dynamics: the integro-differential equation on a
// quadrature of the feature space, its block-model ODE reduction and the
// homogeneous closed form.

#include <stdexcept>
#include <string>
#include <vector>

#include "sisnet/model.hpp"

namespace sisnet {

/// Raised when an RK4 stage leaves [-1e-6, 1 + 1e-6]; the step is too large.
class StepSizeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Quadrature {
  std::vector<Feature> nodes;
  std::vector<double> weights;
};

void validate(const Quadrature& quad);

/// Equal-weight midpoint nodes: m on [0,1], m per axis on a hypercube
/// (d <= 2), one node per class with the given weights for Discrete.
Quadrature midpoint_quadrature(const FeatureSpace& space, int m = 256);
Quadrature class_quadrature(const std::vector<double>& class_weights);

struct MeanFieldSolution {
  std::vector<double> times;
  std::vector<std::vector<double>> values;  // values[r][k] = u(times[r], node k)
  std::string method;
  double dt = 0.0;
  std::vector<Feature> nodes;
  std::vector<double> weights;
};

/// du_k/dt = (1 - u_k) sum_l w(x_k, x_l) u_l weight_l - gamma(x_k) u_k, RK4 at
/// fixed step dt. Values are stored every `record_dt` (a multiple of dt).
MeanFieldSolution solve_general(const PairFn& w, const PointFn& gamma, const Quadrature& quad,
                                const PointFn& u0, double t_max, double dt, double record_dt = 0.1);

/// Closed-form solution of du/dt = (1 - u) u w - gamma u at the given times.
std::vector<double> solve_homogeneous(double w, double gamma, double u0, const std::vector<double>& t_grid);

/// Block-model system: du^q/dt = (1 - u^q) sum_r wI[q][r] wE[q][r] u^r mu_r - g_q u^q.
MeanFieldSolution solve_sbm(const std::vector<std::vector<double>>& wE,
                            const std::vector<std::vector<double>>& wI, const std::vector<double>& g,
                            const std::vector<double>& mu, const std::vector<double>& u0, double t_max,
                            double dt, double record_dt = 0.1);

/// RK4 for the scalar homogeneous equation; used as an independent check.
MeanFieldSolution solve_homogeneous_rk4(double w, double gamma, double u0, double t_max, double dt,
                                        double record_dt = 0.1);

struct Equilibrium {
  double R0;
  double u_star;
};

/// R0 = w / gamma (infinite when gamma = 0), u* = max(0, 1 - 1/R0).
Equilibrium equilibrium(double w, double gamma);

}  // namespace sisnet
