#include "sisnet/meanfield.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace sisnet {

namespace {

/// Fixed-step classical RK4 for du/dt = rhs(u) on [0,1]^m.
template <class Rhs>
MeanFieldSolution integrate(std::vector<double> u, Rhs&& rhs, double t_max, double dt, double record_dt,
                            std::string method) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  if (!(t_max >= 0.0)) throw std::invalid_argument("t_max must be non-negative");
  if (!(record_dt > 0.0)) record_dt = dt;
  for (double v : u)
    if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("initial condition outside [0,1]");

  const auto steps = static_cast<std::int64_t>(std::ceil(t_max / dt - 1e-9));
  const auto stride = std::max<std::int64_t>(1, std::llround(record_dt / dt));
  const std::size_t m = u.size();
  std::vector<double> k1(m), k2(m), k3(m), k4(m), tmp(m);

  MeanFieldSolution sol;
  sol.method = std::move(method);
  sol.dt = dt;
  auto record = [&](double t) {
    sol.times.push_back(t);
    std::vector<double> row(u);
    for (double& v : row) v = std::clamp(v, 0.0, 1.0);
    sol.values.push_back(std::move(row));
  };
  auto guard = [](const std::vector<double>& v) {
    for (double x : v)
      if (!(x >= -1e-6 && x <= 1.0 + 1e-6)) throw StepSizeError("RK4 stage left [0,1]: reduce dt");
  };

  record(0.0);
  for (std::int64_t s = 0; s < steps; ++s) {
    const double t = static_cast<double>(s) * dt;
    const double h = std::min(dt, t_max - t);
    rhs(u, k1);
    for (std::size_t i = 0; i < m; ++i) tmp[i] = u[i] + 0.5 * h * k1[i];
    guard(tmp);
    rhs(tmp, k2);
    for (std::size_t i = 0; i < m; ++i) tmp[i] = u[i] + 0.5 * h * k2[i];
    guard(tmp);
    rhs(tmp, k3);
    for (std::size_t i = 0; i < m; ++i) tmp[i] = u[i] + h * k3[i];
    guard(tmp);
    rhs(tmp, k4);
    for (std::size_t i = 0; i < m; ++i) u[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    guard(u);
    if ((s + 1) % stride == 0 || s + 1 == steps) record(s + 1 == steps ? t_max : static_cast<double>(s + 1) * dt);
  }
  return sol;
}

/// rhs_k = (1 - u_k) sum_l a[k][l] u_l - g_k u_k with a dense row-major matrix.
struct DenseRhs {
  std::vector<double> a;
  std::vector<double> g;
  std::size_t m;

  void operator()(const std::vector<double>& u, std::vector<double>& out) const {
    for (std::size_t k = 0; k < m; ++k) {
      const double* row = a.data() + k * m;
      double force = 0.0;
      for (std::size_t l = 0; l < m; ++l) force += row[l] * u[l];
      out[k] = (1.0 - u[k]) * force - g[k] * u[k];
    }
  }
};

}  // namespace

void validate(const Quadrature& quad) {
  if (quad.nodes.empty() || quad.nodes.size() != quad.weights.size())
    throw std::invalid_argument("quadrature nodes and weights must be non-empty and aligned");
  for (double w : quad.weights)
    if (!(w >= 0.0)) throw std::invalid_argument("quadrature weights must be non-negative");
  const double total = std::accumulate(quad.weights.begin(), quad.weights.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("quadrature weights must sum to 1");
}

Quadrature midpoint_quadrature(const FeatureSpace& space, int m) {
  if (m < 1) throw std::invalid_argument("quadrature size must be positive");
  Quadrature q;
  if (std::holds_alternative<Interval01>(space) ||
      (std::holds_alternative<Hypercube>(space) && std::get<Hypercube>(space).dim == 1)) {
    for (int a = 0; a < m; ++a) q.nodes.push_back({(a + 0.5) / m});
  } else if (const auto* h = std::get_if<Hypercube>(&space)) {
    if (h->dim != 2) throw std::invalid_argument("midpoint quadrature supports hypercubes up to d = 2");
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) q.nodes.push_back({(a + 0.5) / m, (b + 0.5) / m});
  } else if (const auto* d = std::get_if<Discrete>(&space)) {
    return class_quadrature(std::vector<double>(d->classes, 1.0 / d->classes));
  } else {
    const auto& pts = std::get<Explicit>(space).points;
    q.nodes = pts;
  }
  q.weights.assign(q.nodes.size(), 1.0 / static_cast<double>(q.nodes.size()));
  return q;
}

Quadrature class_quadrature(const std::vector<double>& class_weights) {
  Quadrature q;
  for (std::size_t c = 0; c < class_weights.size(); ++c) q.nodes.push_back({static_cast<double>(c)});
  q.weights = class_weights;
  validate(q);
  return q;
}

MeanFieldSolution solve_general(const PairFn& w, const PointFn& gamma, const Quadrature& quad,
                                const PointFn& u0, double t_max, double dt, double record_dt) {
  validate(quad);
  const std::size_t m = quad.nodes.size();
  DenseRhs rhs{std::vector<double>(m * m), std::vector<double>(m), m};
  for (std::size_t k = 0; k < m; ++k) {
    rhs.g[k] = gamma(quad.nodes[k]);
    for (std::size_t l = 0; l < m; ++l) rhs.a[k * m + l] = w(quad.nodes[k], quad.nodes[l]) * quad.weights[l];
  }
  std::vector<double> u(m);
  for (std::size_t k = 0; k < m; ++k) u[k] = u0(quad.nodes[k]);
  auto sol = integrate(std::move(u), rhs, t_max, dt, record_dt, "rk4-general");
  sol.nodes = quad.nodes;
  sol.weights = quad.weights;
  return sol;
}

std::vector<double> solve_homogeneous(double w, double gamma, double u0, const std::vector<double>& t_grid) {
  if (!(u0 >= 0.0 && u0 <= 1.0)) throw std::invalid_argument("u0 outside [0,1]");
  if (!(w >= 0.0) || !(gamma >= 0.0)) throw std::invalid_argument("rates must be non-negative");
  std::vector<double> out;
  out.reserve(t_grid.size());
  const double r = w - gamma;
  for (double t : t_grid) {
    double u;
    if (u0 == 0.0) {
      u = 0.0;
    } else if (w == 0.0) {
      u = u0 * std::exp(-gamma * t);
    } else if (r == 0.0) {
      u = u0 / (1.0 + w * u0 * t);
    } else {
      // u = K u0 / (u0 + (K - u0) e^{-rt}), K = r / w, written with a non-positive exponent
      const double K = r / w;
      if (r > 0.0) {
        u = K * u0 / (u0 + (K - u0) * std::exp(-r * t));
      } else {
        const double e = std::exp(r * t);
        u = K * u0 * e / (u0 * e + (K - u0));
      }
    }
    out.push_back(u);
  }
  return out;
}

MeanFieldSolution solve_sbm(const std::vector<std::vector<double>>& wE,
                            const std::vector<std::vector<double>>& wI, const std::vector<double>& g,
                            const std::vector<double>& mu, const std::vector<double>& u0, double t_max,
                            double dt, double record_dt) {
  const std::size_t k = g.size();
  if (k == 0 || wE.size() != k || wI.size() != k || mu.size() != k || u0.size() != k)
    throw std::invalid_argument("SBM dimensions mismatch");
  validate(class_quadrature(mu));
  DenseRhs rhs{std::vector<double>(k * k), g, k};
  for (std::size_t q = 0; q < k; ++q) {
    if (wE[q].size() != k || wI[q].size() != k) throw std::invalid_argument("SBM matrices must be k x k");
    for (std::size_t r = 0; r < k; ++r) rhs.a[q * k + r] = wI[q][r] * wE[q][r] * mu[r];
  }
  auto sol = integrate(u0, rhs, t_max, dt, record_dt, "rk4-sbm");
  sol.nodes = class_quadrature(mu).nodes;
  sol.weights = mu;
  return sol;
}

MeanFieldSolution solve_homogeneous_rk4(double w, double gamma, double u0, double t_max, double dt,
                                        double record_dt) {
  DenseRhs rhs{{w}, {gamma}, 1};
  auto sol = integrate({u0}, rhs, t_max, dt, record_dt, "rk4-homogeneous");
  sol.nodes = {{0.0}};
  sol.weights = {1.0};
  return sol;
}

Equilibrium equilibrium(double w, double gamma) {
  if (!(w >= 0.0) || !(gamma >= 0.0)) throw std::invalid_argument("rates must be non-negative");
  if (w == 0.0 && gamma == 0.0) throw std::invalid_argument("equilibrium undefined for w = gamma = 0");
  const double R0 = gamma == 0.0 ? std::numeric_limits<double>::infinity() : w / gamma;
  return {R0, std::max(0.0, 1.0 - 1.0 / R0)};
}

}  // namespace sisnet
