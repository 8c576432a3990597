#include "sisnet/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sisnet {

namespace {

void check_window(double a, double b) {
  if (!(b > a)) throw std::invalid_argument("empty averaging window");
}

}  // namespace

MeanStd step_mean_std(const std::vector<double>& times, const std::vector<double>& values, double a, double b) {
  check_window(a, b);
  if (times.empty() || times.size() != values.size()) throw std::invalid_argument("step series is empty or misaligned");
  if (times.front() > a) throw std::invalid_argument("step series starts after the window");
  const double len = b - a;
  // value on [times[k], times[k+1]) clipped to [a, b]
  auto for_each_piece = [&](auto&& f) {
    auto k = std::upper_bound(times.begin(), times.end(), a) - times.begin() - 1;
    for (auto idx = static_cast<std::size_t>(k); idx < times.size(); ++idx) {
      const double lo = std::max(a, times[idx]);
      const double hi = idx + 1 < times.size() ? std::min(b, times[idx + 1]) : b;
      if (lo >= b) break;
      if (hi > lo) f(hi - lo, values[idx]);
    }
  };
  double integral = 0.0;
  for_each_piece([&](double dt, double v) { integral += dt * v; });
  const double mean = integral / len;
  double sq = 0.0;
  for_each_piece([&](double dt, double v) { sq += dt * (v - mean) * (v - mean); });
  return {mean, std::sqrt(sq / len)};
}

MeanStd trapezoid_mean_std(const std::vector<double>& times, const std::vector<double>& values, double a,
                           double b) {
  check_window(a, b);
  if (times.size() < 2 || times.size() != values.size()) throw std::invalid_argument("grid series too short");
  std::vector<double> t, v;
  for (std::size_t k = 0; k < times.size(); ++k)
    if (times[k] >= a && times[k] <= b) {
      t.push_back(times[k]);
      v.push_back(values[k]);
    }
  if (t.size() < 2) throw std::invalid_argument("fewer than two grid points in the window");
  double integral = 0.0, span = 0.0;
  for (std::size_t k = 1; k < t.size(); ++k) {
    integral += 0.5 * (v[k] + v[k - 1]) * (t[k] - t[k - 1]);
    span += t[k] - t[k - 1];
  }
  const double mean = integral / span;
  double sq = 0.0;
  for (std::size_t k = 1; k < t.size(); ++k) {
    const double d0 = v[k - 1] - mean, d1 = v[k] - mean;
    // exact integral of the square of a linear piece
    sq += (t[k] - t[k - 1]) * (d0 * d0 + d0 * d1 + d1 * d1) / 3.0;
  }
  return {mean, std::sqrt(sq / span)};
}

TemporalSummary temporal_summary(const Trajectory& traj, Window window) {
  check_window(window.begin, window.end);
  if (window.begin < 0.0 || window.end > traj.t_max) throw std::invalid_argument("window outside [0, t_max]");
  TemporalSummary s;
  s.window = window;
  const bool have_mask = traj.mask_size > 0;
  if (!traj.step_time.empty() && traj.step_time.front() <= window.begin) {
    std::vector<double> u(traj.step_count.size());
    for (std::size_t k = 0; k < u.size(); ++k) u[k] = static_cast<double>(traj.step_count[k]) / traj.n;
    const auto mu = step_mean_std(traj.step_time, u, window.begin, window.end);
    s.u_hat = mu.mean;
    s.sigma_hat = mu.std;
    if (have_mask) {
      std::vector<double> v(traj.step_mask_count.size());
      for (std::size_t k = 0; k < v.size(); ++k) v[k] = static_cast<double>(traj.step_mask_count[k]) / traj.mask_size;
      const auto mv = step_mean_std(traj.step_time, v, window.begin, window.end);
      s.v_hat = mv.mean;
      s.sigma_v_hat = mv.std;
    }
    return s;
  }
  s.exact = false;
  const auto mu = trapezoid_mean_std(traj.grid, traj.u, window.begin, window.end);
  s.u_hat = mu.mean;
  s.sigma_hat = mu.std;
  if (have_mask && !traj.v.empty()) {
    const auto mv = trapezoid_mean_std(traj.grid, traj.v, window.begin, window.end);
    s.v_hat = mv.mean;
    s.sigma_v_hat = mv.std;
  }
  return s;
}

RegressionResult loglog_regression(const std::vector<std::pair<double, double>>& points,
                                   std::optional<double> fixed_slope) {
  if (points.size() < 2) throw std::invalid_argument("regression needs at least two points");
  std::vector<double> x, y;
  for (auto [n, value] : points) {
    if (!(n > 0.0) || !(value > 0.0)) throw std::invalid_argument("log-log regression needs positive coordinates");
    x.push_back(std::log(n));
    y.push_back(std::log(value));
  }
  const double m = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    mx += x[k];
    my += y[k];
  }
  mx /= m;
  my /= m;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxx += (x[k] - mx) * (x[k] - mx);
    sxy += (x[k] - mx) * (y[k] - my);
    syy += (y[k] - my) * (y[k] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("regression needs at least two distinct n");
  RegressionResult r;
  r.slope = sxy / sxx;
  r.intercept = my - r.slope * mx;
  double ss_res = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double e = y[k] - (r.intercept + r.slope * x[k]);
    ss_res += e * e;
  }
  r.r_squared_fit = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  if (fixed_slope) {
    const double b = my - *fixed_slope * mx;
    double ss_fixed = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
      const double e = y[k] - (b + *fixed_slope * x[k]);
      ss_fixed += e * e;
    }
    r.fixed_slope = fixed_slope;
    r.fixed_intercept = b;
    r.r_squared_fixed = syy > 0.0 ? 1.0 - ss_fixed / syy : (ss_fixed == 0.0 ? 1.0 : -INFINITY);
  }
  return r;
}

RegressionResult fluctuation_scaling(const std::vector<std::pair<double, double>>& points) {
  return loglog_regression(points, -0.5);
}

}  // namespace sisnet
