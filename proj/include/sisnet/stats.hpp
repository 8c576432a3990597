#pragma once

// Temporal averages of trajectories and log-log regressions.

#include <optional>
#include <utility>
#include <vector>

#include "sisnet/sis.hpp"

namespace sisnet {

struct Window {
  double begin = 20.0;
  double end = 80.0;
  double length() const { return end - begin; }
};

struct TemporalSummary {
  Window window;
  double u_hat = 0.0;
  double sigma_hat = 0.0;
  std::optional<double> v_hat;
  std::optional<double> sigma_v_hat;
  bool exact = true;  // false when the recording grid was used (trapezoid)
};

struct MeanStd {
  double mean;
  double std;
};

/// Exact time average and temporal standard deviation over [a, b] of the
/// right-continuous step function taking values[k] on [times[k], times[k+1]).
/// times must be sorted and times.front() <= a.
MeanStd step_mean_std(const std::vector<double>& times, const std::vector<double>& values, double a, double b);

/// Same for a piecewise-linear interpolation of grid samples.
MeanStd trapezoid_mean_std(const std::vector<double>& times, const std::vector<double>& values, double a,
                           double b);

/// Time average and standard deviation of u (and v when a mask was tracked)
/// over the window, from the step series when it covers the window.
TemporalSummary temporal_summary(const Trajectory& traj, Window window = {});

struct RegressionResult {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared_fit = 0.0;
  std::optional<double> fixed_slope;
  std::optional<double> fixed_intercept;
  std::optional<double> r_squared_fixed;
};

/// OLS of log(value) on log(n). With fixed_slope, also the R^2 of the line
/// with that slope and a refitted intercept.
RegressionResult loglog_regression(const std::vector<std::pair<double, double>>& points,
                                   std::optional<double> fixed_slope = std::nullopt);

/// loglog_regression with the imposed slope -1/2.
RegressionResult fluctuation_scaling(const std::vector<std::pair<double, double>>& points);

}  // namespace sisnet
