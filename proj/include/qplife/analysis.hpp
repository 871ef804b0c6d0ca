#pragma once

// Rate extraction from decaying series, Delta^2 vs Delta^2 log Delta^-2 model
// comparison, and scaling-collapse tables.

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace qplife::analysis {

struct WindowPolicy {
  /// Fit where value / value(0) lies in [lower, upper].
  double upper = 0.2;
  double lower = 0.02;
  /// Window shifts (fraction of the window length) used for the error bar.
  double shift_fraction = 0.25;
};

struct RateFit {
  double rate = 0.0;
  double t_begin = 0.0;
  double t_end = 0.0;
  double r2 = 0.0;
  double error = 0.0;  ///< half-range of rates over the shifted windows
  std::size_t n_points = 0;
};

/// Weighted least-squares slope of log|value| against t over the policy
/// window. `stderr_values`, if given, weights each point by (|v| / sigma)^2.
/// Throws InsufficientDecay if the series never enters the window.
RateFit extract_rate(std::span<const double> t, std::span<const double> value,
                     const WindowPolicy& policy = {},
                     std::span<const double> stderr_values = {});

struct LineFit {
  double intercept = 0.0;
  double slope = 0.0;
  double r2 = 0.0;
};
/// Ordinary (optionally weighted) least squares y = intercept + slope * x.
LineFit fit_line(std::span<const double> x, std::span<const double> y,
                 std::span<const double> w = {});

enum class ScalingModel { Quadratic, LogEnhanced };
std::string to_string(ScalingModel m);

struct ScalingLaw {
  ScalingModel model = ScalingModel::Quadratic;
  /// Quadratic: rate = c Delta^2 (c in `a`). LogEnhanced: a Delta^2 log(b Delta^-2).
  double a = 0.0;
  double b = 0.0;
  double ssr = 0.0;  ///< sum of squared residuals of log(rate)
  bool converged = false;
  /// LogEnhanced only: b Delta^-2 <= 1 somewhere in the data range.
  bool unidentifiable = false;
  /// LogEnhanced only: the best fit sits on the a -> 0 boundary (pure Delta^2).
  bool degenerate = false;

  double predict(double delta) const;
};

struct ScalingComparison {
  ScalingLaw quadratic;
  ScalingLaw log_enhanced;
  ScalingModel preferred = ScalingModel::Quadratic;
};

struct RatePoint {
  double delta = 0.0;
  double rate = 0.0;
};

/// Fit both laws in log(rate). The log-enhanced law is preferred only when its
/// residual is strictly lower; ties (including the degenerate boundary) go to
/// the quadratic law.
ScalingComparison fit_scaling(std::span<const RatePoint> rates);

enum class TimeScale { DeltaSquared, DeltaSquaredLog };
/// tau^{-1} under the chosen scaling: Delta^2 or Delta^2 log Delta^-2.
double inverse_tau(double delta, TimeScale scale);

struct Series {
  double delta = 0.0;
  std::vector<double> t;
  std::vector<double> value;
};

struct CollapseRow {
  double delta = 0.0;
  double scaled_t = 0.0;
  double value = 0.0;
};

struct CollapseResult {
  std::vector<CollapseRow> rows;
  /// max over curve pairs of the sup-norm distance on the shared rescaled-time
  /// range, restricted to values in [value_low, value_high]
  double metric = 0.0;
};

CollapseResult collapse_table(std::span<const Series> series, TimeScale scale,
                              double value_low = 0.05, double value_high = 0.8);
/// Same, with explicit tau(Delta) values (one per series).
CollapseResult collapse_table(std::span<const Series> series, std::span<const double> tau,
                              double value_low = 0.05, double value_high = 0.8);

/// Centered finite-difference d log|y| / d log t.
std::vector<double> log_derivative(std::span<const double> t, std::span<const double> y);

}  // namespace qplife::analysis
