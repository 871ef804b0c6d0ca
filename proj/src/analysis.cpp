#include "qplife/analysis.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "qplife/error.hpp"

namespace qplife::analysis {

LineFit fit_line(std::span<const double> x, std::span<const double> y,
                 std::span<const double> w) {
  const std::size_t n = x.size();
  if (n != y.size() || (!w.empty() && w.size() != n))
    throw InvalidInput("fit_line: length mismatch");
  if (n < 2) throw InvalidInput("fit_line: need at least two points");
  double sw = 0, sx = 0, sy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double wi = w.empty() ? 1.0 : w[i];
    sw += wi;
    sx += wi * x[i];
    sy += wi * y[i];
  }
  const double mx = sx / sw, my = sy / sw;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double wi = w.empty() ? 1.0 : w[i];
    sxx += wi * (x[i] - mx) * (x[i] - mx);
    sxy += wi * (x[i] - mx) * (y[i] - my);
    syy += wi * (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0) throw InvalidInput("fit_line: degenerate abscissae");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = syy > 0 ? std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0) : 1.0;
  return f;
}

namespace {

struct Window {
  std::size_t begin, end;  // inclusive range of indices
};

Window find_window(std::span<const double> ratio, const WindowPolicy& p) {
  std::size_t i = 0;
  while (i < ratio.size() && ratio[i] > p.upper) ++i;
  if (i == ratio.size())
    throw InsufficientDecay("extract_rate: series never decays to the window upper bound");
  std::size_t j = i;
  while (j < ratio.size() && ratio[j] > p.lower) ++j;
  if (j == ratio.size())
    throw InsufficientDecay("extract_rate: series never decays to the window lower bound");
  if (j == i) ++j;
  if (j >= ratio.size()) j = ratio.size() - 1;
  if (j <= i) throw InsufficientDecay("extract_rate: window holds fewer than two points");
  return {i, j};
}

RateFit fit_window(std::span<const double> t, std::span<const double> logv,
                   std::span<const double> w, std::size_t b, std::size_t e) {
  const std::size_t n = e - b + 1;
  auto lf = fit_line(t.subspan(b, n), logv.subspan(b, n), w.empty() ? w : w.subspan(b, n));
  RateFit r;
  r.rate = -lf.slope;
  r.r2 = lf.r2;
  r.t_begin = t[b];
  r.t_end = t[e];
  r.n_points = n;
  return r;
}

}  // namespace

RateFit extract_rate(std::span<const double> t, std::span<const double> value,
                     const WindowPolicy& policy, std::span<const double> stderr_values) {
  const std::size_t n = t.size();
  if (value.size() != n || (!stderr_values.empty() && stderr_values.size() != n))
    throw InvalidInput("extract_rate: length mismatch");
  if (n < 3) throw InvalidInput("extract_rate: need at least three samples");
  if (!(policy.upper > policy.lower && policy.lower > 0.0))
    throw InvalidInput("extract_rate: window bounds must satisfy upper > lower > 0");
  const double v0 = std::abs(value[0]);
  if (!(v0 > 0.0)) throw InvalidInput("extract_rate: series starts at zero");

  std::vector<double> ratio(n), logv(n), w;
  for (std::size_t i = 0; i < n; ++i) {
    ratio[i] = std::abs(value[i]) / v0;
    logv[i] = std::log(std::max(std::abs(value[i]), std::numeric_limits<double>::min()));
  }
  if (!stderr_values.empty()) {
    w.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double s = stderr_values[i];
      w[i] = s > 0 ? (value[i] * value[i]) / (s * s) : 1.0;
    }
  }
  const Window win = find_window(ratio, policy);
  RateFit fit = fit_window(t, logv, w, win.begin, win.end);

  // error bar: shift the window by +-shift_fraction of its length
  const auto len = static_cast<double>(win.end - win.begin);
  const auto shift = static_cast<std::ptrdiff_t>(std::llround(policy.shift_fraction * len));
  double lo = fit.rate, hi = fit.rate;
  for (std::ptrdiff_t s : {-shift, shift}) {
    const std::ptrdiff_t b = static_cast<std::ptrdiff_t>(win.begin) + s;
    const std::ptrdiff_t e = static_cast<std::ptrdiff_t>(win.end) + s;
    const std::ptrdiff_t bb = std::max<std::ptrdiff_t>(b, 0);
    const std::ptrdiff_t ee = std::min<std::ptrdiff_t>(e, static_cast<std::ptrdiff_t>(n) - 1);
    if (ee - bb < 2) continue;
    const double r = fit_window(t, logv, w, static_cast<std::size_t>(bb),
                                static_cast<std::size_t>(ee)).rate;
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  fit.error = 0.5 * (hi - lo);
  return fit;
}

std::string to_string(ScalingModel m) {
  return m == ScalingModel::Quadratic ? "quadratic" : "log-enhanced";
}

double ScalingLaw::predict(double delta) const {
  const double d2 = delta * delta;
  if (model == ScalingModel::Quadratic) return a * d2;
  if (degenerate) return a * d2;  // a holds c on the boundary
  return a * d2 * std::log(b / d2);
}

namespace {

// log-enhanced law in linear parameters: rate / Delta^2 = a * ell + c,
// ell = log Delta^-2, c = a log b.
double log_ssr(std::span<const RatePoint> pts, double a, double c) {
  double s = 0;
  for (const auto& p : pts) {
    const double ell = -2.0 * std::log(p.delta);
    const double m = a * ell + c;
    if (!(m > 0)) return std::numeric_limits<double>::infinity();
    const double r = std::log(m) - std::log(p.rate / (p.delta * p.delta));
    s += r * r;
  }
  return s;
}

}  // namespace

ScalingComparison fit_scaling(std::span<const RatePoint> rates) {
  if (rates.size() < 5) throw InvalidInput("fit_scaling: need at least 5 (Delta, rate) points");
  double dmin = std::numeric_limits<double>::infinity(), dmax = 0;
  for (const auto& p : rates) {
    if (!(p.delta > 0 && p.rate > 0))
      throw InvalidInput("fit_scaling: Delta and rate must be positive");
    dmin = std::min(dmin, p.delta);
    dmax = std::max(dmax, p.delta);
  }
  // span measured on the Delta^2 axis the rates are plotted against
  if (dmax * dmax < 4.0 * dmin * dmin)
    throw InvalidInput("fit_scaling: Delta^2 range must span a factor of 4");

  // Sort so results do not depend on input order.
  std::vector<RatePoint> pts(rates.begin(), rates.end());
  std::sort(pts.begin(), pts.end(), [](const RatePoint& x, const RatePoint& y) {
    return x.delta < y.delta || (x.delta == y.delta && x.rate < y.rate);
  });

  ScalingComparison out;
  {
    double s = 0;
    for (const auto& p : pts) s += std::log(p.rate) - 2.0 * std::log(p.delta);
    const double logc = s / static_cast<double>(pts.size());
    double ssr = 0;
    for (const auto& p : pts) {
      const double r = logc + 2.0 * std::log(p.delta) - std::log(p.rate);
      ssr += r * r;
    }
    out.quadratic = {ScalingModel::Quadratic, std::exp(logc), 0.0, ssr, true, false, false};
  }

  // Linear start in the (Delta^2 log Delta^-2, Delta^2) basis, relative weights.
  std::vector<double> ell, y, w;
  for (const auto& p : pts) {
    ell.push_back(-2.0 * std::log(p.delta));
    y.push_back(p.rate / (p.delta * p.delta));
    w.push_back(1.0 / (y.back() * y.back()));
  }
  const LineFit lin = fit_line(ell, y, w);
  double a = lin.slope, c = lin.intercept;

  // Gauss-Newton on log residuals with step halving.
  bool converged = false;
  double ssr = log_ssr(pts, a, c);
  if (!std::isfinite(ssr)) {
    a = 0.0;
    c = out.quadratic.a;
    ssr = log_ssr(pts, a, c);
  }
  for (int it = 0; it < 200; ++it) {
    Eigen::Matrix2d jtj = Eigen::Matrix2d::Zero();
    Eigen::Vector2d jtr = Eigen::Vector2d::Zero();
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const double m = a * ell[i] + c;
      const double r = std::log(m) - std::log(y[i]);
      Eigen::Vector2d g(ell[i] / m, 1.0 / m);
      jtj += g * g.transpose();
      jtr += g * r;
    }
    Eigen::Vector2d step = jtj.ldlt().solve(-jtr);
    if (!step.allFinite()) break;
    double lambda = 1.0;
    bool moved = false;
    for (int h = 0; h < 40; ++h, lambda *= 0.5) {
      const double na = a + lambda * step(0), nc = c + lambda * step(1);
      const double ns = log_ssr(pts, na, nc);
      if (ns <= ssr) {
        const double change = std::abs(ssr - ns);
        a = na;
        c = nc;
        ssr = ns;
        moved = true;
        if (change <= 1e-15 * std::max(1.0, ssr) && lambda * step.norm() < 1e-12 * (1 + std::abs(a) + std::abs(c)))
          converged = true;
        break;
      }
    }
    if (!moved || lambda * step.norm() < 1e-13 * (1 + std::abs(a) + std::abs(c))) {
      converged = true;
      break;
    }
    if (converged) break;
  }

  ScalingLaw le;
  le.model = ScalingModel::LogEnhanced;
  le.converged = converged && std::isfinite(ssr);
  if (a > 0) {
    le.a = a;
    le.b = std::exp(c / a);
    le.ssr = ssr;
    for (const auto& p : pts)
      if (le.b / (p.delta * p.delta) <= 1.0) le.unidentifiable = true;
  } else {
    // best fit wants a <= 0: the constrained optimum is the a -> 0 boundary
    le.degenerate = true;
    le.unidentifiable = true;
    le.a = out.quadratic.a;
    le.b = std::numeric_limits<double>::infinity();
    le.ssr = out.quadratic.ssr;
  }
  out.log_enhanced = le;

  const double margin = 1e-9 * out.quadratic.ssr + 1e-24;
  out.preferred = (!le.degenerate && le.converged && le.ssr < out.quadratic.ssr - margin)
                      ? ScalingModel::LogEnhanced
                      : ScalingModel::Quadratic;
  return out;
}

double inverse_tau(double delta, TimeScale scale) {
  const double d2 = delta * delta;
  return scale == TimeScale::DeltaSquared ? d2 : d2 * std::log(1.0 / d2);
}

namespace {

double interpolate(std::span<const double> x, std::span<const double> y, double at) {
  auto it = std::lower_bound(x.begin(), x.end(), at);
  if (it == x.begin()) return y.front();
  if (it == x.end()) return y.back();
  const auto j = static_cast<std::size_t>(it - x.begin());
  const double f = (at - x[j - 1]) / (x[j] - x[j - 1]);
  return y[j - 1] + f * (y[j] - y[j - 1]);
}

}  // namespace

CollapseResult collapse_table(std::span<const Series> series, std::span<const double> tau,
                              double value_low, double value_high) {
  if (tau.size() != series.size()) throw InvalidInput("collapse_table: one tau per series");
  CollapseResult out;
  std::vector<std::vector<double>> xs(series.size());
  for (std::size_t s = 0; s < series.size(); ++s) {
    const auto& sr = series[s];
    if (sr.t.size() != sr.value.size()) throw InvalidInput("collapse_table: length mismatch");
    if (!(tau[s] > 0)) throw InvalidInput("collapse_table: tau must be positive");
    for (std::size_t i = 0; i < sr.t.size(); ++i) {
      xs[s].push_back(sr.t[i] / tau[s]);
      out.rows.push_back({sr.delta, xs[s].back(), sr.value[i]});
    }
  }
  double metric = 0;
  for (std::size_t i = 0; i < series.size(); ++i) {
    for (std::size_t j = 0; j < series.size(); ++j) {
      if (i == j || xs[j].empty()) continue;
      const double lo = xs[j].front(), hi = xs[j].back();
      for (std::size_t n = 0; n < xs[i].size(); ++n) {
        const double v = series[i].value[n];
        if (v < value_low || v > value_high) continue;
        if (xs[i][n] < lo || xs[i][n] > hi) continue;
        metric = std::max(metric, std::abs(v - interpolate(xs[j], series[j].value, xs[i][n])));
      }
    }
  }
  out.metric = metric;
  return out;
}

CollapseResult collapse_table(std::span<const Series> series, TimeScale scale,
                              double value_low, double value_high) {
  std::vector<double> tau;
  for (const auto& s : series) tau.push_back(1.0 / inverse_tau(s.delta, scale));
  return collapse_table(series, tau, value_low, value_high);
}

std::vector<double> log_derivative(std::span<const double> t, std::span<const double> y) {
  const std::size_t n = t.size();
  if (y.size() != n) throw InvalidInput("log_derivative: length mismatch");
  std::vector<double> d(n, std::numeric_limits<double>::quiet_NaN());
  auto lt = [&](std::size_t i) { return std::log(t[i]); };
  auto ly = [&](std::size_t i) { return std::log(std::abs(y[i])); };
  for (std::size_t i = 0; i < n; ++i) {
    if (!(t[i] > 0)) continue;
    const std::size_t a = (i > 0 && t[i - 1] > 0) ? i - 1 : i;
    const std::size_t b = i + 1 < n ? i + 1 : i;
    if (a == b) continue;
    d[i] = (ly(b) - ly(a)) / (lt(b) - lt(a));
  }
  return d;
}

}  // namespace qplife::analysis
