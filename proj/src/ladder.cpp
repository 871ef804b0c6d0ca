#include "qplife/ladder.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>

#include "qplife/error.hpp"

namespace qplife::ladder {

cplx f_onshell(int n, double q, double k) {
  const double cq = std::cos(q);
  const double s = std::sin(q - k);
  const double c = std::cos(q - k);
  if (std::abs(cq) < 1e-14 || std::abs(s) < 1e-14)
    throw SingularPoint("f_onshell: cos q or sin(q-k) vanishes");
  const double denom = 8.0 * std::abs(cq * s);
  if (n == 0) return {1.0 / denom, 0.0};
  if (n == 2) return {(c * c - s * s) / denom, -c / (4.0 * cq)};
  throw InvalidInput("f_onshell: n must be 0 or 2");
}

double rate_integrand(double q, double k, double delta) {
  const double s = std::sin(q - k);
  const double c = std::cos(q - k);
  const double cq = std::cos(q);
  const double a = 4.0 * cq - delta * c;
  const double b = delta * s;
  const double den = a * a + b * b;
  if (den == 0.0) return 0.0;  // numerator vanishes there as well
  return std::abs(s * s * s) * std::abs(cq) / den;
}

namespace {

struct GaussLegendre {
  std::vector<double> x, w;  // on [-1, 1]
  explicit GaussLegendre(int n) : x(n), w(n) {
    for (int i = 0; i < n; ++i) {
      double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = 0.0;
        for (int j = 1; j <= n; ++j) {
          const double p2 = p1;
          p1 = p0;
          p0 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p2) / j;
        }
        const double dp = n * (z * p0 - p1) / (z * z - 1.0);
        const double dz = p0 / dp;
        z -= dz;
        if (std::abs(dz) < 1e-16) {
          x[i] = z;
          w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
          break;
        }
        x[i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
      }
    }
  }
};

double wrap(double q) {
  double r = std::fmod(q, 2.0 * kPi);
  return r < 0 ? r + 2.0 * kPi : r;
}

// Panel edges on [0, 2pi): kinks plus geometric grading around each peak.
std::vector<double> panel_edges(double k, double delta, std::size_t n_panels_target) {
  std::vector<double> kinks = {kPi / 2, 3 * kPi / 2, wrap(k), wrap(k + kPi)};
  std::vector<double> edges = {0.0, 2.0 * kPi};
  for (double x : kinks) edges.push_back(x);
  // geometric grading: peak half-width ~ delta/4, refine from delta*1e-3 to 1
  const double w0 = std::max(delta, 1e-14) * 1e-3;
  for (double peak : {kPi / 2, 3 * kPi / 2}) {
    // the denominator's real part vanishes at 4 cos q = Delta cos(q - k); near
    // k = pi/2 its width there shrinks to ~Delta^2
    double q = peak;
    for (int it = 0; it < 50; ++it) {
      const double g = 4.0 * std::cos(q) - delta * std::cos(q - k);
      const double dg = -4.0 * std::sin(q) + delta * std::sin(q - k);
      const double dq = g / dg;
      q -= dq;
      if (std::abs(dq) < 1e-16) break;
    }
    const double width = std::max(delta * std::abs(std::sin(q - k)) / 4.0, 1e-14);
    for (double centre : {peak, q}) {
      const double start = centre == peak ? w0 : width * 1e-2;
      for (double s = start; s < 0.5; s *= 2.0) {
        edges.push_back(wrap(centre - s));
        edges.push_back(wrap(centre + s));
      }
    }
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end(),
                          [](double a, double b) { return std::abs(a - b) < 1e-15; }),
              edges.end());
  // subdivide long panels uniformly to use the node budget
  std::vector<double> out;
  const std::size_t base = edges.size() - 1;
  const double span_target = 2.0 * kPi / static_cast<double>(std::max(n_panels_target, base));
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    const double a = edges[i], b = edges[i + 1];
    const auto m = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil((b - a) / span_target)));
    for (std::size_t j = 0; j < m; ++j) out.push_back(a + (b - a) * static_cast<double>(j) / static_cast<double>(m));
  }
  out.push_back(2.0 * kPi);
  return out;
}

double integrate(double k, double delta, const std::vector<double>& edges, int order,
                 std::size_t* peak_nodes, std::vector<double>* sq, std::vector<double>* sv) {
  const GaussLegendre gl(order);
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    const double a = edges[i], b = edges[i + 1];
    const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
    double panel = 0.0;
    for (int j = 0; j < order; ++j) {
      const double q = mid + half * gl.x[j];
      const double f = rate_integrand(q, k, delta);
      panel += gl.w[j] * f;
      if (peak_nodes && (std::abs(q - kPi / 2) < delta || std::abs(q - 3 * kPi / 2) < delta))
        ++*peak_nodes;
    }
    if (sq) {
      sq->push_back(mid);
      sv->push_back(rate_integrand(mid, k, delta));
    }
    acc += half * panel;
  }
  return acc;
}

}  // namespace

LadderResult ladder_rate(double k, double delta, const QuadratureOptions& opt) {
  if (!(delta > 0.0)) throw InvalidInput("ladder_rate: Delta must be positive");
  if (opt.resolution < (1u << 14))
    throw InvalidInput("ladder_rate: resolution must be at least 2^14 nodes");
  if (opt.order < 4) throw InvalidInput("ladder_rate: panel order must be at least 4");
  const std::size_t panels = opt.resolution / static_cast<std::size_t>(opt.order);
  const auto edges = panel_edges(k, delta, panels);

  LadderResult r;
  r.k = k;
  r.delta = delta;
  std::size_t peak_nodes = 0;
  const double base = integrate(k, delta, edges, opt.order, &peak_nodes, &r.sample_q,
                                &r.sample_integrand);
  if (peak_nodes < 16)  // 8 per peak
    throw InvalidInput("ladder_rate: the Delta-wide peaks are sampled by fewer than 8 nodes; "
                       "raise the resolution");
  const double fine = integrate(k, delta, edges, 2 * opt.order, nullptr, nullptr, nullptr);
  const double pref = 16.0 * delta * delta / (2.0 * kPi);
  r.rate = pref * fine;
  r.quadrature_error = std::abs(fine - base) / std::abs(fine);
  return r;
}

LadderAsymptotics ladder_asymptotics(double k, std::span<const double> deltas,
                                     const QuadratureOptions& opt) {
  if (deltas.size() < 3) throw InvalidInput("ladder_asymptotics: need at least 3 Delta values");
  const auto [mn, mx] = std::minmax_element(deltas.begin(), deltas.end());
  if (!(*mn > 0) || *mx / *mn < 1e3 * (1 - 1e-12))
    throw InvalidInput("ladder_asymptotics: Delta values must span at least three decades");
  const auto n = static_cast<Eigen::Index>(deltas.size());
  Eigen::MatrixXd a(n, 2);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double d = deltas[static_cast<std::size_t>(i)];
    const double rate = ladder_rate(k, d, opt).rate;
    a(i, 0) = std::log(1.0 / (d * d));
    a(i, 1) = 1.0;
    y(i) = rate / (d * d);
  }
  LadderAsymptotics out;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  out.condition_number = sv(0) / sv(sv.size() - 1);
  out.ill_conditioned = out.condition_number > 1e8;
  Eigen::Vector2d c = svd.solve(y);
  out.alpha = c(0);
  out.gamma = c(1);
  Eigen::VectorXd res = y - a * c;
  out.residuals.assign(res.data(), res.data() + res.size());
  return out;
}

}  // namespace qplife::ladder
