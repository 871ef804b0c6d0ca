#include "qplife/fgr.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "qplife/analysis.hpp"
#include "qplife/error.hpp"

namespace qplife::fgr {

double fermi(double e, double beta, double mu) {
  if (beta == 0.0) return 0.5;
  const double x = beta * (e - mu);
  return x > 0 ? std::exp(-x) / (1.0 + std::exp(-x)) : 1.0 / (1.0 + std::exp(x));
}

double bose(double e, double beta, double mu) {
  const double x = beta * (e - mu);
  if (!(x > 0)) throw InvalidInput("bose: occupation diverges (need beta (eps - mu) > 0)");
  return 1.0 / std::expm1(x);
}

double vertex_value(Vertex v, double q, double p, double delta) {
  switch (v) {
    case Vertex::Antisymmetric: return delta * (std::cos(q) - std::cos(p));
    case Vertex::Symmetric: return delta * (std::cos(q) + std::cos(p));
    case Vertex::Constant: return delta;
  }
  return 0.0;
}

Vertex FgrRequest::effective_vertex() const {
  if (vertex) return *vertex;
  return statistics == Statistics::Fermion ? Vertex::Antisymmetric : Vertex::Symmetric;
}

void FgrRequest::validate() const {
  if (!(eta > 0.0)) throw InvalidInput("fgr: broadening eta must be positive");
  if (n_sites < 64) throw InvalidInput("fgr: grid needs at least 64 sites");
  (void)MomentumGrid(n_sites);
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw InvalidInput("fgr: beta must be finite and >= 0");
  if (statistics == Statistics::Boson) {
    if (beta == 0.0) throw InvalidInput("fgr: bosons need a finite temperature (beta > 0)");
    const MomentumGrid g(n_sites);
    for (std::size_t j = 0; j < n_sites; ++j)
      if (!(beta * (dispersion(k + g[j]) - mu) > 0.0))
        throw InvalidInput("fgr: bosonic occupation diverges; choose mu below the band bottom");
  }
}

namespace {

struct Tables {
  std::vector<double> e;    // eps(k + q_j)
  std::vector<double> n;    // occupation(k + q_j)
  std::vector<double> q;    // q_j
  double ek = 0.0;
};

Tables make_tables(const FgrRequest& req, bool infinite_t) {
  const MomentumGrid g(req.n_sites);
  Tables t;
  t.ek = req.dispersion(req.k);
  t.e.resize(req.n_sites);
  t.n.resize(req.n_sites);
  t.q = g.points();
  for (std::size_t j = 0; j < req.n_sites; ++j) {
    const double e = req.dispersion(req.k + g[j]);
    t.e[j] = e;
    if (infinite_t)
      t.n[j] = 0.5;
    else
      t.n[j] = req.statistics == Statistics::Fermion ? fermi(e, req.beta, req.mu)
                                                      : bose(e, req.beta, req.mu);
  }
  return t;
}

// integral of (E - a) eta / (E^2 + eta^2) over [a, b]
double ramp_up(double a, double b, double eta) {
  const double d = b - a;
  if (d == 0.0) return 0.0;
  if (d < 0.05 * eta) {
    const double x = a + 2.0 * d / 3.0;
    return 0.5 * d * d * eta / (x * x + eta * eta);
  }
  const double dlog = std::log1p((b * b - a * a) / (a * a + eta * eta));
  const double datan = std::atan2(d * eta, eta * eta + a * b);
  return 0.5 * eta * dlog - a * datan;
}

// integral of (b - E) eta / (E^2 + eta^2) over [a, b]
double ramp_down(double a, double b, double eta) { return ramp_up(-b, -a, eta); }

// Average of eta / (phi^2 + eta^2) over a triangle on which phi is linear.
double triangle_mean(double p1, double p2, double p3, double eta) {
  if (p1 > p2) std::swap(p1, p2);
  if (p2 > p3) std::swap(p2, p3);
  if (p1 > p2) std::swap(p1, p2);
  const double w = p3 - p1;
  if (w < 1e-14 * eta) {
    const double m = (p1 + p2 + p3) / 3.0;
    return eta / (m * m + eta * eta);
  }
  double r = 0.0;
  if (p2 > p1) r += 2.0 * ramp_up(p1, p2, eta) / ((p2 - p1) * w);
  if (p3 > p2) r += 2.0 * ramp_down(p2, p3, eta) / ((p3 - p2) * w);
  return r;
}

std::vector<double> sum_rates(const FgrRequest& req, std::span<const double> etas,
                              bool infinite_t) {
  req.validate();
  for (double e : etas)
    if (!(e > 0.0)) throw InvalidInput("fgr: broadening eta must be positive");
  const Tables t = make_tables(req, infinite_t);
  const std::size_t L = req.n_sites;
  const Vertex vx = req.effective_vertex();
  const bool fermion = req.statistics == Statistics::Fermion;
  const std::size_t ne = etas.size();

  // numerator v^2 N and phase phi on grid row j
  auto fill_row = [&](std::size_t j, std::vector<double>& num, std::vector<double>& phi) {
    const double e1 = t.e[j], n1 = t.n[j];
    for (std::size_t l = 0; l < L; ++l) {
      const std::size_t jl = (j + l) % L;
      const double e2 = t.e[l], n2 = t.n[l];
      const double e3 = t.e[jl], n3 = t.n[jl];
      double w;
      if (infinite_t)
        w = 0.25;
      else if (fermion)
        w = n3 * (1.0 - n1 - n2) + n1 * n2;
      else
        w = n3 * (1.0 + n1 + n2) - n1 * n2;
      const double v = vertex_value(vx, t.q[j], t.q[l], req.delta);
      num[l] = v * v * w;
      phi[l] = t.ek - e1 - e2 + e3;
    }
  };

  // Per-row partial sums, reduced in a fixed order below (thread-count independent).
  std::vector<double> rows(L * ne, 0.0);
  const bool cells = req.quadrature == Quadrature::LinearCell;
#pragma omp parallel
  {
    std::vector<double> n0(L), f0(L), n1(L), f1(L);
#pragma omp for schedule(static)
    for (std::size_t j = 0; j < L; ++j) {
      std::vector<double> acc(ne, 0.0);
      fill_row(j, n0, f0);
      if (!cells) {
        for (std::size_t l = 0; l < L; ++l) {
          if (n0[l] == 0.0) continue;
          for (std::size_t m = 0; m < ne; ++m)
            acc[m] += n0[l] * etas[m] / (f0[l] * f0[l] + etas[m] * etas[m]);
        }
      } else {
        // cell [j, j+1] x [l, l+1] split into two triangles
        fill_row((j + 1) % L, n1, f1);
        for (std::size_t l = 0; l < L; ++l) {
          const std::size_t r = (l + 1) % L;
          const double wa = (n0[l] + n1[l] + n0[r]) / 3.0;
          const double wb = (n1[r] + n1[l] + n0[r]) / 3.0;
          for (std::size_t m = 0; m < ne; ++m) {
            if (wa != 0.0) acc[m] += 0.5 * wa * triangle_mean(f0[l], f1[l], f0[r], etas[m]);
            if (wb != 0.0) acc[m] += 0.5 * wb * triangle_mean(f1[r], f1[l], f0[r], etas[m]);
          }
        }
      }
      for (std::size_t m = 0; m < ne; ++m) rows[j * ne + m] = acc[m];
    }
  }
  std::vector<double> out(ne, 0.0);
  for (std::size_t j = 0; j < L; ++j)
    for (std::size_t m = 0; m < ne; ++m) out[m] += rows[j * ne + m];
  const double norm = 2.0 / (static_cast<double>(L) * static_cast<double>(L));
  for (auto& r : out) r *= norm;
  return out;
}

}  // namespace

std::vector<double> fgr_rates(const FgrRequest& req, std::span<const double> etas) {
  const bool inf_t = req.statistics == Statistics::Fermion && req.beta == 0.0;
  return sum_rates(req, etas, inf_t);
}

std::vector<double> fgr_rates_infinite_t(const FgrRequest& req, std::span<const double> etas) {
  if (req.statistics != Statistics::Fermion)
    throw InvalidInput("fgr: the infinite-temperature path is fermionic");
  return sum_rates(req, etas, true);
}

double fgr_rate(const FgrRequest& req) {
  const double eta[] = {req.eta};
  return fgr_rates(req, eta).front();
}

LogSlope log_slope(const FgrRequest& req, std::span<const double> etas) {
  if (etas.size() < 4) throw InvalidInput("log_slope: need at least 4 broadening values");
  for (std::size_t i = 1; i < etas.size(); ++i)
    if (!(etas[i] < etas[i - 1])) throw InvalidInput("log_slope: eta values must decrease");
  LogSlope out;
  out.etas.assign(etas.begin(), etas.end());
  out.rates = fgr_rates(req, etas);
  std::vector<double> x;
  for (double e : etas) x.push_back(std::log(1.0 / e));
  const auto lf = analysis::fit_line(x, out.rates);
  out.c0 = lf.intercept;
  out.c1 = lf.slope;
  out.r2 = lf.r2;
  return out;
}

// ---- classification -----------------------------------------------------

std::string to_string(PointKind k) {
  switch (k) {
    case PointKind::LogDivergent: return "log-divergent";
    case PointKind::Nullified: return "nullified";
    case PointKind::Unresolved: return "unresolved";
  }
  return "?";
}

std::size_t DivergenceReport::count(PointKind k) const {
  return static_cast<std::size_t>(
      std::count_if(points.begin(), points.end(), [k](const auto& p) { return p.kind == k; }));
}

namespace {

struct Phase {
  const Dispersion *eb, *e1, *e2, *e3;
  double k;
  double phi(double q, double p) const {
    return (*eb)(k) + (*e1)(k + q + p) - (*e2)(k + q) - (*e3)(k + p);
  }
  Eigen::Vector2d grad(double q, double p) const {
    const double d1 = e1->d1(k + q + p);
    return {d1 - e2->d1(k + q), d1 - e3->d1(k + p)};
  }
  Eigen::Matrix2d hess(double q, double p) const {
    const double h1 = e1->d2(k + q + p);
    Eigen::Matrix2d h;
    h << h1 - e2->d2(k + q), h1, h1, h1 - e3->d2(k + p);
    return h;
  }
};

double wrap(double x) {
  double r = std::fmod(x, 2.0 * kPi);
  if (r < 0) r += 2.0 * kPi;
  if (r >= 2.0 * kPi - 1e-12) r = 0.0;
  return r;
}

double periodic_gap(double a, double b) {
  const double d = std::abs(wrap(a) - wrap(b));
  return std::min(d, 2.0 * kPi - d);
}

}  // namespace

DivergenceReport classify_divergences(std::span<const Dispersion> bands, double k,
                                      std::span<const ScatteringChannel> channels,
                                      const ClassifyOptions& opt) {
  if (bands.empty()) throw InvalidInput("classify_divergences: no bands");
  if (opt.scan_points < 16) throw InvalidInput("classify_divergences: scan too coarse");
  if (!opt.occupation.empty() && opt.occupation.size() != bands.size())
    throw InvalidInput("classify_divergences: one occupation function per band");
  DivergenceReport report;
  const std::size_t n = opt.scan_points;
  const double h = 2.0 * kPi / static_cast<double>(n);

  for (std::size_t c = 0; c < channels.size(); ++c) {
    const auto& ch = channels[c];
    for (auto b : {ch.b, ch.b1, ch.b2, ch.b3})
      if (b >= bands.size()) throw InvalidInput("classify_divergences: channel band out of range");
    const Phase ph{&bands[ch.b], &bands[ch.b1], &bands[ch.b2], &bands[ch.b3], k};
    auto occ = [&](std::size_t band, double x) {
      return opt.occupation.empty() ? 0.5 : opt.occupation[band](x);
    };
    auto weight = [&](double q, double p) {
      const double v = ch.vertex ? ch.vertex(q, p) : 1.0;
      const double n1 = occ(ch.b2, k + q), n2 = occ(ch.b3, k + p), n3 = occ(ch.b1, k + q + p);
      const double w = opt.statistics == Statistics::Fermion ? n3 * (1 - n1 - n2) + n1 * n2
                                                             : n3 * (1 + n1 + n2) - n1 * n2;
      return v * v * w;
    };

    // coarse scan of the stationarity residual
    std::vector<double> res(n * n);
    double wmax = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        const double q = h * static_cast<double>(i), p = h * static_cast<double>(j);
        const auto g = ph.grad(q, p);
        const double f = ph.phi(q, p);
        res[i * n + j] = g.squaredNorm() + f * f;
        wmax = std::max(wmax, std::abs(weight(q, p)));
      }
    std::vector<StationaryPoint> found;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        const double r = res[i * n + j];
        bool is_min = true;
        for (int di = -1; di <= 1 && is_min; ++di)
          for (int dj = -1; dj <= 1; ++dj) {
            if (!di && !dj) continue;
            const std::size_t ii = (i + n - 1 + static_cast<std::size_t>(di + 1)) % n;
            const std::size_t jj = (j + n - 1 + static_cast<std::size_t>(dj + 1)) % n;
            if (res[ii * n + jj] < r) {
              is_min = false;
              break;
            }
          }
        if (!is_min) continue;
        // scale: a true root has residual O(h^2) at the nearest node
        if (r > 16.0 * h * h) continue;

        // Levenberg-Marquardt on grad phi = 0
        double q = h * static_cast<double>(i), p = h * static_cast<double>(j);
        Eigen::Vector2d g = ph.grad(q, p);
        double lambda = 1e-12;
        bool ok = false;
        for (int it = 0; it < opt.max_newton; ++it) {
          const Eigen::Matrix2d H = ph.hess(q, p);
          const Eigen::Matrix2d A = H.transpose() * H + lambda * Eigen::Matrix2d::Identity();
          const Eigen::Vector2d step = A.ldlt().solve(-H.transpose() * g);
          const double nq = q + step(0), np = p + step(1);
          const Eigen::Vector2d ng = ph.grad(nq, np);
          if (ng.norm() < g.norm() || ng.norm() == 0.0) {
            q = nq;
            p = np;
            g = ng;
            lambda = std::max(lambda * 0.1, 1e-15);
          } else {
            lambda *= 10.0;
          }
          if (g.norm() < 1e-15 || step.norm() < 1e-14) {
            ok = true;
            break;
          }
          if (lambda > 1e10) break;
        }
        q = wrap(q);
        p = wrap(p);
        StationaryPoint sp;
        sp.channel = c;
        sp.q = q;
        sp.p = p;
        sp.phi = ph.phi(q, p);
        g = ph.grad(q, p);
        sp.dphi_dq = g(0);
        sp.dphi_dp = g(1);
        const bool resolved = std::abs(sp.phi) < opt.tolerance &&
                              std::abs(sp.dphi_dq) < opt.tolerance &&
                              std::abs(sp.dphi_dp) < opt.tolerance;
        if (!resolved) {
          // off-shell critical points are not part of the report; keep only
          // candidates that were on-shell at the scan but failed to polish
          if (ok || std::abs(ph.phi(h * double(i), h * double(j))) > 4.0 * h) continue;
        }
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(ph.hess(q, p));
        for (int e = 0; e < 2; ++e) {
          const double ev = es.eigenvalues()(e);
          if (ev > 1e-8) ++sp.hessian_positive;
          if (ev < -1e-8) ++sp.hessian_negative;
        }
        sp.weight = weight(q, p);
        if (!resolved)
          sp.kind = PointKind::Unresolved;
        else
          sp.kind = std::abs(sp.weight) < 1e-10 * wmax ? PointKind::Nullified
                                                       : PointKind::LogDivergent;
        const bool dup = std::any_of(found.begin(), found.end(), [&](const auto& o) {
          return periodic_gap(o.q, sp.q) < 1e-6 && periodic_gap(o.p, sp.p) < 1e-6;
        });
        if (!dup) found.push_back(sp);
      }
    std::sort(found.begin(), found.end(), [](const auto& a, const auto& b) {
      return a.q < b.q || (a.q == b.q && a.p < b.p);
    });
    report.points.insert(report.points.end(), found.begin(), found.end());
  }
  return report;
}

DivergenceReport classify_cosine(double k, const ClassifyOptions& opt) {
  const Dispersion bands[] = {Dispersion::cosine()};
  const ScatteringChannel ch[] = {
      {0, 0, 0, 0, [](double q, double p) { return std::cos(q) - std::cos(p); }}};
  return classify_divergences(bands, k, ch, opt);
}

}  // namespace qplife::fgr
