#include "qplife/model.hpp"

#include <cmath>
#include <istream>
#include <memory>
#include <sstream>

#include "qplife/error.hpp"

namespace qplife {

double epsilon_cosine(double k) { return -std::cos(k); }

Dispersion Dispersion::cosine() {
  Dispersion d;
  d.kind_ = Kind::Cosine;
  d.value_ = [](double k) { return -std::cos(k); };
  d.d1_ = [](double k) { return std::sin(k); };
  d.d2_ = [](double k) { return std::cos(k); };
  return d;
}

Dispersion Dispersion::staggered(double h, bool upper) {
  Dispersion d;
  d.kind_ = upper ? Kind::StaggeredUpper : Kind::StaggeredLower;
  const double s = upper ? 1.0 : -1.0;
  const double h2 = 4.0 * h * h;
  // omega^2 = (1 + cos k)/2 + 4h^2;  omega' = -sin k / (4 omega)
  d.value_ = [=](double k) { return s * band_frequency(k, h); };
  d.d1_ = [=](double k) {
    const double w = band_frequency(k, h);
    if (w == 0.0) return 0.0;
    return s * (-std::sin(k) / (4.0 * w));
  };
  d.d2_ = [=](double k) {
    const double w = std::sqrt((1.0 + std::cos(k)) / 2.0 + h2);
    if (w == 0.0) return 0.0;
    const double w1 = -std::sin(k) / (4.0 * w);
    return s * (-std::cos(k) / (4.0 * w) - w1 * w1 / w);
  };
  return d;
}

Dispersion Dispersion::table(std::vector<double> values) {
  const std::size_t n = values.size();
  if (n < 4) throw InvalidInput("Dispersion::table: need at least 4 samples");
  // Real trigonometric interpolant through the samples.
  std::vector<cplx> x(values.begin(), values.end());
  auto coeff = forward_transform(x, n);
  const double norm = 1.0 / std::sqrt(static_cast<double>(n));
  for (auto& c : coeff) c *= norm;
  struct Series {
    std::vector<cplx> c;
    double eval(double k, int order) const {
      const auto n = static_cast<long>(c.size());
      double acc = 0.0;
      for (long j = 0; j < n; ++j) {
        long m = j <= n / 2 ? j : j - n;
        double w = 1.0;
        if (2 * j == n) w = 0.5;  // split Nyquist between +-n/2
        cplx term = c[static_cast<std::size_t>(j)] * std::exp(kI * (double(m) * k));
        cplx factor = std::pow(kI * double(m), order);
        acc += w * (factor * term).real();
        if (2 * j == n) {
          cplx t2 = c[static_cast<std::size_t>(j)] * std::exp(-kI * (double(m) * k));
          acc += w * (std::pow(-kI * double(m), order) * t2).real();
        }
      }
      return acc;
    }
  };
  auto s = std::make_shared<Series>(Series{std::move(coeff)});
  Dispersion d;
  d.kind_ = Kind::Table;
  d.value_ = [s](double k) { return s->eval(k, 0); };
  d.d1_ = [s](double k) { return s->eval(k, 1); };
  d.d2_ = [s](double k) { return s->eval(k, 2); };
  return d;
}

Dispersion Dispersion::parse_table(std::istream& in) {
  std::vector<double> ks, es;
  std::string line;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream row(line);
    double k, e;
    if (!(row >> k)) continue;
    if (!(row >> e)) throw InvalidInput("dispersion table: row without energy: " + line);
    ks.push_back(k);
    es.push_back(e);
  }
  const std::size_t n = ks.size();
  if (n < 4) throw InvalidInput("dispersion table: need at least 4 rows");
  const double dk = 2.0 * kPi / static_cast<double>(n);
  for (std::size_t j = 0; j < n; ++j) {
    if (std::abs(ks[j] - dk * static_cast<double>(j)) > 1e-6)
      throw InvalidInput("dispersion table: rows must lie on the uniform grid 2 pi j / n");
  }
  return table(std::move(es));
}

std::string Dispersion::tag() const {
  switch (kind_) {
    case Kind::Cosine: return "cosine";
    case Kind::StaggeredLower: return "staggered-";
    case Kind::StaggeredUpper: return "staggered+";
    case Kind::Table: return "table";
  }
  return "unknown";
}

void TwoBandParams::validate() const {
  if (!(delta >= 0.0)) throw InvalidInput("interaction strength Delta must be >= 0");
  if (!std::isfinite(h)) throw InvalidInput("staggered field h must be finite");
}

Block two_band_matrix(double k, double h) {
  Block e;
  e(0, 0) = 2.0 * h;
  e(1, 1) = -2.0 * h;
  e(0, 1) = -0.5 * (1.0 + std::exp(-kI * k));
  e(1, 0) = -0.5 * (1.0 + std::exp(kI * k));
  return e;
}

double band_frequency(double k, double h) {
  return std::sqrt(std::max(0.0, (1.0 + std::cos(k)) / 2.0 + 4.0 * h * h));
}

namespace {
// sin(w t) / w, continuous through w = 0
double sin_over(double w, double t) {
  const double x = w * t;
  if (std::abs(x) < 1e-4) return t * (1.0 - x * x / 6.0 + x * x * x * x / 120.0);
  return std::sin(x) / w;
}
}  // namespace

Block free_propagator(double k, double t, double h) {
  const double w = band_frequency(k, h);
  // e^{-i eps t} = cos(wt) I - i sin(wt)/w eps, since eps^2 = w^2 I
  Block g = std::cos(w * t) * Block::Identity() - kI * sin_over(w, t) * two_band_matrix(k, h);
  return 0.5 * g;
}

double vertex_v(double q, double p, double delta) { return delta * (std::cos(q) - std::cos(p)); }

cplx unit_cell_reduce(const Block& g, double k) {
  return 0.5 * (g(0, 0) + g(1, 1) + std::exp(kI * k) * g(0, 1) + std::exp(-kI * k) * g(1, 0));
}

Block band_basis(double k, double h) {
  const double w = band_frequency(k, h);
  if (w < 1e-14) return Block::Identity();
  // Explicit eigenvectors of [[2h, c],[c*, -2h]] with c = -(1+e^{-ik})/2.
  const cplx c = -0.5 * (1.0 + std::exp(-kI * k));
  Block u;
  for (int b = 0; b < 2; ++b) {
    const double lam = b == 0 ? -w : w;
    // (2h - lam) x + c y = 0  ->  x = c, y = lam - 2h   (or the other row when degenerate)
    Eigen::Vector2cd v(c, lam - 2.0 * h);
    if (v.norm() < 1e-10) v = Eigen::Vector2cd(lam + 2.0 * h, std::conj(c));
    v.normalize();
    // fix phase: first nonzero component real and positive
    const cplx lead = std::abs(v(0)) > 1e-12 ? v(0) : v(1);
    v *= std::conj(lead) / std::abs(lead);
    u.col(b) = v;
  }
  return u;
}

Block quasiparticle_basis(const Block& g, double k, double h) {
  if (band_frequency(k, h) < 1e-12)
    throw InvalidInput(
        "quasiparticle_basis: bands touch at this (k, h); use unit_cell_reduce for h = 0");
  const Block u = band_basis(k, h);
  return u.adjoint() * g * u;
}

}  // namespace qplife
