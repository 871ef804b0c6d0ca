#include <doctest.h>

#include <cmath>

#include "qplife/error.hpp"
#include "qplife/fgr.hpp"

using namespace qplife;
using namespace qplife::fgr;

namespace {

// Plain double sum over the L x L grid, written independently of the library.
double riemann_rate(double k, double delta, double eta, std::size_t L, bool boson = false,
                    double beta = 0.0, double mu = 0.0, int vertex = 0) {
  auto eps = [](double x) { return -std::cos(x); };
  auto occ = [&](double x) {
    if (beta == 0.0) return 0.5;
    const double z = std::exp(beta * (eps(x) - mu));
    return boson ? 1.0 / (z - 1.0) : 1.0 / (z + 1.0);
  };
  double sum = 0.0;
  for (std::size_t i = 0; i < L; ++i)
    for (std::size_t j = 0; j < L; ++j) {
      const double q = 2 * kPi * i / L, p = 2 * kPi * j / L;
      const double phi = eps(k) - eps(k + q) - eps(k + p) + eps(k + q + p);
      const double n1 = occ(k + q), n2 = occ(k + p), n3 = occ(k + q + p);
      const double a = boson ? n3 * (1 + n1 + n2) - n1 * n2 : n3 * (1 - n1 - n2) + n1 * n2;
      const double v = vertex == 0   ? std::cos(q) - std::cos(p)
                       : vertex == 1 ? std::cos(q) + std::cos(p)
                                     : 1.0;
      sum += v * v * a * eta / (phi * phi + eta * eta);
    }
  return 2.0 * delta * delta * sum / double(L) / double(L);
}

FgrRequest request(double k, double delta, double eta, std::size_t L) {
  FgrRequest r;
  r.k = k;
  r.delta = delta;
  r.eta = eta;
  r.n_sites = L;
  return r;
}

FgrRequest riemann(double k, double delta, double eta, std::size_t L) {
  auto r = request(k, delta, eta, L);
  r.quadrature = Quadrature::Riemann;
  return r;
}

}  // namespace

TEST_CASE("infinite temperature rate matches the double-sum oracle") {
  for (double k : {0.0, 0.4, kPi / 2}) {
    for (double eta : {0.01, 0.1}) {
      const auto r = riemann(k, 0.1, eta, 128);
      const double ref = riemann_rate(k, 0.1, eta, 128);
      CHECK(fgr_rate(r) == doctest::Approx(ref).epsilon(1e-10));
      const std::vector<double> e{eta};
      CHECK(fgr_rates_infinite_t(r, e)[0] == doctest::Approx(ref).epsilon(1e-10));
    }
  }
}

TEST_CASE("finite temperature fermions and bosons match the oracle") {
  auto r = riemann(0.3, 0.2, 0.05, 128);
  r.beta = 2.0;
  r.mu = 0.3;
  CHECK(fgr_rate(r) == doctest::Approx(riemann_rate(0.3, 0.2, 0.05, 128, false, 2.0, 0.3)).epsilon(1e-10));

  auto b = riemann(0.3, 0.2, 0.05, 128);
  b.statistics = Statistics::Boson;
  b.beta = 1.0;
  b.mu = -1.5;
  CHECK(b.effective_vertex() == Vertex::Symmetric);
  CHECK(fgr_rate(b) == doctest::Approx(riemann_rate(0.3, 0.2, 0.05, 128, true, 1.0, -1.5, 1)).epsilon(1e-10));
  b.vertex = Vertex::Constant;
  CHECK(fgr_rate(b) == doctest::Approx(riemann_rate(0.3, 0.2, 0.05, 128, true, 1.0, -1.5, 2)).epsilon(1e-10));
}

TEST_CASE("occupations") {
  CHECK(fermi(0.0, 0.0, 0.0) == 0.5);
  CHECK(fermi(1.0, 2.0, 0.0) == doctest::Approx(1.0 / (std::exp(2.0) + 1.0)));
  CHECK(bose(1.0, 1.0, 0.0) == doctest::Approx(1.0 / (std::exp(1.0) - 1.0)));
}

TEST_CASE("high temperature limit of the finite-T path") {
  auto r = request(0.7, 0.1, 0.02, 256);
  const std::vector<double> e{0.02};
  const double inf = fgr_rates_infinite_t(r, e)[0];
  r.beta = 1e-12;
  CHECK(std::abs(fgr_rate(r) - inf) / inf < 1e-10);
}

TEST_CASE("rate scales exactly as Delta^2") {
  const double a = fgr_rate(request(0.2, 0.1, 0.01, 256));
  const double b = fgr_rate(request(0.2, 0.2, 0.01, 256));
  CHECK(std::abs(b / a - 4.0) < 1e-13);
}

TEST_CASE("parity k -> -k at finite temperature") {
  auto r = request(0.5, 0.1, 0.02, 256);
  r.beta = 1.5;
  r.mu = -0.2;
  const double plus = fgr_rate(r);
  r.k = -0.5;
  CHECK(std::abs(fgr_rate(r) - plus) / plus < 1e-10);
}

TEST_CASE("k = pi/2 converges as eta shrinks") {
  const double k = kPi / 2;
  const double r1 = riemann_rate(k, 0.1, 0.05, 2048);
  const double r2 = riemann_rate(k, 0.1, 0.025, 2048);
  CHECK(std::abs(r2 - r1) / r2 < 0.02);
  const std::vector<double> etas{0.1, 0.05, 0.025};
  const auto lib = fgr_rates(riemann(k, 0.1, 0.1, 2048), etas);
  CHECK(lib[2] == doctest::Approx(r2).epsilon(1e-9));
}

TEST_CASE("logarithmic divergence at k = 0, none at k = pi/2") {
  const std::vector<double> etas{1e-1, 5e-2, 2e-2, 1e-2, 5e-3, 2e-3, 1e-3};
  const auto zero = log_slope(request(0.0, 0.1, 0.1, 2048), etas);
  CHECK(zero.c1 > 0.0);
  CHECK(zero.r2 > 0.999);
  const auto half = log_slope(request(kPi / 2, 0.1, 0.1, 2048), etas);
  CHECK(std::abs(half.c1) < 0.02 * half.c0);
}

TEST_CASE("cell quadrature on a coarse grid agrees with a fine Riemann sum") {
  for (double k : {0.0, 0.7, kPi / 2}) {
    const double fine = fgr_rate(riemann(k, 0.1, 0.01, 8192));
    const double cell = fgr_rate(request(k, 0.1, 0.01, 2048));
    CHECK(std::abs(cell - fine) / fine < 0.01);
  }
}

TEST_CASE("cell and Riemann quadrature agree when eta is well resolved") {
  for (double k : {0.0, 1.1}) {
    const double a = fgr_rate(riemann(k, 0.2, 0.3, 512));
    const double b = fgr_rate(request(k, 0.2, 0.3, 512));
    CHECK(std::abs(a - b) / a < 1e-4);
  }
}

TEST_CASE("log coefficient over Delta^2 is Delta independent") {
  const std::vector<double> etas{0.1, 0.05, 0.02, 0.01};
  std::vector<double> ratio;
  for (double d : {0.05, 0.1, 0.2}) ratio.push_back(log_slope(request(0.0, d, 0.1, 512), etas).c1 / (d * d));
  CHECK(std::abs(ratio[0] / ratio[1] - 1.0) < 0.01);
  CHECK(std::abs(ratio[2] / ratio[1] - 1.0) < 0.01);
}

TEST_CASE("grid refinement once eta resolves the grid") {
  const double eta = 0.1;  // > 10 (2 pi / 256)^2
  const double a = fgr_rate(request(0.3, 0.1, eta, 256));
  const double b = fgr_rate(request(0.3, 0.1, eta, 512));
  CHECK(std::abs(a - b) / b < 0.005);
}

TEST_CASE("rate grows as eta decreases away from pi/2") {
  const std::vector<double> etas{0.2, 0.1, 0.05, 0.02};
  const auto r = fgr_rates(request(0.3, 0.1, 0.2, 512), etas);
  for (std::size_t i = 1; i < r.size(); ++i) CHECK(r[i] > r[i - 1]);
  for (double v : r) CHECK(v >= 0.0);
}

TEST_CASE("invalid requests") {
  CHECK_THROWS_AS(fgr_rate(request(0.0, 0.1, 0.0, 128)), InvalidInput);
  CHECK_THROWS_AS(fgr_rate(request(0.0, 0.1, 0.1, 32)), InvalidInput);
  auto b = request(0.0, 0.1, 0.1, 128);
  b.statistics = Statistics::Boson;
  b.beta = 1.0;
  b.mu = 0.0;  // inside the band
  CHECK_THROWS_AS(fgr_rate(b), InvalidInput);
  const std::vector<double> few{0.1, 0.05, 0.02};
  CHECK_THROWS_AS(log_slope(request(0.0, 0.1, 0.1, 128), few), InvalidInput);
}

// ---- classifier ---------------------------------------------------------

namespace {

bool has_point(const DivergenceReport& r, double q, double p, PointKind kind) {
  auto gap = [](double a, double b) {
    double d = std::fmod(std::abs(a - b), 2 * kPi);
    return std::min(d, 2 * kPi - d);
  };
  for (const auto& s : r.points)
    if (gap(s.q, q) < 1e-8 && gap(s.p, p) < 1e-8 && s.kind == kind) return true;
  return false;
}

}  // namespace

TEST_CASE("cosine band stationary points") {
  for (double k : {0.1, 0.3, 1.0}) {
    const auto r = classify_cosine(k);
    CHECK(has_point(r, 0.0, kPi - 2 * k, PointKind::LogDivergent));
    CHECK(has_point(r, kPi - 2 * k, 0.0, PointKind::LogDivergent));
    CHECK(has_point(r, 0.0, 0.0, PointKind::Nullified));
    CHECK(r.count(PointKind::LogDivergent) == 2);
    CHECK(r.count(PointKind::Unresolved) == 0);
    for (const auto& s : r.points) {
      CHECK(std::abs(s.phi) < 1e-8);
      CHECK(std::abs(s.dphi_dq) < 1e-8);
      CHECK(std::abs(s.dphi_dp) < 1e-8);
    }
  }
  const auto merged = classify_cosine(kPi / 2);
  CHECK(merged.count(PointKind::LogDivergent) == 0);
  CHECK(merged.count(PointKind::Nullified) >= 1);
  CHECK(has_point(merged, 0.0, 0.0, PointKind::Nullified));
}

TEST_CASE("interband contact channel between two identical bands") {
  const double k = 0.3;
  const std::vector<Dispersion> bands{Dispersion::cosine(), Dispersion::cosine()};
  // species 0 at k scatters off species 1: out 0 at k+q, out 1 at k+p, hole 1 at k+q+p
  const std::vector<ScatteringChannel> ch{{0, 1, 0, 1, [](double, double) { return 1.0; }}};
  const auto r = classify_divergences(bands, k, ch);
  CHECK(r.count(PointKind::Nullified) == 0);
  CHECK(r.count(PointKind::LogDivergent) >= 1);

  // grid-scan oracle: every reported point is a near-zero of |phi| + |grad phi|
  const std::size_t L = 4096;
  auto resid = [&](double q, double p) {
    const double ph = -std::cos(k) - std::cos(k + q + p) + std::cos(k + q) + std::cos(k + p);
    const double gq = std::sin(k + q + p) - std::sin(k + q);
    const double gp = std::sin(k + q + p) - std::sin(k + p);
    return std::abs(ph) + std::abs(gq) + std::abs(gp);
  };
  for (const auto& s : r.points) {
    const std::size_t i = std::size_t(std::lround(s.q / (2 * kPi) * L)) % L;
    const std::size_t j = std::size_t(std::lround(s.p / (2 * kPi) * L)) % L;
    CHECK(resid(2 * kPi * i / L, 2 * kPi * j / L) < 10.0 * 2 * kPi / L);
    // velocity matching for the b != b' pair
    CHECK(std::abs(std::sin(k + s.p) - std::sin(k + s.q + s.p)) < 1e-8);
  }
  std::size_t oracle_zeros = 0;
  const double h = 2 * kPi / L;
  for (std::size_t i = 0; i < L; ++i)
    for (std::size_t j = 0; j < L; ++j) {
      const double v = resid(h * i, h * j);
      if (v > 4 * h) continue;
      bool local_min = true;
      for (int di = -1; di <= 1 && local_min; ++di)
        for (int dj = -1; dj <= 1; ++dj)
          if ((di || dj) && resid(h * double((i + L + di) % L), h * double((j + L + dj) % L)) < v)
            local_min = false;
      if (local_min) ++oracle_zeros;
    }
  CHECK(oracle_zeros == r.points.size());
}
