#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <sstream>

#include "qplife/error.hpp"
#include "qplife/model.hpp"

using namespace qplife;

namespace {

// (1/2) exp(-i eps t) through a Hermitian eigendecomposition
Block propagator_by_eig(double k, double t, double h) {
  Eigen::SelfAdjointEigenSolver<Block> es(two_band_matrix(k, h));
  Block d = Block::Zero();
  for (int i = 0; i < 2; ++i) d(i, i) = std::exp(-kI * (es.eigenvalues()(i) * t));
  return 0.5 * es.eigenvectors() * d * es.eigenvectors().adjoint();
}

double max_abs(const Block& b) { return b.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("cosine dispersion") {
  CHECK(epsilon_cosine(0.0) == -1.0);
  CHECK(std::abs(epsilon_cosine(kPi / 2)) < 1e-16);
  CHECK(epsilon_cosine(kPi) == 1.0);
  auto d = Dispersion::cosine();
  CHECK(std::abs(d(0.0) - d(2 * kPi)) < 1e-12);
  CHECK(d.d1(0.3) == doctest::Approx(std::sin(0.3)));
  CHECK(d.d2(0.3) == doctest::Approx(std::cos(0.3)));
  CHECK(d.tag() == "cosine");
}

TEST_CASE("tabulated dispersion interpolates a band-limited function") {
  const std::size_t n = 32;
  std::vector<double> v(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double k = 2 * kPi * j / n;
    v[j] = -std::cos(k) + 0.3 * std::cos(2 * k);
  }
  auto d = Dispersion::table(v);
  for (double k : {0.1, 1.234, 4.0}) {
    CHECK(d(k) == doctest::Approx(-std::cos(k) + 0.3 * std::cos(2 * k)).epsilon(1e-12));
    CHECK(d.d1(k) == doctest::Approx(std::sin(k) - 0.6 * std::sin(2 * k)).epsilon(1e-10));
  }
  std::ostringstream text;
  text.precision(17);
  text << "# k eps\n";
  for (std::size_t j = 0; j < n; ++j) text << 2 * kPi * j / n << " " << v[j] << "\n";
  std::istringstream in(text.str());
  auto p = Dispersion::parse_table(in);
  CHECK(p(0.7) == doctest::Approx(d(0.7)).epsilon(1e-10));
  std::istringstream bad("0 1\n0.5 2\n1.0 3\n1.5 4\n");
  CHECK_THROWS_AS(Dispersion::parse_table(bad), InvalidInput);
}

TEST_CASE("two-band eigenvalues") {
  auto eig = [](double k, double h) {
    return Eigen::SelfAdjointEigenSolver<Block>(two_band_matrix(k, h)).eigenvalues();
  };
  CHECK(eig(0, 0)(0) == doctest::Approx(-1.0));
  CHECK(eig(0, 0)(1) == doctest::Approx(1.0));
  CHECK(eig(kPi, 0.5)(1) == doctest::Approx(1.0));
  CHECK(std::abs(eig(kPi, 0.0)(0)) < 1e-15);
  CHECK(std::abs(eig(kPi, 0.0)(1)) < 1e-15);
  for (int j = 0; j < 64; ++j) {
    const double k = 2 * kPi * j / 64;
    for (double h : {0.0, 0.2, 0.5}) {
      auto e = eig(k, h);
      CHECK(std::abs(e(1) - band_frequency(k, h)) < 1e-12);
      CHECK(std::abs(e(0) + band_frequency(k, h)) < 1e-12);
    }
  }
}

TEST_CASE("free propagator matches matrix exponential") {
  for (double h : {0.0, 0.3}) {
    for (int j = 0; j < 16; ++j) {
      const double k = 2 * kPi * j / 16;
      for (double t : {0.0, 0.7, 3.0, 25.0})
        CHECK(max_abs(free_propagator(k, t, h) - propagator_by_eig(k, t, h)) < 1e-12);
    }
  }
  const Block g = free_propagator(1.1, 4.0, 0.2);
  CHECK(max_abs(g * g.adjoint() - 0.25 * Block::Identity()) < 1e-14);
  CHECK(max_abs(free_propagator(0.4, 0.0, 0.7) - 0.5 * Block::Identity()) == 0.0);
}

TEST_CASE("free propagator closed form at h=0") {
  const double k = 0.9, t = 2.3;
  const double w = std::abs(std::cos(k / 2));
  const Block g = free_propagator(k, t, 0.0);
  CHECK(std::abs(g(0, 0) - 0.5 * std::cos(w * t)) < 1e-14);
  CHECK(std::abs(g(0, 1) - 0.5 * kI * std::exp(-kI * k / 2.0) * std::cos(k / 2) * std::sin(w * t) / w) < 1e-14);
  CHECK(std::abs(g(1, 0) - 0.5 * kI * std::exp(kI * k / 2.0) * std::cos(k / 2) * std::sin(w * t) / w) < 1e-14);
}

TEST_CASE("band touching uses the analytic limit") {
  const Block g = free_propagator(kPi, 3.0, 0.0);
  CHECK(max_abs(g - 0.5 * Block::Identity()) < 1e-14);
  // approach from a nearby momentum: sin(wt)/w -> t
  const Block near = free_propagator(kPi - 1e-7, 3.0, 0.0);
  CHECK(max_abs(near - g) < 1e-6);
}

TEST_CASE("free equation of motion by finite differences") {
  const double k = 0.8, h = 0.25, t = 1.7, dt = 1e-4;
  const Block d = (free_propagator(k, t + dt, h) - free_propagator(k, t - dt, h)) / (2 * dt);
  const Block rhs = -kI * two_band_matrix(k, h) * free_propagator(k, t, h);
  CHECK(max_abs(d - rhs) < 1e-7);
}

TEST_CASE("vertex") {
  CHECK(vertex_v(0.4, 0.4, 0.3) == 0.0);
  CHECK(vertex_v(0.0, kPi, 1.0) == doctest::Approx(2.0));
  CHECK(std::abs(vertex_v(kPi / 2, -kPi / 2, 1.0)) < 1e-16);
  CHECK(vertex_v(0.2, 1.3, 0.5) == doctest::Approx(-vertex_v(1.3, 0.2, 0.5)));
}

TEST_CASE("unit-cell reduction reproduces the single-band free propagator") {
  CHECK(std::abs(unit_cell_reduce(0.5 * Block::Identity(), 0.0) - cplx(0.5)) < 1e-15);
  double err = 0.0;
  for (int j = 0; j < 32; ++j) {
    const double k = 2 * kPi * j / 32;
    for (double t = 0.0; t <= 100.0; t += 0.5) {
      const cplx g = unit_cell_reduce(free_propagator(2 * k, t, 0.0), k);
      err = std::max(err, std::abs(g - 0.5 * std::exp(kI * std::cos(k) * t)));
    }
  }
  CHECK(err < 1e-9);
}

TEST_CASE("unit-cell reduction at large h is dominated by the diagonal") {
  const double h = 50.0, k = 0.6, t = 0.37;
  const Block g = free_propagator(2 * k, t, h);
  const cplx diag = 0.5 * (g(0, 0) + g(1, 1));
  CHECK(std::abs(unit_cell_reduce(g, k) - diag) < 1.0 / h);
  CHECK(std::abs(g(0, 1)) < 0.01);
}

TEST_CASE("quasiparticle basis") {
  const double h = 0.5, k = 0.0;
  for (double t : {0.0, 1.0, 7.5}) {
    const Block qp = quasiparticle_basis(free_propagator(k, t, h), k, h);
    CHECK(std::abs(qp(0, 1)) < 1e-10);
    CHECK(std::abs(qp(1, 0)) < 1e-10);
    const double w = std::sqrt(2.0);
    CHECK(std::abs(qp(0, 0) - 0.5 * std::exp(kI * w * t)) < 1e-12);
    CHECK(std::abs(qp(1, 1) - 0.5 * std::exp(-kI * w * t)) < 1e-12);
  }
  CHECK_THROWS_AS(quasiparticle_basis(Block::Identity(), kPi, 0.0), InvalidInput);
  const Block u = band_basis(2.0, 0.3);
  CHECK(max_abs(u.adjoint() * u - Block::Identity()) < 1e-14);
  const Block d = u.adjoint() * two_band_matrix(2.0, 0.3) * u;
  CHECK(d(0, 0).real() == doctest::Approx(-band_frequency(2.0, 0.3)));
  CHECK(max_abs(band_basis(kPi, 0.0) - Block::Identity()) == 0.0);
}

TEST_CASE("parameter validation") {
  CHECK_THROWS_AS((TwoBandParams{0.0, -0.1}).validate(), InvalidInput);
  CHECK_NOTHROW((TwoBandParams{0.5, 0.1}).validate());
}
