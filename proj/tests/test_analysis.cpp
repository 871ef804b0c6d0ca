#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "qplife/analysis.hpp"
#include "qplife/error.hpp"

using namespace qplife;
using namespace qplife::analysis;

namespace {

std::vector<double> grid_t(double t_max, double dt) {
  std::vector<double> t;
  for (double x = 0; x <= t_max + 1e-9; x += dt) t.push_back(x);
  return t;
}

std::vector<RatePoint> synthetic(const std::vector<double>& ds, double a, double b, double noise,
                                 unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> nd(0.0, noise);
  std::vector<RatePoint> out;
  for (double d : ds) out.push_back({d, a * d * d * std::log(b / (d * d)) * (1.0 + nd(rng))});
  return out;
}

double log_ssr(const std::vector<RatePoint>& pts, double a, double b) {
  double s = 0;
  for (const auto& p : pts) {
    const double m = a * p.delta * p.delta * std::log(b / (p.delta * p.delta));
    if (!(m > 0)) return INFINITY;
    s += std::pow(std::log(p.rate) - std::log(m), 2);
  }
  return s;
}

}  // namespace

TEST_CASE("exact exponential") {
  const auto t = grid_t(100, 0.1);
  std::vector<double> v;
  for (double x : t) v.push_back(std::exp(-0.1 * x));
  const auto f = extract_rate(t, v);
  CHECK(std::abs(f.rate - 0.1) < 1e-6);
  CHECK(f.r2 == doctest::Approx(1.0));
  CHECK(f.t_end > f.t_begin);
  CHECK(f.error < 1e-9);
  CHECK(std::exp(-0.1 * f.t_begin) <= 0.2 + 1e-12);
}

TEST_CASE("oscillating exponential") {
  const auto t = grid_t(100, 0.1);
  std::vector<double> v;
  for (double x : t) v.push_back(std::exp(-0.1 * x) * (1 + 0.05 * std::cos(3 * x)));
  const auto f = extract_rate(t, v);
  CHECK(std::abs(f.rate / 0.1 - 1.0) < 0.02);
  CHECK(f.error > 0.0);
  CHECK(f.r2 < 1.0);
}

TEST_CASE("rate is invariant under rescaling of the series") {
  const auto t = grid_t(60, 0.1);
  std::vector<double> v, w;
  for (double x : t) {
    v.push_back(std::exp(-0.2 * x) * (1 + 0.1 * std::sin(x)));
    w.push_back(7.5 * v.back());
  }
  CHECK(extract_rate(t, v).rate == doctest::Approx(extract_rate(t, w).rate).epsilon(1e-12));
}

TEST_CASE("weights from standard errors") {
  const auto t = grid_t(60, 1.0);
  std::vector<double> v, s;
  for (double x : t) {
    v.push_back(std::exp(-0.15 * x));
    s.push_back(0.01 * v.back());
  }
  CHECK(extract_rate(t, v, {}, s).rate == doctest::Approx(0.15).epsilon(1e-9));
}

TEST_CASE("insufficient decay") {
  const auto t = grid_t(10, 0.1);
  const std::vector<double> flat(t.size(), 1.0);
  CHECK_THROWS_AS(extract_rate(t, flat), InsufficientDecay);
  std::vector<double> slow;
  for (double x : t) slow.push_back(std::exp(-0.2 * x));
  CHECK_THROWS_AS(extract_rate(t, slow), InsufficientDecay);
  WindowPolicy bad;
  bad.upper = 0.01;
  CHECK_THROWS_AS(extract_rate(t, slow, bad), InvalidInput);
}

TEST_CASE("line fit") {
  const std::vector<double> x{0, 1, 2, 3}, y{1, 3, 5, 7};
  const auto f = fit_line(x, y);
  CHECK(f.slope == doctest::Approx(2.0));
  CHECK(f.intercept == doctest::Approx(1.0));
  CHECK(f.r2 == doctest::Approx(1.0));
  const std::vector<double> same{1, 1, 1, 1};
  CHECK_THROWS_AS(fit_line(same, y), InvalidInput);
}

TEST_CASE("synthetic log-enhanced rates with 1% noise") {
  const std::vector<double> ds{0.02, 0.03, 0.05, 0.07, 0.1, 0.15, 0.2};
  for (unsigned seed : {1u, 2u, 3u, 4u}) {
    const auto pts = synthetic(ds, 6.7, 0.2, 0.01, seed);
    const auto s = fit_scaling(pts);
    CHECK(s.preferred == ScalingModel::LogEnhanced);
    CHECK(s.log_enhanced.a >= 6.0);
    CHECK(s.log_enhanced.a <= 7.4);
    CHECK(s.log_enhanced.b >= 0.15);
    CHECK(s.log_enhanced.b <= 0.27);
    CHECK(s.log_enhanced.converged);
    CHECK(!s.log_enhanced.unidentifiable);
    // brute-force scan never beats the fit
    double best = INFINITY;
    for (double a = 5.0; a <= 8.5; a += 0.01)
      for (double lb = std::log(0.1); lb <= std::log(0.4); lb += 0.005) best = std::min(best, log_ssr(pts, a, std::exp(lb)));
    CHECK(s.log_enhanced.ssr <= best * (1 + 1e-9));
    CHECK(s.log_enhanced.ssr == doctest::Approx(log_ssr(pts, s.log_enhanced.a, s.log_enhanced.b)).epsilon(1e-9));
  }
}

TEST_CASE("exact data are recovered exactly") {
  const std::vector<double> ds{0.05, 0.1, 0.15, 0.2, 0.3};
  const auto s = fit_scaling(synthetic(ds, 13.1, 0.15, 0.0, 1));
  CHECK(s.log_enhanced.a == doctest::Approx(13.1).epsilon(1e-8));
  CHECK(s.log_enhanced.b == doctest::Approx(0.15).epsilon(1e-8));
  CHECK(s.log_enhanced.predict(0.1) == doctest::Approx(13.1 * 0.01 * std::log(15.0)).epsilon(1e-8));
}

TEST_CASE("pure Delta^2 data prefer the quadratic law") {
  std::vector<RatePoint> pts;
  for (double d : {0.1, 0.15, 0.2, 0.3, 0.4}) pts.push_back({d, 3.0 * d * d});
  const auto s = fit_scaling(pts);
  CHECK(s.preferred == ScalingModel::Quadratic);
  CHECK(s.quadratic.a == doctest::Approx(3.0));
  CHECK(s.quadratic.ssr < 1e-20);
  CHECK(s.quadratic.predict(0.5) == doctest::Approx(0.75));
}

TEST_CASE("growing rate/Delta^2 puts the log law on its boundary") {
  std::vector<RatePoint> pts;
  for (double d : {0.1, 0.15, 0.2, 0.3, 0.4}) pts.push_back({d, d * d * (1 + d)});
  const auto s = fit_scaling(pts);
  CHECK(s.log_enhanced.degenerate);
  CHECK(s.preferred == ScalingModel::Quadratic);
  CHECK(s.log_enhanced.ssr == s.quadratic.ssr);
}

TEST_CASE("fit is invariant under reordering") {
  auto pts = synthetic({0.02, 0.05, 0.1, 0.2, 0.3}, 6.7, 0.2, 0.02, 9);
  const auto a = fit_scaling(pts);
  std::reverse(pts.begin(), pts.end());
  std::swap(pts[1], pts[3]);
  const auto b = fit_scaling(pts);
  CHECK(a.log_enhanced.a == doctest::Approx(b.log_enhanced.a).epsilon(1e-10));
  CHECK(a.log_enhanced.b == doctest::Approx(b.log_enhanced.b).epsilon(1e-10));
  CHECK(a.quadratic.a == doctest::Approx(b.quadratic.a).epsilon(1e-12));
}

TEST_CASE("fit_scaling preconditions") {
  std::vector<RatePoint> four{{0.1, 1}, {0.2, 1}, {0.3, 1}, {0.4, 1}};
  CHECK_THROWS_AS(fit_scaling(four), InvalidInput);
  std::vector<RatePoint> narrow{{0.1, 1}, {0.11, 1}, {0.12, 1}, {0.13, 1}, {0.14, 1}};
  CHECK_THROWS_AS(fit_scaling(narrow), InvalidInput);
  std::vector<RatePoint> neg{{0.1, 1}, {0.2, -1}, {0.3, 1}, {0.4, 1}, {0.5, 1}};
  CHECK_THROWS_AS(fit_scaling(neg), InvalidInput);
}

TEST_CASE("inverse tau") {
  CHECK(inverse_tau(0.1, TimeScale::DeltaSquared) == doctest::Approx(0.01));
  CHECK(inverse_tau(0.1, TimeScale::DeltaSquaredLog) == doctest::Approx(0.01 * std::log(100.0)));
}

TEST_CASE("collapse of an exact family") {
  std::vector<Series> fam;
  for (double d : {0.1, 0.2, 0.3}) {
    Series s;
    s.delta = d;
    s.t = grid_t(400, 0.05);
    for (double x : s.t) s.value.push_back(std::exp(-x * inverse_tau(d, TimeScale::DeltaSquaredLog)));
    fam.push_back(s);
  }
  const auto good = collapse_table(fam, TimeScale::DeltaSquaredLog);
  const auto bad = collapse_table(fam, TimeScale::DeltaSquared);
  CHECK(good.metric < 1e-3);
  CHECK(bad.metric > 10 * good.metric);
  CHECK(good.rows.size() == 3 * fam[0].t.size());
}

TEST_CASE("collapse metric is zero for identical series under any rescaling") {
  Series s;
  s.delta = 0.2;
  s.t = grid_t(10, 0.1);
  for (double x : s.t) s.value.push_back(std::exp(-0.3 * x));
  const std::vector<Series> two{s, s};
  CHECK(collapse_table(two, TimeScale::DeltaSquared).metric == 0.0);
  CHECK(collapse_table(two, TimeScale::DeltaSquaredLog).metric == 0.0);
  const std::vector<double> tau{1.0};
  CHECK_THROWS_AS(collapse_table(two, tau), InvalidInput);
}

TEST_CASE("collapse of exact exponentials on their natural time grid") {
  std::vector<Series> fam;
  for (double d : {0.1, 0.2, 0.3}) {
    Series s;
    s.delta = d;
    const double tau = 1.0 / inverse_tau(d, TimeScale::DeltaSquaredLog);
    for (int i = 0; i <= 400; ++i) {
      s.t.push_back(i * 0.01 * tau);
      s.value.push_back(std::exp(-i * 0.01));
    }
    fam.push_back(s);
  }
  CHECK(collapse_table(fam, TimeScale::DeltaSquaredLog).metric < 1e-10);
}

TEST_CASE("log derivative of a power law") {
  std::vector<double> t, y;
  for (int i = 0; i < 50; ++i) {
    t.push_back(0.1 * i);
    y.push_back(i == 0 ? 1.0 : std::pow(0.1 * i, -1.0));
  }
  const auto d = log_derivative(t, y);
  CHECK(std::isnan(d[0]));
  for (std::size_t i = 2; i < d.size(); ++i) CHECK(d[i] == doctest::Approx(-1.0).epsilon(1e-10));
}
