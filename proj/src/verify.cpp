#include "qplife/verify.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "qplife/analysis.hpp"
#include "qplife/classical.hpp"
#include "qplife/ladder.hpp"
#include "qplife/melonic.hpp"

namespace qplife::verify {

namespace {

Check make(std::string name, double value, double tol, std::string detail = {}) {
  return {std::move(name), value <= tol, value, tol, std::move(detail)};
}

Check kernel_paths() {
  std::mt19937_64 rng(20240601);
  std::normal_distribution<double> nd;
  melonic::Row row(16);  // L = 32
  for (auto& b : row)
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) b(i, j) = {nd(rng), nd(rng)};
  const auto fast = melonic::fft_kernel_fastpath(row, 0.4);
  const auto direct = melonic::direct_kernel(row, 0.4);
  double dev = 0.0;
  for (std::size_t k = 0; k < row.size(); ++k)
    dev = std::max(dev, (fast[k] - direct[k]).cwiseAbs().maxCoeff());
  return make("fft kernel vs direct double sum (L=32)", dev, 1e-10);
}

Check free_exactness() {
  melonic::SolverConfig cfg;
  cfg.n_sites = 32;
  cfg.delta = 0.0;
  cfg.h = 0.3;
  cfg.t_max = 100.0;
  melonic::Solver s(cfg);
  s.run();
  double dev = 0.0;
  for (std::size_t m = 0; m < s.history().n_rows(); ++m) {
    const auto row = s.history().row(m);
    const auto ref = melonic::free_row(cfg.n_cells(), s.time(m), cfg.h);
    for (std::size_t k = 0; k < row.size(); ++k)
      dev = std::max(dev, (row[k] - ref[k]).cwiseAbs().maxCoeff());
  }
  return make("Delta=0 melonic run equals free propagator to t=100", dev, 1e-8);
}

Check contour_values() {
  const double q = kPi / 4.0;
  const double dev = std::max(std::abs(ladder::f_onshell(0, q, 0.0) - cplx(0.25, 0.0)),
                              std::abs(ladder::f_onshell(2, q, 0.0) - cplx(0.0, -0.25)));
  return make("f(0)=1/4, f(2)=-i/4 at q=pi/4, k=0", dev, 1e-14);
}

Check sampler_moment() {
  classical::EnsembleSpec spec;
  spec.n_sites = 100;
  const std::size_t n = 1000;  // 1e5 draws
  double sum = 0.0, sum2 = 0.0;
  for (std::size_t s = 0; s < n; ++s)
    for (const auto& v : classical::sample_initial(spec, s)) {
      const double a = std::norm(v);
      sum += a;
      sum2 += a * a;
    }
  const double draws = static_cast<double>(n * spec.n_sites);
  const double mean = sum / draws;
  const double sigma = std::sqrt((sum2 / draws - mean * mean) / draws);
  std::ostringstream d;
  d << "mean |psi|^2 = " << mean << " +- " << sigma;
  return make("Gaussian sampler <|psi|^2> = 2 (in units of sigma)", std::abs(mean - 2.0) / sigma,
              3.0, d.str());
}

Check closed_loop_fit() {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> nd(0.0, 0.01);
  std::vector<analysis::RatePoint> pts;
  for (double d : {0.01, 0.015, 0.02, 0.03, 0.05, 0.07, 0.1})
    pts.push_back({d, 6.7 * d * d * std::log(0.2 / (d * d)) * std::exp(nd(rng))});
  const auto cmp = analysis::fit_scaling(pts);
  const auto& law = cmp.log_enhanced;
  const bool ok = law.a >= 6.0 && law.a <= 7.4 && law.b >= 0.15 && law.b <= 0.27 &&
                  cmp.preferred == analysis::ScalingModel::LogEnhanced;
  std::ostringstream d;
  d << "a = " << law.a << ", b = " << law.b;
  Check c{"synthetic 6.7 D^2 log(0.2 D^-2) + 1% noise recovers (a, b)", ok, ok ? 0.0 : 1.0, 0.0,
          d.str()};
  return c;
}

Check synthetic_rate() {
  std::vector<double> t, v;
  for (int i = 0; i <= 1000; ++i) {
    t.push_back(0.1 * i);
    v.push_back(std::exp(-0.1 * t.back()));
  }
  const auto fit = analysis::extract_rate(t, v);
  return make("extract_rate on exp(-0.1 t)", std::abs(fit.rate - 0.1), 1e-6);
}

}  // namespace

std::vector<Check> run_all() {
  return {kernel_paths(), free_exactness(), contour_values(),
          sampler_moment(), closed_loop_fit(), synthetic_rate()};
}

}  // namespace qplife::verify
