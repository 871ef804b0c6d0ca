#include "qplife/melonic.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <sstream>

#include "qplife/error.hpp"

namespace qplife::melonic {

std::string to_string(KernelMode m) {
  return m == KernelMode::SelfConsistent ? "self-consistent" : "fgr-frozen";
}
std::string to_string(Frame f) { return f == Frame::Rotating ? "rotating" : "lab"; }
std::string to_string(Integrator i) {
  return i == Integrator::Rectangle ? "rectangle" : "trapezoid";
}

void SolverConfig::validate() const {
  if (n_sites < 8 || n_sites % 4 != 0)
    throw InvalidInput("melonic: L must be a multiple of 4 (and >= 8)");
  if (!(dt > 0.0) || dt > 0.1 + 1e-12) throw InvalidInput("melonic: dt must lie in (0, 0.1]");
  if (!(t_max > 0.0)) throw InvalidInput("melonic: t_max must be positive");
  if (!(delta >= 0.0)) throw InvalidInput("melonic: Delta must be >= 0");
  if (!std::isfinite(h)) throw InvalidInput("melonic: h must be finite");
  if (!(stop_ratio >= 0.0 && stop_ratio < 1.0)) throw InvalidInput("melonic: stop ratio in [0, 1)");
  if (!(kernel_cutoff >= 0.0)) throw InvalidInput("melonic: kernel cutoff must be >= 0");
  if (!(norm_tolerance > 0.0)) throw InvalidInput("melonic: norm tolerance must be positive");
}

namespace {

// site (cell y, sublattice a) shifted by d = +-1 along the chain
struct Site {
  long y;
  int a;
};
Site shift(long y, int a, int d) {
  const int s = a + d;  // in {-1, 0, 1, 2}
  if (s < 0) return {y - 1, 1};
  if (s > 1) return {y + 1, 0};
  return {y, s};
}

std::size_t wrap_index(long x, std::size_t n) {
  const long m = static_cast<long>(n);
  return static_cast<std::size_t>(((x % m) + m) % m);
}

double spectral_norm(const Block& b) {
  const double f2 = b.squaredNorm();
  const double det = std::norm(b.determinant());
  return std::sqrt(0.5 * (f2 + std::sqrt(std::max(0.0, f2 * f2 - 4.0 * det))));
}

}  // namespace

Row fft_kernel_fastpath(std::span<const Block> g_row, double delta) {
  const std::size_t n = g_row.size();
  if (n == 0) throw InvalidInput("kernel: empty propagator row");
  Row out(n, Block::Zero());
  if (delta == 0.0) return out;
  const Fft fft(n);
  const double sqn = std::sqrt(static_cast<double>(n));

  // g[a][a'][y] = (1/N) sum_K e^{iKy} G_{K,aa'}
  std::array<std::array<std::vector<cplx>, 2>, 2> g;
  std::vector<cplx> buf(n);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      for (std::size_t j = 0; j < n; ++j) buf[j] = g_row[j](a, b);
      g[a][b].resize(n);
      fft.inverse(buf, g[a][b]);
      for (auto& v : g[a][b]) v /= sqn;
    }
  auto G = [&](Site r, Site rp) -> cplx { return g[r.a][rp.a][wrap_index(r.y - rp.y, n)]; };

  const double pref = 2.0 * 16.0 * delta * delta;  // M = 2 (M chi)
  std::array<std::array<std::vector<cplx>, 2>, 2> mx;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      mx[a][b].assign(n, cplx{});
      for (std::size_t y = 0; y < n; ++y) {
        const Site r{static_cast<long>(y), a};
        const Site rp{0, b};
        const cplx g0 = G(r, rp);
        cplx acc{};
        for (int d : {-1, 1}) {
          const Site rd = shift(r.y, r.a, d);
          const cplx c = G(rd, rp);
          for (int dp : {-1, 1}) {
            const Site rpd = shift(rp.y, rp.a, dp);
            const cplx A = G(rd, rpd);
            acc += std::conj(A) * (A * g0 - c * G(r, rpd));
          }
        }
        mx[a][b][y] = pref * acc;
      }
    }
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      fft.forward(mx[a][b], buf);
      for (std::size_t j = 0; j < n; ++j) out[j](a, b) = sqn * buf[j];
    }
  return out;
}

Row direct_kernel(std::span<const Block> g_row, double delta) {
  const std::size_t n = g_row.size();
  if (n == 0) throw InvalidInput("kernel: empty propagator row");
  Row out(n, Block::Zero());
  if (delta == 0.0) return out;
  const MomentumGrid grid(n);
  const double n2 = static_cast<double>(n) * static_cast<double>(n);
  const double c1 = 64.0 * delta * delta / n2;
  const double c2 = 16.0 * delta * delta / n2;
  for (std::size_t k = 0; k < n; ++k) {
    for (int a = 0; a < 2; ++a)
      for (int ap = 0; ap < 2; ++ap) {
        const int na = 1 - a, nap = 1 - ap;  // -eta, -eta'
        cplx acc{};
        for (std::size_t i1 = 0; i1 < n; ++i1) {
          const double p1 = grid[i1];
          const Block& g1 = g_row[(k + i1) % n];
          for (std::size_t i2 = 0; i2 < n; ++i2) {
            const double p2 = grid[i2];
            const Block& g12 = g_row[(k + i1 + i2) % n];
            const Block& g2 = g_row[(k + i2) % n];
            const double cs = std::cos(p2 / 2.0);
            acc += c1 * cs * cs * std::exp(kI * (p2 * (ap - a))) * g1(na, nap) *
                   std::conj(g12(na, nap)) * g2(a, ap);
            acc -= c2 * (1.0 + std::exp(kI * p2)) * (1.0 + std::exp(-kI * p1)) *
                   std::exp(-kI * (p2 * a)) * std::exp(kI * (p1 * ap)) * g1(na, ap) *
                   std::conj(g12(na, nap)) * g2(a, nap);
          }
        }
        out[k](a, ap) = 2.0 * acc;
      }
  }
  return out;
}

Row free_row(std::size_t n_cells, double t, double h) {
  const MomentumGrid grid(n_cells);
  Row r(n_cells);
  for (std::size_t j = 0; j < n_cells; ++j) r[j] = free_propagator(grid[j], t, h);
  return r;
}

BandData band_data(std::size_t n_cells, double h) {
  const MomentumGrid grid(n_cells);
  BandData b;
  for (std::size_t j = 0; j < n_cells; ++j) {
    b.u.push_back(band_basis(grid[j], h));
    const double w = band_frequency(grid[j], h);
    b.omega.emplace_back(-w, w);
  }
  return b;
}

// ---- history ------------------------------------------------------------

PropagatorHistory::PropagatorHistory(std::size_t n_cells, BandData bands)
    : n_(n_cells), bands_(std::move(bands)) {}

std::span<const Block> PropagatorHistory::band_row(std::size_t m) const {
  if (m >= n_rows()) throw InvalidInput("history: propagator row not available");
  return {g_.data() + m * n_, n_};
}

std::span<const Block> PropagatorHistory::band_kernel_row(std::size_t m) const {
  if (m >= n_kernel_rows()) throw InvalidInput("history: kernel row not available");
  return {m_.data() + m * n_, n_};
}

Row PropagatorHistory::row(std::size_t m) const {
  auto r = band_row(m);
  Row out(n_);
  for (std::size_t j = 0; j < n_; ++j) out[j] = bands_.u[j] * r[j] * bands_.u[j].adjoint();
  return out;
}

Row PropagatorHistory::kernel_row(std::size_t m) const {
  auto r = band_kernel_row(m);
  Row out(n_);
  for (std::size_t j = 0; j < n_; ++j) out[j] = bands_.u[j] * r[j] * bands_.u[j].adjoint();
  return out;
}

void PropagatorHistory::push_band_row(Row r) {
  if (r.size() != n_) throw InvalidInput("history: row length mismatch");
  g_.insert(g_.end(), r.begin(), r.end());
}

void PropagatorHistory::push_band_kernel_row(Row r) {
  if (r.size() != n_) throw InvalidInput("history: row length mismatch");
  m_.insert(m_.end(), r.begin(), r.end());
}

Row build_kernel(const PropagatorHistory& hist, std::size_t m, const SolverConfig& cfg) {
  if (m >= hist.n_rows())
    throw InvalidInput("build_kernel: history incomplete at the requested time index");
  const Row g = cfg.mode == KernelMode::FgrFrozen
                    ? free_row(hist.n_cells(), cfg.dt * static_cast<double>(m), cfg.h)
                    : hist.row(m);
  return cfg.kernel_path == KernelPath::Fft ? fft_kernel_fastpath(g, cfg.delta)
                                            : direct_kernel(g, cfg.delta);
}

// ---- solver -------------------------------------------------------------

Solver::Solver(SolverConfig cfg)
    : cfg_((cfg.validate(), cfg)), hist_(cfg_.n_cells(), band_data(cfg_.n_cells(), cfg_.h)) {
  const Row start(cfg_.n_cells(), 0.5 * Block::Identity());
  hist_.push_band_row(start);
  rotating_ = start;
  // reject unobservable targets up front
  (void)unit_cell_index(cfg_.observe);
  if (cfg_.observe.kind == Observable::Kind::Quasiparticle &&
      band_frequency(cfg_.observe.k, cfg_.h) < 1e-12)
    throw InvalidInput("melonic: bands touch at the observed momentum; use the single-site observable");
}

std::size_t Solver::unit_cell_index(const Observable& o) const {
  const std::size_t n = cfg_.n_cells();
  const double kk = o.kind == Observable::Kind::SingleSite ? 2.0 * o.k : o.k;
  const MomentumGrid grid(n);
  const std::size_t j = grid.nearest(kk);
  double diff = std::remainder(kk - grid[j], 2.0 * kPi);
  if (std::abs(diff) > 1e-9)
    throw InvalidInput("melonic: observed momentum is not on the unit-cell grid");
  return j;
}

cplx Solver::observe(const Block& site_block, const Observable& o) const {
  const std::size_t j = unit_cell_index(o);
  if (o.kind == Observable::Kind::SingleSite) return unit_cell_reduce(site_block, o.k);
  return quasiparticle_basis(site_block, MomentumGrid(cfg_.n_cells())[j], cfg_.h)(0, 0);
}

Row Solver::band_kernel(const Row& band_g, double t) const {
  const auto& bands = hist_.bands();
  const std::size_t n = cfg_.n_cells();
  Row g(n);
  if (cfg_.mode == KernelMode::FgrFrozen) {
    g = free_row(n, t, cfg_.h);
  } else {
    for (std::size_t j = 0; j < n; ++j) g[j] = bands.u[j] * band_g[j] * bands.u[j].adjoint();
  }
  Row k = cfg_.kernel_path == KernelPath::Fft ? fft_kernel_fastpath(g, cfg_.delta)
                                              : direct_kernel(g, cfg_.delta);
  for (std::size_t j = 0; j < n; ++j) k[j] = bands.u[j].adjoint() * k[j] * bands.u[j];
  return k;
}

bool Solver::keep_row(const Row& k) const {
  if (cfg_.kernel_cutoff == 0.0) return true;
  double mx = 0.0;
  for (const auto& b : k) mx = std::max(mx, b.norm());
  return mx >= cfg_.kernel_cutoff * kernel_scale_;
}

void Solver::step() {
  const std::size_t n = cfg_.n_cells();
  const std::size_t m = hist_.n_rows() - 1;
  const auto& bands = hist_.bands();
  if (hist_.n_kernel_rows() == m) {
    Row k = build_kernel(hist_, m, cfg_);
    double mx = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      k[j] = bands.u[j].adjoint() * k[j] * bands.u[j];
      mx = std::max(mx, k[j].norm());
    }
    if (m == 0) kernel_scale_ = mx;
    if (keep_row(k)) kernel_rows_used_ = m + 1;
    hist_.push_band_kernel_row(std::move(k));
  }

  const double dt = cfg_.dt;
  const double tm = dt * static_cast<double>(m);
  const double tn = dt * static_cast<double>(m + 1);
  const bool trap = cfg_.integrator == Integrator::Trapezoid;
  const bool rotating = cfg_.frame == Frame::Rotating;
  const Block* gb = hist_.band_row(0).data();
  const Block* mb = hist_.band_kernel_row(0).data();

  // dt * sum_j w_j M_j G_{m-j}: rectangle drops j = m, trapezoid halves both ends
  Row conv(n, Block::Zero());
  if (m > 0) {
    const std::size_t jmax = std::min(trap ? m : m - 1, kernel_rows_used_ - 1);
#pragma omp parallel for schedule(static)
    for (std::size_t k = 0; k < n; ++k) {
      Block c = Block::Zero();
      for (std::size_t j = 0; j <= jmax; ++j) {
        const double w = trap && (j == 0 || j == m) ? 0.5 : 1.0;
        c.noalias() += w * (mb[j * n + k] * gb[(m - j) * n + k]);
      }
      conv[k] = dt * c;
    }
  }

  Row next(n);
  if (!trap) {
#pragma omp parallel for schedule(static)
    for (std::size_t k = 0; k < n; ++k) {
      const Eigen::Vector2d& om = bands.omega[k];
      Block g;
      if (rotating) {
        Block& x = rotating_[k];
        for (int a = 0; a < 2; ++a) x.row(a) -= dt * std::exp(kI * (om(a) * tm)) * conv[k].row(a);
        g = x;
        for (int a = 0; a < 2; ++a) g.row(a) *= std::exp(-kI * (om(a) * tn));
      } else {
        g = gb[m * n + k];
        for (int a = 0; a < 2; ++a) g.row(a) *= std::exp(-kI * (om(a) * dt));
        g -= dt * conv[k];
      }
      next[k] = g;
    }
  } else {
    // Heun: Euler predictor, kernel at t_{m+1} from the predicted row, trapezoid corrector
    Row pred(n);
    for (std::size_t k = 0; k < n; ++k) {
      Block g = gb[m * n + k] - dt * conv[k];
      for (int a = 0; a < 2; ++a) g.row(a) *= std::exp(-kI * (bands.omega[k](a) * dt));
      pred[k] = g;
    }
    const Row mp = band_kernel(pred, tn);
    const bool use_mp = keep_row(mp) && kernel_rows_used_ == m + 1;
    const std::size_t jmax = std::min(m, kernel_rows_used_ - 1);
#pragma omp parallel for schedule(static)
    for (std::size_t k = 0; k < n; ++k) {
      Block c = 0.5 * (mb[k] * pred[k]);
      for (std::size_t j = 1; j <= jmax; ++j) c.noalias() += mb[j * n + k] * gb[(m + 1 - j) * n + k];
      if (use_mp) c.noalias() += 0.5 * (mp[k] * gb[k]);
      c *= dt;
      const Eigen::Vector2d& om = bands.omega[k];
      Block g;
      if (rotating) {
        Block& x = rotating_[k];
        for (int a = 0; a < 2; ++a)
          x.row(a) -= 0.5 * dt *
                      (std::exp(kI * (om(a) * tm)) * conv[k].row(a) + std::exp(kI * (om(a) * tn)) * c.row(a));
        g = x;
        for (int a = 0; a < 2; ++a) g.row(a) *= std::exp(-kI * (om(a) * tn));
      } else {
        g = gb[m * n + k] - 0.5 * dt * conv[k];
        for (int a = 0; a < 2; ++a) g.row(a) *= std::exp(-kI * (om(a) * dt));
        g -= 0.5 * dt * c;
      }
      next[k] = g;
    }
  }
  for (std::size_t k = 0; k < n; ++k) {
    const double norm = spectral_norm(next[k]);
    if (!(norm <= 0.5 + cfg_.norm_tolerance)) {
      std::ostringstream msg;
      msg << "melonic: propagator norm " << norm << " exceeds 1/2 at t = " << tn
          << ", unit-cell index " << k << " (Delta = " << cfg_.delta << ", dt = " << dt << ")";
      throw NumericalFailure(msg.str());
    }
  }
  hist_.push_band_row(std::move(next));
}

void Solver::run() {
  const auto steps = TimeGrid::covering(cfg_.dt, cfg_.t_max).n_steps;
  const std::size_t j = unit_cell_index(cfg_.observe);
  const auto& u = hist_.bands().u[j];
  const cplx g0 = observe(u * hist_.band_row(0)[j] * u.adjoint(), cfg_.observe);
  while (steps_taken() < steps) {
    step();
    if (cfg_.stop_ratio > 0.0) {
      const std::size_t m = hist_.n_rows() - 1;
      const cplx g = observe(u * hist_.band_row(m)[j] * u.adjoint(), cfg_.observe);
      if (std::abs(g) < cfg_.stop_ratio * std::abs(g0)) break;
    }
  }
  // close the kernel history so both series have equal length
  const std::size_t m = hist_.n_rows() - 1;
  if (hist_.n_kernel_rows() == m) {
    Row k = build_kernel(hist_, m, cfg_);
    for (std::size_t i = 0; i < k.size(); ++i)
      k[i] = hist_.bands().u[i].adjoint() * k[i] * hist_.bands().u[i];
    hist_.push_band_kernel_row(std::move(k));
  }
}

std::vector<cplx> Solver::green(const Observable& o) const {
  const std::size_t j = unit_cell_index(o);
  const auto& u = hist_.bands().u[j];
  std::vector<cplx> out;
  for (std::size_t m = 0; m < hist_.n_rows(); ++m)
    out.push_back(observe(u * hist_.band_row(m)[j] * u.adjoint(), o));
  return out;
}

std::vector<cplx> Solver::kernel(const Observable& o) const {
  const std::size_t j = unit_cell_index(o);
  const auto& u = hist_.bands().u[j];
  std::vector<cplx> out;
  for (std::size_t m = 0; m < hist_.n_kernel_rows(); ++m)
    out.push_back(observe(u * hist_.band_kernel_row(m)[j] * u.adjoint(), o));
  return out;
}

std::vector<double> Solver::times() const {
  std::vector<double> t;
  for (std::size_t m = 0; m < hist_.n_rows(); ++m) t.push_back(time(m));
  return t;
}

MelonicResult solve(const SolverConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  Solver s(cfg);
  s.run();
  MelonicResult r;
  r.config = cfg;
  r.t = s.times();
  r.green = s.green(cfg.observe);
  for (const auto& v : s.kernel(cfg.observe)) r.sigma.push_back(std::abs(v));
  r.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

}  // namespace qplife::melonic
