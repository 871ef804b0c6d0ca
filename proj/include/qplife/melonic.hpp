#pragma once

// Self-consistent melonic memory-matrix solver for the staggered two-band
// chain (L = 2N sites, N unit cells). Integrates
//
//   dG_k/dt + i eps_k G_k + \int_0^t M_k(s) G_k(t - s) ds = 0,   G_k(0) = I/2,
//
// where the 2x2 memory kernel M = (M chi) chi^{-1} = 2 (M chi) is rebuilt at
// every step from the current propagators (melonic) or from the free ones
// (FGR-frozen). (M chi) in real space is the connected Wick product
//
//   16 Delta^2 sum_{d,d'=+-1} G*_{r+d,r'+d'} (G_{r+d,r'+d'} G_{r,r'} - G_{r+d,r'} G_{r,r'+d'}),
//
// evaluated pointwise after an inverse FFT (fast path) or through the
// equivalent momentum double sum (direct path, O(N^3), used as an oracle).

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qplife/grid.hpp"
#include "qplife/model.hpp"

namespace qplife::melonic {

enum class KernelMode { SelfConsistent, FgrFrozen };
enum class Frame { Rotating, Lab };
enum class Integrator { Rectangle, Trapezoid };
enum class KernelPath { Fft, Direct };

std::string to_string(KernelMode);
std::string to_string(Frame);
std::string to_string(Integrator);

/// What the solver reports as "the" Green's function and self-energy.
struct Observable {
  enum class Kind {
    SingleSite,    ///< h = 0 only: k is the single-site momentum, read off at 2k
    Quasiparticle  ///< k is the unit-cell momentum; lower-band diagonal entry
  };
  Kind kind = Kind::SingleSite;
  double k = 0.0;
};

struct SolverConfig {
  std::size_t n_sites = 400;  ///< L = 2N, L % 4 == 0
  double dt = 0.1;
  double t_max = 50.0;
  double delta = 0.3;
  double h = 0.0;
  KernelMode mode = KernelMode::SelfConsistent;
  Frame frame = Frame::Rotating;
  /// Rectangle: explicit Euler with a left-endpoint memory sum. Trapezoid:
  /// Heun predictor-corrector with a trapezoid memory sum (second order).
  Integrator integrator = Integrator::Rectangle;
  KernelPath kernel_path = KernelPath::Fft;
  Observable observe;
  /// Stop early once |observable| / |observable(0)| drops below this (0: off).
  double stop_ratio = 0.0;
  /// Drop kernel rows whose max norm is below cutoff * max norm of row 0 (0: off).
  double kernel_cutoff = 0.0;
  /// Abort when a propagator block's spectral norm exceeds 1/2 + this.
  double norm_tolerance = 1e-2;

  std::size_t n_cells() const { return n_sites / 2; }
  void validate() const;
};

using Row = std::vector<Block>;

/// Fast kernel row (M, not M chi) from one time slice of the propagators
/// G_{K, eta eta'} on the unit-cell grid.
Row fft_kernel_fastpath(std::span<const Block> g_row, double delta);
/// Same quantity from the momentum-space double sum.
Row direct_kernel(std::span<const Block> g_row, double delta);

/// Free propagators on the unit-cell grid at time t.
Row free_row(std::size_t n_cells, double t, double h);

/// Per-momentum band data: U (lower band first) and the two band energies.
struct BandData {
  std::vector<Block> u;
  std::vector<Eigen::Vector2d> omega;
};
BandData band_data(std::size_t n_cells, double h);

/// Propagator and kernel histories, stored in the band eigenbasis (lab frame).
class PropagatorHistory {
 public:
  PropagatorHistory(std::size_t n_cells, BandData bands);

  std::size_t n_cells() const { return n_; }
  std::size_t n_rows() const { return g_.size() / n_; }
  std::size_t n_kernel_rows() const { return m_.size() / n_; }
  const BandData& bands() const { return bands_; }

  std::span<const Block> band_row(std::size_t m) const;
  std::span<const Block> band_kernel_row(std::size_t m) const;
  /// Site (eta) basis.
  Row row(std::size_t m) const;
  Row kernel_row(std::size_t m) const;

  void push_band_row(Row r);
  void push_band_kernel_row(Row r);

 private:
  std::size_t n_;
  BandData bands_;
  std::vector<Block> g_, m_;
};

/// Kernel row at time index m for the current mode (self-consistent uses the
/// stored G, FGR-frozen uses G0). Throws if row m is not in the history.
Row build_kernel(const PropagatorHistory& hist, std::size_t m, const SolverConfig& cfg);

class Solver {
 public:
  explicit Solver(SolverConfig cfg);

  /// Append kernel row m (if missing) and advance G to row m + 1.
  void step();
  /// Run to t_max (or the stop ratio).
  void run();

  const SolverConfig& config() const { return cfg_; }
  const PropagatorHistory& history() const { return hist_; }
  std::size_t steps_taken() const { return hist_.n_rows() - 1; }
  double time(std::size_t m) const { return cfg_.dt * static_cast<double>(m); }

  /// Observable G_k(t) and |Sigma_k(t)| = |M_k(t)| per the config's Observable.
  std::vector<cplx> green(const Observable& o) const;
  std::vector<cplx> kernel(const Observable& o) const;
  std::vector<double> times() const;

 private:
  cplx observe(const Block& site_basis_block, const Observable& o) const;
  std::size_t unit_cell_index(const Observable& o) const;
  /// Kernel (band basis) from a band-basis propagator row at time t.
  Row band_kernel(const Row& band_g, double t) const;
  bool keep_row(const Row& band_kernel_row) const;

  SolverConfig cfg_;
  PropagatorHistory hist_;
  std::vector<Block> rotating_;  // X = e^{i Omega t} G_band (rotating frame)
  std::size_t kernel_rows_used_ = 0;
  double kernel_scale_ = 0.0;
};

struct MelonicResult {
  SolverConfig config;
  std::vector<double> t;
  std::vector<cplx> green;       ///< observable G_k(t)
  std::vector<double> sigma;     ///< |Sigma_k(t)|
  double wall_seconds = 0.0;
};

/// Run the solver and extract the configured observable.
MelonicResult solve(const SolverConfig& cfg);

}  // namespace qplife::melonic
