#pragma once

// Classical U(1) Floquet field model on a ring of L sites:
//
//   psi <- e^{-2 i Delta |psi_x|^2} psi_x  o  F^{-1} diag(e^{i eps_k}) F  psi
//
// with Gaussian initial ensemble rho ~ exp(-sum |psi|^2 / 2), i.e.
// <psi_x psi_y^*> = 2 delta_xy. The map preserves sum |psi|^2 and phase
// volume, so the ensemble is stationary.

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "qplife/grid.hpp"

namespace qplife::classical {

using ClassicalField = std::vector<cplx>;

struct EnsembleSpec {
  std::size_t n_sites = 128;
  double delta = 0.05;
  std::size_t n_samples = 20000;
  std::uint64_t seed = 1;
  std::size_t n_steps = 1000;  ///< Floquet periods recorded (t = 0..n_steps)
  /// Free dispersion on the grid k_j = 2 pi j / L; empty means -cos k.
  std::vector<double> eps;
  /// Momenta to record (snapped to the grid).
  std::vector<double> ks{0.0};
  /// Samples are split into this many fixed batches (error bars, parallel units).
  std::size_t n_batches = 50;
  /// Time origins averaged per sample (stationary ensemble), `origin_stride` apart.
  std::size_t n_origins = 1;
  std::size_t origin_stride = 1;

  void validate() const;
  std::vector<double> dispersion() const;
};

/// One application of the Floquet map, reusing plans.
class FloquetMap {
 public:
  FloquetMap(std::size_t n_sites, double delta, std::span<const double> eps);
  void apply(std::span<cplx> psi) const;
  /// Same map acting on the momentum-space field psi_k.
  void apply_momentum(std::span<cplx> psi_k) const;
  std::size_t size() const { return n_; }

 private:
  std::size_t n_;
  double delta_;
  std::vector<cplx> phase_;
  Fft fft_;
};

ClassicalField floquet_step(std::span<const cplx> psi, double delta, std::span<const double> eps);

/// Independent stream per sample index (SplitMix64 of seed and index).
std::mt19937_64 sample_rng(std::uint64_t seed, std::uint64_t sample_index);
ClassicalField sample_initial(std::size_t n_sites, std::mt19937_64& rng);
ClassicalField sample_initial(const EnsembleSpec& spec, std::uint64_t sample_index);

struct Autocorrelation {
  std::vector<double> t;
  std::vector<double> k;                 ///< recorded momenta (grid values)
  std::vector<std::vector<cplx>> c;      ///< c[ik][m], normalized so c(0) = 1
  std::vector<std::vector<double>> stderr_re, stderr_im, stderr_abs;
  /// stderr > 10% of |C| somewhere with |C| in [0.02, 0.2]
  bool low_precision = false;
  double wall_seconds = 0.0;
};

/// C_k(t) = <psi_k(t) psi_k^*(0)> / <|psi_k(0)|^2>; batch-mean error bars.
/// Results do not depend on the number of threads.
Autocorrelation autocorrelator(const EnsembleSpec& spec);

}  // namespace qplife::classical
