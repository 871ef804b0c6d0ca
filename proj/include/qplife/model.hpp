#pragma once

// Single-band and staggered two-band fermion models.
//
// Units: hopping sets the energy scale (J = 1). Heisenberg phase convention
// follows the memory-matrix equation of motion
//     dG/dt + i eps G + \int_0^t M(s) G(t - s) ds = 0,
// so free propagators carry e^{-i eps t}. Decay rates do not depend on this.
//
// Two-band blocks are indexed 0 <-> eta = +1 (even site, a = 0) and
// 1 <-> eta = -1 (odd site, a = 1).

#include <Eigen/Dense>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "qplife/grid.hpp"

namespace qplife {

using Block = Eigen::Matrix2cd;

double epsilon_cosine(double k);

class Dispersion {
 public:
  enum class Kind { Cosine, StaggeredLower, StaggeredUpper, Table };

  static Dispersion cosine();
  /// Bands -omega_k / +omega_k of the staggered model, as functions of the
  /// unit-cell momentum.
  static Dispersion staggered(double h, bool upper);
  /// Tabulated values on the uniform grid k_j = 2 pi j / n; evaluated by
  /// trigonometric interpolation (exact for band-limited dispersions).
  static Dispersion table(std::vector<double> values);
  /// Two-column text "k eps" (one row per uniform grid point, '#' comments).
  static Dispersion parse_table(std::istream& in);

  double operator()(double k) const { return value_(k); }
  double d1(double k) const { return d1_(k); }
  double d2(double k) const { return d2_(k); }
  Kind kind() const { return kind_; }
  std::string tag() const;

 private:
  Kind kind_ = Kind::Cosine;
  std::function<double(double)> value_, d1_, d2_;
};

struct TwoBandParams {
  double h = 0.0;
  double delta = 0.0;
  void validate() const;
};

/// [[2h, -(1+e^{-ik})/2], [-(1+e^{ik})/2, -2h]]
Block two_band_matrix(double k, double h);
/// omega_k = sqrt((1 + cos k)/2 + 4 h^2) >= 0
double band_frequency(double k, double h);

/// (1/2) e^{-i eps_k t}. Uses sin(wt)/w -> t at the band touching (k = pi, h = 0).
Block free_propagator(double k, double t, double h);

/// v(q, p) = Delta (cos q - cos p)
double vertex_v(double q, double p, double delta);

/// Single-site Green's function at momentum k from the two-site block
/// sampled at 2k:  G_k = (1/2) sum_{eta,eta'} e^{i (eta-eta') k / 2} G_{2k,eta eta'}.
cplx unit_cell_reduce(const Block& block_at_2k, double k);

/// Unitary whose columns are eigenvectors of two_band_matrix(k, h), lower band
/// first. Defined at the degenerate point too (identity there).
Block band_basis(double k, double h);

/// U^dagger G U with U = band_basis(k, h); the (0,0) entry is the lower-band
/// quasiparticle with energy -omega_k. Throws InvalidInput at the band touching.
Block quasiparticle_basis(const Block& g, double k, double h);

}  // namespace qplife
