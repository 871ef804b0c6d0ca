#pragma once

// Leading-order (Golden Rule) decay rates with Lorentzian broadening eta,
//
//   1/tau_k(eta) = 2 (1/L^2) sum_{q,p} v(q,p)^2 N_k(q,p) eta / (phi_k(q,p)^2 + eta^2)
//   phi_k(q,p)   = eps_k - eps_{k+q} - eps_{k+p} + eps_{k+q+p}
//
// with N the fermionic weight n3(1 - n1 - n2) + n1 n2 or the bosonic weight
// n3(1 + n1 + n2) - n1 n2 (n1 = n_{k+q}, n2 = n_{k+p}, n3 = n_{k+q+p}).
// At infinite temperature and half filling the fermionic weight is 1/4.

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qplife/grid.hpp"
#include "qplife/model.hpp"

namespace qplife::fgr {

enum class Statistics { Fermion, Boson };
enum class Vertex {
  Antisymmetric,  ///< Delta (cos q - cos p), spinless fermions
  Symmetric,      ///< Delta (cos q + cos p), lattice bosons
  Constant,       ///< Delta, contact interaction between distinct species
};

/// Riemann: plain sum over grid nodes. LinearCell: phi linear on the two
/// triangles of every grid cell, Lorentzian integrated exactly there (no
/// spurious 1/(L eta) weight from grid lines on which phi vanishes).
enum class Quadrature { Riemann, LinearCell };

struct FgrRequest {
  double k = 0.0;
  double delta = 0.1;
  double eta = 0.01;
  Statistics statistics = Statistics::Fermion;
  /// Inverse temperature; 0 means infinite temperature (fermions: n = 1/2).
  double beta = 0.0;
  double mu = 0.0;
  std::size_t n_sites = 2048;
  std::optional<Vertex> vertex;  ///< defaults by statistics
  Dispersion dispersion = Dispersion::cosine();
  Quadrature quadrature = Quadrature::LinearCell;

  void validate() const;
  Vertex effective_vertex() const;
};

double fermi(double e, double beta, double mu);
double bose(double e, double beta, double mu);
double vertex_value(Vertex v, double q, double p, double delta);

double fgr_rate(const FgrRequest& req);
/// Same request evaluated for several broadenings (phi and weights computed once).
std::vector<double> fgr_rates(const FgrRequest& req, std::span<const double> etas);
/// Infinite-temperature fermion path with the weight fixed to 1/4.
std::vector<double> fgr_rates_infinite_t(const FgrRequest& req, std::span<const double> etas);

struct LogSlope {
  double c0 = 0.0;
  double c1 = 0.0;
  double r2 = 0.0;
  std::vector<double> etas;
  std::vector<double> rates;
};
/// Least squares 1/tau(eta) = c0 + c1 log(1/eta); needs >= 4 decreasing etas.
LogSlope log_slope(const FgrRequest& req, std::span<const double> etas);

// ---- stationary-phase classification ------------------------------------

struct ScatteringChannel {
  /// phi = eps_b(k) + eps_b1(k+q+p) - eps_b2(k+q) - eps_b3(k+p)
  std::size_t b = 0, b1 = 0, b2 = 0, b3 = 0;
  std::function<double(double q, double p)> vertex;
};

struct ClassifyOptions {
  std::size_t scan_points = 256;  ///< per axis
  double tolerance = 1e-8;
  int max_newton = 200;
  /// Per-band occupations; empty means infinite temperature (all 1/2).
  std::vector<std::function<double(double)>> occupation;
  Statistics statistics = Statistics::Fermion;
};

enum class PointKind { LogDivergent, Nullified, Unresolved };
std::string to_string(PointKind k);

struct StationaryPoint {
  std::size_t channel = 0;
  double q = 0.0, p = 0.0;
  double phi = 0.0, dphi_dq = 0.0, dphi_dp = 0.0;  ///< residuals
  int hessian_positive = 0, hessian_negative = 0;  ///< signature (zero eigenvalues omitted)
  double weight = 0.0;  ///< v^2 N at the point
  PointKind kind = PointKind::Unresolved;
};

struct DivergenceReport {
  std::vector<StationaryPoint> points;
  std::size_t count(PointKind k) const;
};

DivergenceReport classify_divergences(std::span<const Dispersion> bands, double k,
                                      std::span<const ScatteringChannel> channels,
                                      const ClassifyOptions& opt = {});

/// Single cosine band with the antisymmetric vertex.
DivergenceReport classify_cosine(double k, const ClassifyOptions& opt = {});

}  // namespace qplife::fgr
