#pragma once

// Particle-particle ladder resummation of the single-site model: the
// on-shell contour functions f(0), f(2) and the resummed decay rate
//
//   1/tau_k = 16 Delta^2 \int dq/2pi |sin^3(q-k)| |cos q|
//             / [ (4 cos q - Delta cos(q-k))^2 + (Delta sin(q-k))^2 ].

#include <span>
#include <vector>

#include "qplife/grid.hpp"

namespace qplife::ladder {

/// n in {0, 2}. Throws SingularPoint where cos q = 0 or sin(q - k) = 0.
cplx f_onshell(int n, double q, double k);

/// Integrand of the resummed rate (without the 16 Delta^2 / 2pi prefactor).
double rate_integrand(double q, double k, double delta);

struct QuadratureOptions {
  /// Total node budget; at least 2^14.
  std::size_t resolution = 1u << 14;
  /// Gauss-Legendre nodes per panel.
  int order = 16;
};

struct LadderResult {
  double k = 0.0;
  double delta = 0.0;
  double rate = 0.0;
  /// relative change of the rate when the node count per panel is doubled
  double quadrature_error = 0.0;
  std::vector<double> sample_q;
  std::vector<double> sample_integrand;
};

/// Panels are split at the integrand's kinks (cos q = 0, sin(q - k) = 0) and
/// graded geometrically toward the Delta-wide peaks at cos q = 0.
LadderResult ladder_rate(double k, double delta, const QuadratureOptions& opt = {});

struct LadderAsymptotics {
  double alpha = 0.0;  ///< coefficient of Delta^2 log Delta^-2
  double gamma = 0.0;  ///< coefficient of Delta^2
  std::vector<double> residuals;  ///< rate/Delta^2 - (alpha log Delta^-2 + gamma)
  double condition_number = 0.0;
  bool ill_conditioned = false;
};

/// Fit rate(Delta) = Delta^2 (alpha log Delta^-2 + gamma) over deltas that
/// span at least three decades.
LadderAsymptotics ladder_asymptotics(double k, std::span<const double> deltas,
                                     const QuadratureOptions& opt = {});

}  // namespace qplife::ladder
