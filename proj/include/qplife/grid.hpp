#pragma once

// Momentum / time discretization and the one Fourier convention used by
// every solver in the project:
//
//   f_k = L^{-1/2} sum_x e^{-i k x} f_x,     k_j = 2 pi j / L,  j = 0..L-1
//   f_x = L^{-1/2} sum_k e^{+i k x} f_k
//
// Momentum integrals  \int dq / 2pi  are evaluated as (1/L) sum_j (periodic
// trapezoid rule).

#include <complex>
#include <cstddef>
#include <memory>
#include <numbers>
#include <span>
#include <vector>

namespace qplife {

using cplx = std::complex<double>;
inline constexpr double kPi = std::numbers::pi;
inline constexpr cplx kI{0.0, 1.0};

class MomentumGrid {
 public:
  /// `n_sites` must be even and positive.
  explicit MomentumGrid(std::size_t n_sites);

  std::size_t size() const { return n_; }
  double spacing() const { return 2.0 * kPi / static_cast<double>(n_); }
  double operator[](std::size_t j) const { return spacing() * static_cast<double>(j); }
  std::vector<double> points() const;

  /// Index of k + q (mod 2 pi) given grid indices.
  std::size_t add(std::size_t j, std::size_t l) const { return (j + l) % n_; }
  std::size_t negate(std::size_t j) const { return (n_ - j) % n_; }
  /// Nearest grid index to an arbitrary momentum (wrapped into [0, 2 pi)).
  std::size_t nearest(double k) const;

  /// (1/L) sum_j f(k_j)
  template <class F>
  auto integrate(F&& f) const {
    decltype(f(0.0)) acc{};
    for (std::size_t j = 0; j < n_; ++j) acc += f((*this)[j]);
    return acc / static_cast<double>(n_);
  }

 private:
  std::size_t n_;
};

struct TimeGrid {
  double dt = 0.1;
  std::size_t n_steps = 0;

  TimeGrid(double dt, std::size_t n_steps);
  double t(std::size_t m) const { return dt * static_cast<double>(m); }
  double t_max() const { return t(n_steps); }
  /// Smallest grid that reaches at least `t_max`.
  static TimeGrid covering(double dt, double t_max);
};

/// Reusable unitary DFT of fixed length. Plans are built once; `forward` /
/// `inverse` may be called concurrently from several threads.
class Fft {
 public:
  explicit Fft(std::size_t n);
  ~Fft();
  Fft(Fft&&) noexcept;
  Fft& operator=(Fft&&) noexcept;
  Fft(const Fft&) = delete;
  Fft& operator=(const Fft&) = delete;

  std::size_t size() const { return n_; }
  /// e^{-ikx}, 1/sqrt(L). In-place is allowed (in == out).
  void forward(std::span<const cplx> in, std::span<cplx> out) const;
  /// e^{+ikx}, 1/sqrt(L).
  void inverse(std::span<const cplx> in, std::span<cplx> out) const;

 private:
  struct Plans;
  std::size_t n_;
  std::unique_ptr<Plans> plans_;
};

/// Convenience wrappers (allocate a plan per call).
std::vector<cplx> forward_transform(std::span<const cplx> values, std::size_t n_sites);
std::vector<cplx> inverse_transform(std::span<const cplx> values, std::size_t n_sites);

}  // namespace qplife
