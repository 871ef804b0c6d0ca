#include "qplife/grid.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <string>

#include "qplife/error.hpp"

namespace qplife {

namespace {
// FFTW's planner is not re-entrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

MomentumGrid::MomentumGrid(std::size_t n_sites) : n_(n_sites) {
  if (n_sites == 0 || n_sites % 2 != 0)
    throw InvalidInput("MomentumGrid: number of sites must be even and positive, got " +
                       std::to_string(n_sites));
}

std::vector<double> MomentumGrid::points() const {
  std::vector<double> k(n_);
  for (std::size_t j = 0; j < n_; ++j) k[j] = (*this)[j];
  return k;
}

std::size_t MomentumGrid::nearest(double k) const {
  double w = std::fmod(k, 2.0 * kPi);
  if (w < 0) w += 2.0 * kPi;
  auto j = static_cast<std::size_t>(std::llround(w / spacing()));
  return j % n_;
}

TimeGrid::TimeGrid(double dt_, std::size_t n) : dt(dt_), n_steps(n) {
  if (!(dt_ > 0.0)) throw InvalidInput("TimeGrid: dt must be positive");
}

TimeGrid TimeGrid::covering(double dt, double t_max) {
  if (!(t_max >= 0.0)) throw InvalidInput("TimeGrid: t_max must be non-negative");
  return TimeGrid(dt, static_cast<std::size_t>(std::ceil(t_max / dt - 1e-9)));
}

struct Fft::Plans {
  fftw_plan fwd = nullptr;
  fftw_plan bwd = nullptr;
  ~Plans() {
    std::lock_guard lock(planner_mutex());
    if (fwd) fftw_destroy_plan(fwd);
    if (bwd) fftw_destroy_plan(bwd);
  }
};

Fft::Fft(std::size_t n) : n_(n), plans_(std::make_unique<Plans>()) {
  if (n == 0) throw InvalidInput("Fft: length must be positive");
  std::vector<cplx> a(n), b(n);
  auto* pa = reinterpret_cast<fftw_complex*>(a.data());
  auto* pb = reinterpret_cast<fftw_complex*>(b.data());
  const auto flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  std::lock_guard lock(planner_mutex());
  plans_->fwd = fftw_plan_dft_1d(static_cast<int>(n), pa, pb, FFTW_FORWARD, flags);
  plans_->bwd = fftw_plan_dft_1d(static_cast<int>(n), pa, pb, FFTW_BACKWARD, flags);
  if (!plans_->fwd || !plans_->bwd) throw NumericalFailure("Fft: planner failed");
}

Fft::~Fft() = default;
Fft::Fft(Fft&&) noexcept = default;
Fft& Fft::operator=(Fft&&) noexcept = default;

namespace {
void run(fftw_plan plan, std::size_t n, std::span<const cplx> in, std::span<cplx> out) {
  if (in.size() != n || out.size() != n)
    throw InvalidInput("Fft: expected length " + std::to_string(n) + ", got " +
                       std::to_string(in.size()));
  // Plans are out-of-place; aliased calls go through a copy.
  std::vector<cplx> tmp;
  const cplx* src = in.data();
  if (src == out.data()) {
    tmp.assign(in.begin(), in.end());
    src = tmp.data();
  }
  fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(const_cast<cplx*>(src)),
                   reinterpret_cast<fftw_complex*>(out.data()));
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (auto& v : out) v *= scale;
}
}  // namespace

void Fft::forward(std::span<const cplx> in, std::span<cplx> out) const {
  run(plans_->fwd, n_, in, out);
}

void Fft::inverse(std::span<const cplx> in, std::span<cplx> out) const {
  run(plans_->bwd, n_, in, out);
}

std::vector<cplx> forward_transform(std::span<const cplx> values, std::size_t n_sites) {
  if (values.size() != n_sites)
    throw InvalidInput("forward_transform: input length does not match L");
  std::vector<cplx> out(n_sites);
  Fft(n_sites).forward(values, out);
  return out;
}

std::vector<cplx> inverse_transform(std::span<const cplx> values, std::size_t n_sites) {
  if (values.size() != n_sites)
    throw InvalidInput("inverse_transform: input length does not match L");
  std::vector<cplx> out(n_sites);
  Fft(n_sites).inverse(values, out);
  return out;
}

}  // namespace qplife
