#include "qplife/classical.hpp"

#include <chrono>
#include <cmath>

#include "qplife/error.hpp"

namespace qplife::classical {

void EnsembleSpec::validate() const {
  if (n_sites < 2 || n_sites % 2 != 0) throw InvalidInput("classical: L must be even and >= 2");
  if (!(delta >= 0.0) || !std::isfinite(delta)) throw InvalidInput("classical: Delta must be >= 0");
  if (n_samples < 1) throw InvalidInput("classical: need at least one sample");
  if (n_batches < 1 || n_batches > n_samples)
    throw InvalidInput("classical: batches must lie in [1, n_samples]");
  if (n_origins < 1 || origin_stride < 1) throw InvalidInput("classical: bad time-origin settings");
  if (!eps.empty() && eps.size() != n_sites)
    throw InvalidInput("classical: dispersion table must have L entries");
  if (ks.empty()) throw InvalidInput("classical: no momenta requested");
}

std::vector<double> EnsembleSpec::dispersion() const {
  if (!eps.empty()) return eps;
  const MomentumGrid grid(n_sites);
  std::vector<double> e(n_sites);
  for (std::size_t j = 0; j < n_sites; ++j) e[j] = -std::cos(grid[j]);
  return e;
}

FloquetMap::FloquetMap(std::size_t n_sites, double delta, std::span<const double> eps)
    : n_(n_sites), delta_(delta), fft_(n_sites) {
  if (eps.size() != n_sites) throw InvalidInput("floquet: dispersion length mismatch");
  phase_.resize(n_);
  for (std::size_t j = 0; j < n_; ++j) phase_[j] = std::exp(kI * eps[j]);
}

void FloquetMap::apply(std::span<cplx> psi) const {
  if (psi.size() != n_) throw InvalidInput("floquet: field length mismatch");
  fft_.forward(psi, psi);
  apply_momentum(psi);
  fft_.inverse(psi, psi);
}

void FloquetMap::apply_momentum(std::span<cplx> psi_k) const {
  if (psi_k.size() != n_) throw InvalidInput("floquet: field length mismatch");
  for (std::size_t j = 0; j < n_; ++j) psi_k[j] *= phase_[j];
  fft_.inverse(psi_k, psi_k);
  for (auto& v : psi_k) v *= std::exp(-2.0 * kI * (delta_ * std::norm(v)));
  fft_.forward(psi_k, psi_k);
}

ClassicalField floquet_step(std::span<const cplx> psi, double delta, std::span<const double> eps) {
  ClassicalField out(psi.begin(), psi.end());
  FloquetMap(psi.size(), delta, eps).apply(out);
  return out;
}

std::mt19937_64 sample_rng(std::uint64_t seed, std::uint64_t sample_index) {
  auto splitmix = [](std::uint64_t& x) {
    std::uint64_t z = (x += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  };
  std::uint64_t s = seed;
  const std::uint64_t a = splitmix(s);
  s = a ^ sample_index;
  std::seed_seq seq{splitmix(s), splitmix(s), splitmix(s), splitmix(s)};
  return std::mt19937_64(seq);
}

ClassicalField sample_initial(std::size_t n_sites, std::mt19937_64& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  ClassicalField psi(n_sites);
  for (auto& v : psi) {
    const double re = nd(rng);
    const double im = nd(rng);
    v = {re, im};
  }
  return psi;
}

ClassicalField sample_initial(const EnsembleSpec& spec, std::uint64_t sample_index) {
  auto rng = sample_rng(spec.seed, sample_index);
  return sample_initial(spec.n_sites, rng);
}

Autocorrelation autocorrelator(const EnsembleSpec& spec) {
  spec.validate();
  const auto start = std::chrono::steady_clock::now();
  const std::size_t n = spec.n_sites;
  const MomentumGrid grid(n);
  const auto eps = spec.dispersion();
  const FloquetMap map(n, spec.delta, eps);

  std::vector<std::size_t> kidx;
  Autocorrelation out;
  for (double k : spec.ks) {
    kidx.push_back(grid.nearest(k));
    out.k.push_back(grid[kidx.back()]);
  }
  const std::size_t nk = kidx.size();
  const std::size_t nt = spec.n_steps + 1;
  const std::size_t span = spec.n_steps + (spec.n_origins - 1) * spec.origin_stride;
  const std::size_t nb = spec.n_batches;

  // sums[b][ik * nt + m]
  std::vector<std::vector<cplx>> sums(nb, std::vector<cplx>(nk * nt));
#pragma omp parallel for schedule(dynamic)
  for (std::size_t b = 0; b < nb; ++b) {
    const std::size_t s0 = b * spec.n_samples / nb;
    const std::size_t s1 = (b + 1) * spec.n_samples / nb;
    std::vector<cplx> track(nk * (span + 1));
    ClassicalField psi;
    auto& acc = sums[b];
    const Fft fft(n);
    for (std::size_t s = s0; s < s1; ++s) {
      psi = sample_initial(spec, s);
      fft.forward(psi, psi);
      for (std::size_t i = 0; i < nk; ++i) track[i * (span + 1)] = psi[kidx[i]];
      for (std::size_t m = 1; m <= span; ++m) {
        map.apply_momentum(psi);
        for (std::size_t i = 0; i < nk; ++i) track[i * (span + 1) + m] = psi[kidx[i]];
      }
      for (std::size_t i = 0; i < nk; ++i) {
        const cplx* tr = track.data() + i * (span + 1);
        for (std::size_t o = 0; o < spec.n_origins; ++o) {
          const std::size_t t0 = o * spec.origin_stride;
          const cplx ref = std::conj(tr[t0]);
          for (std::size_t m = 0; m < nt; ++m) acc[i * nt + m] += tr[t0 + m] * ref;
        }
      }
    }
  }

  for (std::size_t m = 0; m < nt; ++m) out.t.push_back(static_cast<double>(m));
  const double dnb = static_cast<double>(nb);
  for (std::size_t i = 0; i < nk; ++i) {
    cplx total0{};
    for (std::size_t b = 0; b < nb; ++b) total0 += sums[b][i * nt];
    std::vector<cplx> c(nt);
    std::vector<double> e_re(nt), e_im(nt), e_abs(nt);
    for (std::size_t m = 0; m < nt; ++m) {
      cplx tot{};
      for (std::size_t b = 0; b < nb; ++b) tot += sums[b][i * nt + m];
      c[m] = tot / total0.real();
      if (nb > 1) {
        double vr = 0.0, vi = 0.0;
        for (std::size_t b = 0; b < nb; ++b) {
          const cplx bm = sums[b][i * nt + m] / sums[b][i * nt].real();
          vr += (bm.real() - c[m].real()) * (bm.real() - c[m].real());
          vi += (bm.imag() - c[m].imag()) * (bm.imag() - c[m].imag());
        }
        e_re[m] = std::sqrt(vr / (dnb - 1.0) / dnb);
        e_im[m] = std::sqrt(vi / (dnb - 1.0) / dnb);
        e_abs[m] = std::hypot(e_re[m], e_im[m]);
      }
      const double a = std::abs(c[m]);
      if (a <= 0.2 && a >= 0.02 && e_abs[m] > 0.1 * a) out.low_precision = true;
    }
    out.c.push_back(std::move(c));
    out.stderr_re.push_back(std::move(e_re));
    out.stderr_im.push_back(std::move(e_im));
    out.stderr_abs.push_back(std::move(e_abs));
  }
  out.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

}  // namespace qplife::classical
