#include "arrival/unitary.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace arrival::unitary {

using numerics::reflection_indices;

void ParticleParams::validate() const {
  if (!std::isfinite(m) || !std::isfinite(hbar) || !std::isfinite(t))
    throw NumericError("ParticleParams: non-finite value");
  if (m <= 0) throw DomainError("ParticleParams: m must be positive");
  if (hbar <= 0) throw DomainError("ParticleParams: hbar must be positive");
  if (t < 0) throw DomainError("ParticleParams: t must be non-negative");
}

double norm2(const Grid1D& grid, const std::vector<cplx>& a) {
  numerics::CompensatedSum s;
  for (const auto& v : a) s.add(std::norm(v));
  return s.value() * grid.spacing();
}

cplx inner(const Grid1D& grid, const std::vector<cplx>& a, const std::vector<cplx>& b) {
  numerics::CompensatedSum re, im;
  for (std::size_t i = 0; i < a.size(); ++i) {
    cplx v = a[i] * std::conj(b[i]);
    re.add(v.real());
    im.add(v.imag());
  }
  return cplx(re.value(), im.value()) * grid.spacing();
}

Wavefunction::Wavefunction(Grid1D grid, std::vector<cplx> samples)
    : grid_(grid), samples_(std::move(samples)) {
  if (samples_.size() != grid_.size()) throw DomainError("Wavefunction: size mismatch");
  numerics::require_finite(samples_, "Wavefunction");
  double n2 = unitary::norm2(grid_, samples_);
  if (!(n2 > 0)) throw DomainError("Wavefunction: zero state cannot be normalized");
  double s = 1.0 / std::sqrt(n2);
  for (auto& v : samples_) v *= s;
}

Wavefunction Wavefunction::raw(Grid1D grid, std::vector<cplx> samples) {
  if (samples.size() != grid.size()) throw DomainError("Wavefunction: size mismatch");
  Wavefunction w;
  w.grid_ = grid;
  w.samples_ = std::move(samples);
  return w;
}

double Wavefunction::norm2() const { return unitary::norm2(grid_, samples_); }

CrossingDecoherenceTable make_table(double p_cross, double p_nocross, cplx d) {
  CrossingDecoherenceTable tb;
  tb.p_cross = p_cross;
  tb.p_nocross = p_nocross;
  tb.d_offdiag = d;
  double pp = p_cross * p_nocross;
  double d2 = std::norm(d);
  if (pp > 0)
    tb.epsilon_ratio = d2 / pp;
  else
    tb.epsilon_ratio = d2 > 0 ? std::numeric_limits<double>::infinity() : 0.0;
  tb.sum_rule_residual = p_cross + p_nocross + 2.0 * d.real() - 1.0;
  return tb;
}

namespace {

void require_time(const ParticleParams& pp) {
  pp.validate();
  if (pp.t == 0) throw DomainError("free propagator is singular at t = 0; use the identity");
}

// psi samples outside the box would wrap around
void require_coverage(const Wavefunction& psi) {
  const auto& s = psi.samples();
  std::size_t n = s.size();
  std::size_t band = std::max<std::size_t>(1, n / 100);
  for (std::size_t i = 0; i < band; ++i)
    if (std::abs(s[i]) > 1e-8 || std::abs(s[n - 1 - i]) > 1e-8)
      throw SupportError("initial state is not negligible at the grid edge; widen the box");
}

std::vector<cplx> reflect(const std::vector<cplx>& a, const std::vector<std::size_t>& r) {
  std::vector<cplx> out(a.size());
  for (std::size_t j = 0; j < a.size(); ++j) out[j] = a[r[j]];
  return out;
}

}  // namespace

cplx free_propagator(double x, double x0, const ParticleParams& pp) {
  require_time(pp);
  double amp = std::sqrt(pp.m / (2.0 * kPi * pp.hbar * pp.t));
  double phase = pp.m * (x - x0) * (x - x0) / (2.0 * pp.hbar * pp.t) - 0.25 * kPi;
  return amp * std::polar(1.0, phase);
}

cplx free_propagator_softened(double x, double x0, const ParticleParams& pp, double eta) {
  require_time(pp);
  if (eta < 0 || eta > 1e-3) throw DomainError("softening eta must lie in [0, 1e-3]");
  cplx tau = pp.t * cplx(1.0, -eta);
  cplx i(0.0, 1.0);
  cplx pref = std::sqrt(pp.m / (2.0 * kPi * i * pp.hbar * tau));
  return pref * std::exp(i * pp.m * (x - x0) * (x - x0) / (2.0 * pp.hbar * tau));
}

cplx restricted_propagator(double x, double x0, const ParticleParams& pp) {
  require_time(pp);
  bool same = (x > 0 && x0 > 0) || (x < 0 && x0 < 0);
  if (!same) return 0.0;
  return free_propagator(x, x0, pp) - free_propagator(x, -x0, pp);
}

cplx crossing_propagator(double x, double x0, const ParticleParams& pp) {
  require_time(pp);
  bool opposite = (x > 0 && x0 < 0) || (x < 0 && x0 > 0);
  if (opposite) return free_propagator(x, x0, pp);
  if (x == 0 || x0 == 0) return free_propagator(x, x0, pp) - restricted_propagator(x, x0, pp);
  return free_propagator(-x, x0, pp);
}

std::vector<cplx> free_evolve(const Grid1D& grid, const std::vector<cplx>& psi,
                              const ParticleParams& pp) {
  pp.validate();
  if (pp.t == 0) return psi;
  std::size_t n = psi.size();
  auto k = numerics::fft_wavenumbers(n, grid.spacing());
  std::vector<cplx> a = psi;
  numerics::fft_forward(a);
  double c = pp.hbar * pp.t / (2.0 * pp.m);
  double inv = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) a[i] *= std::polar(inv, -c * k[i] * k[i]);
  numerics::fft_backward(a);
  return a;
}

std::vector<double> positive_weights(const Grid1D& grid) {
  std::vector<double> w(grid.size());
  for (std::size_t j = 0; j < grid.size(); ++j) {
    double x = grid[j];
    w[j] = std::abs(x) < 1e-12 * grid.spacing() ? 0.5 : (x > 0 ? 1.0 : 0.0);
  }
  return w;
}

Wavefunction restricted_amplitude(const Wavefunction& psi0, const ParticleParams& pp) {
  pp.validate();
  require_coverage(psi0);
  const auto& g = psi0.grid();
  auto r = reflection_indices(g);
  auto w = positive_weights(g);
  std::size_t n = psi0.size();
  std::vector<cplx> pos(n), neg(n);
  for (std::size_t j = 0; j < n; ++j) {
    pos[j] = w[j] * psi0.samples()[j];
    neg[j] = (1.0 - w[j]) * psi0.samples()[j];
  }
  auto rp = reflect(pos, r), rn = reflect(neg, r);
  std::vector<cplx> a(n), b(n);
  for (std::size_t j = 0; j < n; ++j) {
    a[j] = pos[j] - rp[j];
    b[j] = neg[j] - rn[j];
  }
  a = free_evolve(g, a, pp);
  b = free_evolve(g, b, pp);
  std::vector<cplx> out(n);
  for (std::size_t j = 0; j < n; ++j) out[j] = w[j] * a[j] + (1.0 - w[j]) * b[j];
  return Wavefunction::raw(g, std::move(out));
}

Wavefunction crossing_amplitude(const Wavefunction& psi0, const ParticleParams& pp) {
  pp.validate();
  require_coverage(psi0);
  const auto& g = psi0.grid();
  auto r = reflection_indices(g);
  auto w = positive_weights(g);
  std::size_t n = psi0.size();
  std::vector<cplx> pos(n), neg(n);
  for (std::size_t j = 0; j < n; ++j) {
    pos[j] = w[j] * psi0.samples()[j];
    neg[j] = (1.0 - w[j]) * psi0.samples()[j];
  }
  // final point x > 0: paths from x0 < 0, plus reflected paths from x0 > 0
  auto rp = reflect(pos, r), rn = reflect(neg, r);
  std::vector<cplx> a(n), b(n);
  for (std::size_t j = 0; j < n; ++j) {
    a[j] = neg[j] + rp[j];
    b[j] = pos[j] + rn[j];
  }
  a = free_evolve(g, a, pp);
  b = free_evolve(g, b, pp);
  std::vector<cplx> out(n);
  for (std::size_t j = 0; j < n; ++j) out[j] = w[j] * a[j] + (1.0 - w[j]) * b[j];
  return Wavefunction::raw(g, std::move(out));
}

Wavefunction restricted_amplitude_quadrature(const Wavefunction& psi0, const ParticleParams& pp) {
  require_time(pp);
  const auto& g = psi0.grid();
  auto w = positive_weights(g);
  std::size_t n = psi0.size();
  std::vector<cplx> out(n);
  const auto& s = psi0.samples();
  numerics::parallel_for(n, [&](std::size_t i) {
    double x = g[i];
    if (w[i] == 0.5) return;  // kernel vanishes at the origin
    cplx acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (s[j] == cplx(0.0)) continue;
      acc += restricted_propagator(x, g[j], pp) * s[j];
    }
    out[i] = acc * g.spacing();
  });
  return Wavefunction::raw(g, std::move(out));
}

CrossingDecoherenceTable decoherence_table(const Wavefunction& psi0, const ParticleParams& pp) {
  auto r = restricted_amplitude(psi0, pp);
  auto c = crossing_amplitude(psi0, pp);
  const auto& g = psi0.grid();
  return make_table(norm2(g, c.samples()), norm2(g, r.samples()),
                    inner(g, c.samples(), r.samples()));
}

Wavefunction brute_force_restricted(const Wavefunction& psi0, const ParticleParams& pp,
                                    std::size_t n_slices) {
  pp.validate();
  if (n_slices < 1) throw DomainError("brute_force_restricted: n_slices must be >= 1");
  require_coverage(psi0);
  const auto& g = psi0.grid();
  std::size_t n = psi0.size();
  std::vector<double> on_pos(n), on_neg(n);
  for (std::size_t j = 0; j < n; ++j) {
    on_pos[j] = g[j] > 0.5 * g.spacing() ? 1.0 : 0.0;
    on_neg[j] = g[j] < -0.5 * g.spacing() ? 1.0 : 0.0;
  }
  std::vector<cplx> a(n), b(n);
  for (std::size_t j = 0; j < n; ++j) {
    a[j] = on_pos[j] * psi0.samples()[j];
    b[j] = on_neg[j] * psi0.samples()[j];
  }
  ParticleParams step = pp;
  step.t = pp.t / static_cast<double>(n_slices);
  for (std::size_t k = 0; k < n_slices; ++k) {
    a = free_evolve(g, a, step);
    b = free_evolve(g, b, step);
    for (std::size_t j = 0; j < n; ++j) {
      a[j] *= on_pos[j];
      b[j] *= on_neg[j];
    }
  }
  for (std::size_t j = 0; j < n; ++j) a[j] += b[j];
  return Wavefunction::raw(g, std::move(a));
}

namespace {

cplx gaussian_at(double x, double x0, double p0, double sigma, double hbar) {
  double u = (x - x0) / sigma;
  return std::exp(-0.25 * u * u) * std::polar(1.0, p0 * x / hbar);
}

void require_width(double sigma) {
  if (!(sigma > 0) || !std::isfinite(sigma)) throw DomainError("Gaussian width must be positive");
}

}  // namespace

Wavefunction gaussian_state(const Grid1D& grid, double x0, double p0, double sigma, double hbar) {
  require_width(sigma);
  std::vector<cplx> s(grid.size());
  for (std::size_t j = 0; j < s.size(); ++j) s[j] = gaussian_at(grid[j], x0, p0, sigma, hbar);
  return Wavefunction(grid, std::move(s));
}

Wavefunction antisymmetric_gaussian(const Grid1D& grid, double x0, double p0, double sigma,
                                    double hbar) {
  require_width(sigma);
  auto r = reflection_indices(grid);
  std::vector<cplx> s(grid.size());
  for (std::size_t j = 0; j < s.size(); ++j) s[j] = gaussian_at(grid[j], x0, p0, sigma, hbar);
  std::vector<cplx> a(s.size());
  for (std::size_t j = 0; j < s.size(); ++j) a[j] = s[j] - s[r[j]];
  return Wavefunction(grid, std::move(a));
}

Wavefunction truncated_gaussian(const Grid1D& grid, double x0, double p0, double sigma,
                                double hbar) {
  require_width(sigma);
  std::vector<cplx> s(grid.size());
  for (std::size_t j = 0; j < s.size(); ++j)
    s[j] = grid[j] > 0.5 * grid.spacing() ? gaussian_at(grid[j], x0, p0, sigma, hbar) : 0.0;
  return Wavefunction(grid, std::move(s));
}

Wavefunction superposition(const Wavefunction& a, const Wavefunction& b, cplx ca, cplx cb) {
  if (a.size() != b.size()) throw DomainError("superposition: grid mismatch");
  std::vector<cplx> s(a.size());
  for (std::size_t j = 0; j < s.size(); ++j) s[j] = ca * a.samples()[j] + cb * b.samples()[j];
  return Wavefunction(a.grid(), std::move(s));
}

GridSuggestion suggest_grid(double x0, double p0, double sigma, const ParticleParams& pp) {
  pp.validate();
  require_width(sigma);
  double spread = pp.hbar * pp.t / (2.0 * pp.m * sigma);
  double L = std::abs(x0) + 5.0 * sigma + 3.0 * std::abs(p0) * pp.t / pp.m +
             5.0 * std::sqrt(pp.hbar * pp.t / (pp.m * sigma)) + 5.0 * spread;
  L = std::max(L, 10.0 * sigma);
  // Nyquist must clear the momentum content with room to spare
  double kmax = std::abs(p0) / pp.hbar + 10.0 / (2.0 * sigma);
  double dx = std::min(kPi / kmax, sigma / 8.0);
  std::size_t n = 64;
  while (2.0 * L / static_cast<double>(n) > dx) n *= 2;
  return {L, n};
}

double edge_amplitude(const Wavefunction& psi) {
  const auto& s = psi.samples();
  std::size_t n = s.size();
  std::size_t band = std::max<std::size_t>(1, n / 20);
  double peak = 0, edge = 0;
  for (std::size_t j = 0; j < n; ++j) peak = std::max(peak, std::abs(s[j]));
  for (std::size_t j = 0; j < band; ++j)
    edge = std::max({edge, std::abs(s[j]), std::abs(s[n - 1 - j])});
  return peak > 0 ? edge / peak : 0.0;
}

}  // namespace arrival::unitary
