#include "arrival/quantum.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace arrival::quantum {

DensityMatrixGrid::DensityMatrixGrid(Grid1D grid, std::vector<cplx> samples)
    : grid_(grid), samples_(std::move(samples)) {
  if (samples_.size() != grid_.size() * grid_.size())
    throw DomainError("DensityMatrixGrid: size mismatch");
  numerics::require_finite(samples_, "DensityMatrixGrid");
}

DensityMatrixGrid DensityMatrixGrid::zeros(const Grid1D& grid) {
  return DensityMatrixGrid(grid, std::vector<cplx>(grid.size() * grid.size(), 0.0));
}

DensityMatrixGrid DensityMatrixGrid::pure(const Wavefunction& psi) {
  std::size_t n = psi.size();
  std::vector<cplx> s(n * n);
  const auto& a = psi.samples();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) s[i * n + j] = a[i] * std::conj(a[j]);
  return DensityMatrixGrid(psi.grid(), std::move(s));
}

DensityMatrixGrid DensityMatrixGrid::mixture(const std::vector<Wavefunction>& states,
                                             const std::vector<double>& weights) {
  if (states.empty() || states.size() != weights.size())
    throw DomainError("mixture: need one weight per state");
  double wsum = 0;
  for (double w : weights) {
    if (w < 0) throw DomainError("mixture: weights must be non-negative");
    wsum += w;
  }
  if (!(wsum > 0)) throw DomainError("mixture: weights sum to zero");
  auto out = zeros(states.front().grid());
  std::size_t n = out.n();
  for (std::size_t k = 0; k < states.size(); ++k) {
    if (states[k].size() != n) throw DomainError("mixture: grid mismatch");
    const auto& a = states[k].samples();
    double w = weights[k] / wsum;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) out.at(i, j) += w * a[i] * std::conj(a[j]);
  }
  return out;
}

cplx DensityMatrixGrid::trace() const {
  numerics::CompensatedSum re, im;
  for (std::size_t i = 0; i < n(); ++i) {
    re.add(at(i, i).real());
    im.add(at(i, i).imag());
  }
  return cplx(re.value(), im.value()) * grid_.spacing();
}

double DensityMatrixGrid::hermiticity_error() const {
  double e = 0;
  for (std::size_t i = 0; i < n(); ++i)
    for (std::size_t j = i; j < n(); ++j) e = std::max(e, std::abs(at(i, j) - std::conj(at(j, i))));
  return e;
}

double DensityMatrixGrid::min_diagonal() const {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n(); ++i) m = std::min(m, at(i, i).real());
  return m;
}

double DensityMatrixGrid::position_std() const {
  double s0 = 0, s1 = 0, s2 = 0;
  for (std::size_t i = 0; i < n(); ++i) {
    double w = at(i, i).real(), x = grid_[i];
    s0 += w;
    s1 += w * x;
    s2 += w * x * x;
  }
  double mean = s1 / s0;
  return std::sqrt(std::max(s2 / s0 - mean * mean, 0.0));
}

double DensityMatrixGrid::mass_nonpositive() const {
  double s = 0;
  for (std::size_t i = 0; i < n(); ++i)
    if (grid_[i] <= 0.5 * grid_.spacing()) s += std::max(at(i, i).real(), 0.0);
  return s * grid_.spacing();
}

DensityMatrixGrid DensityMatrixGrid::adjoint() const {
  auto out = zeros(grid_);
  for (std::size_t i = 0; i < n(); ++i)
    for (std::size_t j = 0; j < n(); ++j) out.at(i, j) = std::conj(at(j, i));
  return out;
}

namespace {

void require_same_grid(const DensityMatrixGrid& a, const DensityMatrixGrid& b) {
  if (a.n() != b.n() || a.grid().x_min() != b.grid().x_min() ||
      a.grid().spacing() != b.grid().spacing())
    throw DomainError("density matrices live on different grids");
}

}  // namespace

DensityMatrixGrid operator+(const DensityMatrixGrid& a, const DensityMatrixGrid& b) {
  require_same_grid(a, b);
  auto out = a;
  for (std::size_t k = 0; k < out.samples().size(); ++k) out.samples()[k] += b.samples()[k];
  return out;
}

DensityMatrixGrid operator-(const DensityMatrixGrid& a, const DensityMatrixGrid& b) {
  require_same_grid(a, b);
  auto out = a;
  for (std::size_t k = 0; k < out.samples().size(); ++k) out.samples()[k] -= b.samples()[k];
  return out;
}

double sup_distance(const DensityMatrixGrid& a, const DensityMatrixGrid& b) {
  require_same_grid(a, b);
  double e = 0;
  for (std::size_t k = 0; k < a.samples().size(); ++k)
    e = std::max(e, std::abs(a.samples()[k] - b.samples()[k]));
  return e;
}

void validate_particle(const ParticleParams& pp) {
  if (!(pp.m > 0) || std::isnan(pp.m)) throw DomainError("particle mass must be positive");
  if (!(pp.hbar > 0) || !std::isfinite(pp.hbar)) throw DomainError("hbar must be positive");
}

double max_stable_step(const Grid1D& grid, const ParticleParams& pp, const MasterOptions& o) {
  validate_particle(pp);
  if (std::isinf(pp.m)) return std::numeric_limits<double>::infinity();
  double dx = grid.spacing();
  return o.stability_constant * pp.m * dx * dx / pp.hbar;
}

namespace {

void decohere(std::vector<cplx>& s, const Grid1D& g, double Dp, double hbar, double tau) {
  if (Dp == 0 || tau == 0) return;
  std::size_t n = g.size();
  double c = Dp * tau / (hbar * hbar);
  // the factor only depends on i - j
  std::vector<double> f(2 * n - 1);
  for (std::size_t d = 0; d < 2 * n - 1; ++d) {
    double dx = (static_cast<double>(d) - static_cast<double>(n - 1)) * g.spacing();
    f[d] = std::exp(-c * dx * dx);
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) s[i * n + j] *= f[i + n - 1 - j];
}

void kinetic(std::vector<cplx>& s, const Grid1D& g, const ParticleParams& pp, double dt) {
  if (std::isinf(pp.m)) return;
  std::size_t n = g.size();
  auto k = numerics::fft_wavenumbers(n, g.spacing());
  numerics::fft2_forward(s, n, n);
  double c = pp.hbar * dt / (2.0 * pp.m);
  double inv = 1.0 / static_cast<double>(n * n);
  std::vector<cplx> row(n), col(n);
  for (std::size_t i = 0; i < n; ++i) {
    row[i] = std::polar(1.0, -c * k[i] * k[i]);
    col[i] = std::polar(inv, c * k[i] * k[i]);
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) s[i * n + j] *= row[i] * col[j];
  numerics::fft2_backward(s, n, n);
}

void check_step(const Grid1D& g, double dt, const ParticleParams& pp, const MasterOptions& o) {
  if (!std::isfinite(dt) || dt <= 0) throw StepSizeError("time step must be positive and finite");
  double lim = max_stable_step(g, pp, o);
  if (dt > lim)
    throw StepSizeError("time step " + std::to_string(dt) + " exceeds bound " + std::to_string(lim));
}

}  // namespace

DensityMatrixGrid master_step(const DensityMatrixGrid& rho, double dt, const BathParams& bath,
                              const ParticleParams& pp, const MasterOptions& o) {
  bath.validate(true);
  check_step(rho.grid(), dt, pp, o);
  auto s = rho.samples();
  decohere(s, rho.grid(), bath.Dp(), pp.hbar, 0.5 * dt);
  kinetic(s, rho.grid(), pp, dt);
  decohere(s, rho.grid(), bath.Dp(), pp.hbar, 0.5 * dt);
  return DensityMatrixGrid(rho.grid(), std::move(s));
}

DensityMatrixGrid evolve(const DensityMatrixGrid& rho, double t, std::size_t n_steps,
                         const BathParams& bath, const ParticleParams& pp,
                         const MasterOptions& o) {
  if (n_steps < 1) throw DomainError("evolve: need at least one step");
  if (t == 0) return rho;
  double dt = t / static_cast<double>(n_steps);
  bath.validate(true);
  check_step(rho.grid(), dt, pp, o);
  auto s = rho.samples();
  // adjacent half steps of decoherence merge
  decohere(s, rho.grid(), bath.Dp(), pp.hbar, 0.5 * dt);
  for (std::size_t k = 0; k < n_steps; ++k) {
    kinetic(s, rho.grid(), pp, dt);
    decohere(s, rho.grid(), bath.Dp(), pp.hbar, k + 1 == n_steps ? 0.5 * dt : dt);
  }
  return DensityMatrixGrid(rho.grid(), std::move(s));
}

double WignerGrid::integral() const { return numerics::integrate_grid(grid, samples); }

std::vector<double> WignerGrid::position_marginal() const {
  std::size_t np = grid.p_axis.size(), nx = grid.x_axis.size();
  std::vector<double> out(nx, 0.0);
  // the p axis is periodic: plain sum times spacing
  for (std::size_t l = 0; l < np; ++l)
    for (std::size_t u = 0; u < nx; ++u) out[u] += samples[l * nx + u];
  for (auto& v : out) v *= grid.p_axis.spacing();
  return out;
}

std::vector<double> WignerGrid::momentum_marginal() const {
  std::size_t np = grid.p_axis.size(), nx = grid.x_axis.size();
  std::vector<double> out(np);
  for (std::size_t l = 0; l < np; ++l)
    out[l] = numerics::integrate_grid(grid.x_axis, std::span<const double>(samples).subspan(l * nx, nx));
  return out;
}

double WignerGrid::min_value() const { return *std::min_element(samples.begin(), samples.end()); }

// For X_u the lag xi = q dx runs over q = (u mod 2) + 2s, s in [-n/2, n/2),
// i.e. rho(x_a, x_b) with a = (u + q) / 2, b = (u - q) / 2; samples outside the
// box are zero. Exponent e^{-i p_l q dx / hbar} = e^{-i pi l q / n}.
WignerGrid wigner_transform(const DensityMatrixGrid& rho, double hbar) {
  std::size_t n = rho.n();
  if (n % 2 != 0) throw DomainError("wigner_transform: grid size must be even");
  if (!(hbar > 0)) throw DomainError("wigner_transform: hbar must be positive");
  const Grid1D& g = rho.grid();
  double dx = g.spacing();
  double dp = kPi * hbar / (static_cast<double>(n) * dx);
  long long half = static_cast<long long>(n / 2);
  std::size_t nX = 2 * n - 1;
  WignerGrid w;
  w.grid = Grid2D{Grid1D(-static_cast<double>(half) * dp, static_cast<double>(half - 1) * dp, n),
                  Grid1D(g.x_min(), g.x_min() + static_cast<double>(n - 1) * dx, nX)};
  w.samples.assign(n * nX, 0.0);
  w.rho_grid = g;
  w.hbar = hbar;
  double scale = 2.0 * dx / (2.0 * kPi * hbar);
  numerics::parallel_for(nX, [&](std::size_t u) {
    long long par = static_cast<long long>(u % 2);
    std::vector<cplx> f(n, 0.0);
    // slot index s mod n
    for (long long s = -half; s < half; ++s) {
      long long q = par + 2 * s;
      long long a2 = static_cast<long long>(u) + q, b2 = static_cast<long long>(u) - q;
      long long a = a2 / 2, b = b2 / 2;
      if (a < 0 || b < 0 || a >= static_cast<long long>(n) || b >= static_cast<long long>(n)) continue;
      f[static_cast<std::size_t>((s + static_cast<long long>(n)) % static_cast<long long>(n))] =
          rho.at(static_cast<std::size_t>(a), static_cast<std::size_t>(b));
    }
    numerics::fft_forward(f);  // F[l] = sum_s f[s] e^{-2 pi i l s / n}
    for (long long l = -half; l < half; ++l) {
      cplx v = f[static_cast<std::size_t>((l + static_cast<long long>(n)) % static_cast<long long>(n))];
      if (par) v *= std::polar(1.0, -kPi * static_cast<double>(l) / static_cast<double>(n));
      w.samples[static_cast<std::size_t>(l + half) * nX + u] = scale * v.real();
    }
  });
  return w;
}

DensityMatrixGrid inverse_wigner(const WignerGrid& w) {
  const Grid1D& g = w.rho_grid;
  std::size_t n = g.size();
  std::size_t nX = 2 * n - 1;
  if (w.grid.p_axis.size() != n || w.grid.x_axis.size() != nX || w.samples.size() != n * nX)
    throw DomainError("inverse_wigner: grid does not match the stored density-matrix grid");
  double dx = g.spacing();
  double scale = 2.0 * dx / (2.0 * kPi * w.hbar);
  long long half = static_cast<long long>(n / 2);
  auto out = DensityMatrixGrid::zeros(g);
  numerics::parallel_for(nX, [&](std::size_t u) {
    long long par = static_cast<long long>(u % 2);
    std::vector<cplx> F(n);
    for (long long l = -half; l < half; ++l) {
      cplx v = w.samples[static_cast<std::size_t>(l + half) * nX + u];
      if (par) v *= std::polar(1.0, kPi * static_cast<double>(l) / static_cast<double>(n));
      F[static_cast<std::size_t>((l + static_cast<long long>(n)) % static_cast<long long>(n))] = v;
    }
    numerics::fft_backward(F);
    double inv = 1.0 / (static_cast<double>(n) * scale);
    for (long long s = -half; s < half; ++s) {
      long long q = par + 2 * s;
      long long a2 = static_cast<long long>(u) + q, b2 = static_cast<long long>(u) - q;
      long long a = a2 / 2, b = b2 / 2;
      if (a < 0 || b < 0 || a >= static_cast<long long>(n) || b >= static_cast<long long>(n)) continue;
      // each (a, b) belongs to exactly one u, so writes never collide
      out.at(static_cast<std::size_t>(a), static_cast<std::size_t>(b)) =
          F[static_cast<std::size_t>((s + static_cast<long long>(n)) % static_cast<long long>(n))] * inv;
    }
  });
  return out;
}

QuantumCrossingResult quantum_crossing_probabilities(const DensityMatrixGrid& rho0, double t,
                                                     const BathParams& bath,
                                                     const ParticleParams& pp,
                                                     const CoarseOptions& o) {
  bath.validate();
  validate_particle(pp);
  if (!(t > 0) || !std::isfinite(t)) throw DomainError("time must be positive");
  if (rho0.mass_nonpositive() > 1e-8) throw SupportError("initial state has mass at x <= 0");

  QuantumCrossingResult res;
  double sx = rho0.position_std();
  res.regime_ratio = pp.hbar / std::sqrt(bath.Dp() * t) / sx;
  res.regime_ok = res.regime_ratio <= 0.1;
  if (!res.regime_ok && o.strict)
    throw RegimeError("decoherence too weak: hbar/sqrt(Dp t) = " +
                      std::to_string(pp.hbar / std::sqrt(bath.Dp() * t)) +
                      " exceeds a tenth of the packet width " + std::to_string(sx));

  auto W = wigner_transform(rho0, pp.hbar);
  res.wigner_min = W.min_value();
  std::size_t np = W.grid.p_axis.size(), nX = W.grid.x_axis.size();

  // support box of the Wigner function on x > 0
  double wmax = 0;
  for (double v : W.samples) wmax = std::max(wmax, std::abs(v));
  double thr = 1e-12 * wmax;
  double plo = 1e300, phi = -1e300, xlo = 1e300, xhi = -1e300;
  for (std::size_t l = 0; l < np; ++l)
    for (std::size_t u = 0; u < nX; ++u) {
      if (std::abs(W.samples[l * nX + u]) <= thr) continue;
      double X = W.grid.x_axis[u];
      if (X <= 0) continue;
      double p = W.grid.p_axis[l];
      plo = std::min(plo, p);
      phi = std::max(phi, p);
      xlo = std::min(xlo, X);
      xhi = std::max(xhi, X);
    }
  if (!(phi > plo) || !(xhi > xlo)) throw SupportError("Wigner function has no support in x > 0");
  Grid1D cp(plo, phi, o.n_p), cx(xlo, xhi, o.n_x);

  // cloud-in-cell deposit of W dp dX onto the coarse nodes
  std::vector<double> mass(o.n_p * o.n_x, 0.0);
  double cell = W.grid.p_axis.spacing() * W.grid.x_axis.spacing();
  for (std::size_t l = 0; l < np; ++l)
    for (std::size_t u = 0; u < nX; ++u) {
      double v = W.samples[l * nX + u];
      double X = W.grid.x_axis[u];
      if (v == 0.0 || X <= 0) continue;
      double fp = (W.grid.p_axis[l] - plo) / cp.spacing();
      double fx = (X - xlo) / cx.spacing();
      fp = std::clamp(fp, 0.0, static_cast<double>(o.n_p - 1));
      fx = std::clamp(fx, 0.0, static_cast<double>(o.n_x - 1));
      std::size_t ip = std::min(static_cast<std::size_t>(fp), o.n_p - 2);
      std::size_t ix = std::min(static_cast<std::size_t>(fx), o.n_x - 2);
      double ap = fp - static_cast<double>(ip), ax = fx - static_cast<double>(ix);
      double m = v * cell;
      mass[ip * o.n_x + ix] += m * (1 - ap) * (1 - ax);
      mass[(ip + 1) * o.n_x + ix] += m * ap * (1 - ax);
      mass[ip * o.n_x + ix + 1] += m * (1 - ap) * ax;
      mass[(ip + 1) * o.n_x + ix + 1] += m * ap * ax;
    }

  BathParams b = bath;
  std::vector<double> contrib(mass.size(), 0.0);
  numerics::parallel_for(mass.size(), [&](std::size_t k) {
    if (std::abs(mass[k]) < 1e-14) return;
    classical::PhaseSpacePoint pt{cp[k / o.n_x], cx[k % o.n_x]};
    contrib[k] = mass[k] * classical::point_survival(pt, t, b, o.quad);
  });
  numerics::CompensatedSum acc;
  for (double c : contrib) acc.add(c);
  res.raw_nocross = acc.value();
  double pr = std::clamp(res.raw_nocross, 0.0, 1.0);
  res.clamp_magnitude = std::abs(pr - res.raw_nocross);
  res.table = unitary::make_table(1.0 - pr, pr, 0.0);
  return res;
}

double BranchDensities::completeness_error() const {
  return sup_distance(rho_rr + rho_rc + rho_cr + rho_cc, full);
}

namespace {

// keep only entries where the masked coordinates are strictly positive
void restrict_quadrant(std::vector<cplx>& s, const Grid1D& g, bool in_x, bool in_y) {
  std::size_t n = g.size();
  double h = 0.5 * g.spacing();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if ((in_x && g[i] <= h) || (in_y && g[j] <= h)) s[i * n + j] = 0.0;
}

// odd extension of the x > 0 (and / or y > 0) part across the origin
void odd_extend(std::vector<cplx>& s, const Grid1D& g, const std::vector<std::size_t>& r, bool in_x,
                bool in_y) {
  std::size_t n = g.size();
  double h = 0.5 * g.spacing();
  std::vector<int> sign(n);
  for (std::size_t i = 0; i < n; ++i) sign[i] = g[i] > h ? 1 : (g[i] < -h ? -1 : 0);
  // the -L node has no mirror on the grid
  sign[0] = g[0] < -h && r[0] == 0 ? 0 : sign[0];
  std::vector<cplx> out(s.size(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t si = i;
    int fx = 1;
    if (in_x) {
      if (sign[i] == 0) continue;
      if (sign[i] < 0) {
        si = r[i];
        fx = -1;
      }
    }
    for (std::size_t j = 0; j < n; ++j) {
      std::size_t sj = j;
      int fy = 1;
      if (in_y) {
        if (sign[j] == 0) continue;
        if (sign[j] < 0) {
          sj = r[j];
          fy = -1;
        }
      }
      out[i * n + j] = static_cast<double>(fx * fy) * s[si * n + sj];
    }
  }
  s.swap(out);
}

}  // namespace

BranchDensities branch_densities(const DensityMatrixGrid& rho0, double t, std::size_t n_slices,
                                 const BathParams& bath, const ParticleParams& pp,
                                 BranchMethod method, const MasterOptions& o) {
  bath.validate(true);
  validate_particle(pp);
  if (n_slices < 16) throw DomainError("branch_densities: n_slices must be >= 16");
  if (!(t > 0) || !std::isfinite(t)) throw DomainError("time must be positive");
  if (rho0.mass_nonpositive() > 1e-8) throw SupportError("initial state has mass at x <= 0");
  const Grid1D& g = rho0.grid();
  double dt = t / static_cast<double>(n_slices);
  check_step(g, dt, pp, o);
  auto r = numerics::reflection_indices(g);
  double Dp = bath.Dp();

  auto full = rho0.samples();
  auto rr = full, rx = full;
  restrict_quadrant(rr, g, true, true);
  restrict_quadrant(rx, g, true, false);

  for (std::size_t k = 0; k < n_slices; ++k) {
    for (auto* s : {&full, &rr, &rx}) decohere(*s, g, Dp, pp.hbar, 0.5 * dt);
    if (method == BranchMethod::dirichlet) {
      odd_extend(rr, g, r, true, true);
      odd_extend(rx, g, r, true, false);
    }
    for (auto* s : {&full, &rr, &rx}) kinetic(*s, g, pp, dt);
    restrict_quadrant(rr, g, true, true);
    restrict_quadrant(rx, g, true, false);
    for (auto* s : {&full, &rr, &rx}) decohere(*s, g, Dp, pp.hbar, 0.5 * dt);
  }

  BranchDensities b;
  b.full = DensityMatrixGrid(g, std::move(full));
  b.rho_rr = DensityMatrixGrid(g, std::move(rr));
  b.rho_rc = DensityMatrixGrid(g, std::move(rx)) - b.rho_rr;
  b.rho_cr = b.rho_rc.adjoint();
  b.rho_cc = b.full - b.rho_rr - b.rho_rc - b.rho_cr;
  return b;
}

DecayFit offdiagonal_decay_profile(const DensityMatrixGrid& rho0, const std::vector<double>& times,
                                   const BathParams& bath, const ParticleParams& pp,
                                   double max_dt, const MasterOptions& o) {
  bath.validate(true);
  validate_particle(pp);
  for (std::size_t k = 1; k < times.size(); ++k)
    if (!(times[k] > times[k - 1])) throw DomainError("decay profile: times must increase");
  if (times.empty() || times.front() < 0) throw DomainError("decay profile: need times >= 0");
  const Grid1D& g = rho0.grid();
  auto r = numerics::reflection_indices(g);
  std::size_t n = g.size();
  std::size_t probe = 0;
  double best = -1;
  for (std::size_t i = 0; i < n; ++i) {
    if (g[i] <= 0.5 * g.spacing()) continue;
    double v = std::abs(rho0.at(i, r[i]));
    if (v > best) {
      best = v;
      probe = i;
    }
  }
  DecayFit fit;
  fit.x_probe = g[probe];
  fit.predicted_rate = bath.Dp() * 4.0 * fit.x_probe * fit.x_probe / (pp.hbar * pp.hbar);
  if (!(best > 0)) {
    fit.insufficient_range = true;
    return fit;
  }

  std::vector<double> ts{0.0}, ys{0.0};
  DensityMatrixGrid rho = rho0;
  double now = 0;
  for (double target : times) {
    if (target == 0) continue;
    double span = target - now;
    auto steps = static_cast<std::size_t>(std::ceil(span / max_dt - 1e-12));
    steps = std::max<std::size_t>(steps, 1);
    rho = evolve(rho, span, steps, bath, pp, o);
    now = target;
    double ratio = std::abs(rho.at(probe, r[probe])) / best;
    if (ratio < 1e-12) break;
    ts.push_back(target);
    ys.push_back(std::log(ratio));
  }
  if (ts.size() < 3) {
    fit.insufficient_range = true;
    if (ts.size() < 2) return fit;
  }
  auto lf = numerics::fit_line(ts, ys);
  fit.rate = -lf.slope;
  fit.r_squared = lf.r_squared;
  return fit;
}

}  // namespace arrival::quantum
