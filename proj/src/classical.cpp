#include "arrival/classical.hpp"

#include <algorithm>
#include <cmath>

namespace arrival::classical {

void BathParams::validate(bool allow_zero_gamma) const {
  if (!std::isfinite(m) || !std::isfinite(gamma) || !std::isfinite(kT))
    throw NumericError("BathParams: non-finite value");
  if (m <= 0 || kT <= 0) throw DomainError("BathParams: m and kT must be positive");
  if (gamma < 0 || (gamma == 0 && !allow_zero_gamma))
    throw DomainError("BathParams: gamma must be positive");
}

BathParams BathParams::from_diffusion(double m, double Dp) {
  BathParams b;
  b.m = m;
  b.kT = 1.0;
  b.gamma = Dp / (2.0 * m);
  b.validate(true);
  return b;
}

PhaseSpaceDistribution PhaseSpaceDistribution::make(Grid2D grid, std::vector<double> samples,
                                                    DistributionKind kind) {
  if (samples.size() != grid.size()) throw DomainError("PhaseSpaceDistribution: size mismatch");
  numerics::require_finite(samples, "PhaseSpaceDistribution");
  if (kind == DistributionKind::classical)
    for (double v : samples)
      if (v < -1e-12) throw DomainError("classical distribution has negative samples");
  PhaseSpaceDistribution d{grid, std::move(samples), kind};
  double mass = d.mass();
  if (!(mass > 0)) throw DomainError("PhaseSpaceDistribution: non-positive total mass");
  for (auto& v : d.samples) v /= mass;
  return d;
}

double PhaseSpaceDistribution::mass() const { return numerics::integrate_grid(grid, samples); }

double PhaseSpaceDistribution::mass_nonpositive_x() const {
  std::vector<double> cut(samples.size(), 0.0);
  std::size_t nx = grid.x_axis.size();
  for (std::size_t i = 0; i < samples.size(); ++i)
    if (grid.x_axis[i % nx] <= 0) cut[i] = samples[i];
  return numerics::integrate_grid(grid, cut);
}

PhaseSpaceDistribution gaussian_distribution(double p0, double x0, double sigma_p, double sigma_x,
                                             std::size_t n_p, std::size_t n_x, double n_sigma) {
  if (!(sigma_p > 0) || !(sigma_x > 0)) throw DomainError("gaussian_distribution: widths must be positive");
  Grid2D g{Grid1D(p0 - n_sigma * sigma_p, p0 + n_sigma * sigma_p, n_p),
           Grid1D(x0 - n_sigma * sigma_x, x0 + n_sigma * sigma_x, n_x)};
  std::vector<double> s(g.size());
  for (std::size_t i = 0; i < n_p; ++i)
    for (std::size_t j = 0; j < n_x; ++j) {
      double u = (g.p_axis[i] - p0) / sigma_p, v = (g.x_axis[j] - x0) / sigma_x;
      s[i * n_x + j] = std::exp(-0.5 * (u * u + v * v));
    }
  return PhaseSpaceDistribution::make(g, std::move(s), DistributionKind::classical);
}

namespace {

void require_positive_time(double t) {
  if (!std::isfinite(t)) throw NumericError("time must be finite");
  if (t <= 0) throw DomainError("time must be positive");
}

constexpr double kSqrt3 = 1.7320508075688772935;

}  // namespace

double fp_prefactor_determinant(double t, const BathParams& bath) {
  require_positive_time(t);
  bath.validate();
  return kSqrt3 * bath.m / (2.0 * kPi * bath.Dp() * t * t);
}

double fp_prefactor_printed(double t, const BathParams& bath) {
  require_positive_time(t);
  bath.validate();
  double D = bath.Dp();
  return std::sqrt(3.0 * bath.m * bath.m / (4.0 * kPi * D * D * t * t * t * t));
}

double fp_exponent(const PhaseSpacePoint& f, double t, const PhaseSpacePoint& i,
                   const BathParams& bath) {
  require_positive_time(t);
  bath.validate();
  double D = bath.Dp(), m = bath.m;
  double alpha = 1.0 / (D * t);
  double beta = 3.0 * m * m / (D * t * t * t);
  double eps = 3.0 * m / (D * t * t);
  double P = f.p - i.p;
  double Q = f.x - i.x - i.p * t / m;
  return -alpha * P * P - beta * Q * Q + eps * P * Q;
}

double fp_propagator(const PhaseSpacePoint& f, double t, const PhaseSpacePoint& i,
                     const BathParams& bath) {
  return fp_prefactor_determinant(t, bath) * std::exp(fp_exponent(f, t, i, bath));
}

namespace {

double angle_2pi(double y, double x) {
  double a = std::atan2(y, x);
  if (a < 0) a += 2.0 * kPi;
  if (a >= 2.0 * kPi) a -= 2.0 * kPi;
  return a;
}

}  // namespace

CarslawCoords carslaw_map(const PhaseSpacePoint& f, const PhaseSpacePoint& i, double t,
                          const BathParams& bath) {
  require_positive_time(t);
  bath.validate();
  double m = bath.m;
  CarslawCoords c;
  double X = f.p / m - 1.5 * f.x / t;
  double Y = 0.5 * kSqrt3 * f.x / t;
  double x0 = i.x;
  double X0 = -0.5 * i.p / m - 1.5 * x0 / t;
  double Y0 = 0.5 * kSqrt3 * (i.p / m + x0 / t);
  if (X0 == 0 && Y0 == 0) {
    c.degenerate = true;
    x0 += 1e-12;
    X0 = -0.5 * i.p / m - 1.5 * x0 / t;
    Y0 = 0.5 * kSqrt3 * (i.p / m + x0 / t);
  }
  c.r = std::hypot(X, Y);
  c.theta = angle_2pi(Y, X);
  c.r0 = std::hypot(X0, Y0);
  c.theta0 = angle_2pi(Y0, X0);
  c.t_tilde = bath.Dp() * t / (m * m);
  c.norm = fp_prefactor_determinant(t, bath);
  return c;
}

double polar_kernel(const CarslawCoords& c) {
  double q = c.r * c.r + c.r0 * c.r0 - 2.0 * c.r * c.r0 * std::cos(c.theta - c.theta0);
  return c.norm * std::exp(-q / c.t_tilde);
}

double multiform_green(const CarslawCoords& c) {
  if (!(c.t_tilde > 0)) throw DomainError("multiform_green: t_tilde must be positive");
  double d = c.theta - c.theta0;
  double a = 2.0 * std::sqrt(c.r * c.r0 / c.t_tilde) * std::cos(0.5 * d);
  double q = c.r * c.r + c.r0 * c.r0 - 2.0 * c.r * c.r0 * std::cos(d);
  return c.norm / kSqrtPi * std::exp(-q / c.t_tilde) * numerics::gauss_tail_integral(a);
}

double restricted_fp_propagator(const PhaseSpacePoint& f, double t, const PhaseSpacePoint& i,
                                const BathParams& bath) {
  if (!(i.x > 0)) throw DomainError("restricted propagator needs an initial point with x > 0");
  if (f.x < 0) return 0.0;  // absorbed paths never reach x < 0
  CarslawCoords c = carslaw_map(f, i, t, bath);
  CarslawCoords img = c;
  img.theta0 = -c.theta0;
  return multiform_green(c) - multiform_green(img);
}

namespace {

struct Box {
  double p_lo, p_hi, x_lo, x_hi;
};

Box kernel_box(const PhaseSpacePoint& i, double t, const BathParams& bath, double n_sigma) {
  double D = bath.Dp(), m = bath.m;
  double sp = std::sqrt(2.0 * D * t);
  double sx = std::sqrt(2.0 * D * t * t * t / 3.0) / m;
  double reach = std::max(i.x, i.x + i.p * t / m);
  // short times: the kernel is far narrower than its distance to the wall
  double low = std::max(std::min(i.x, i.x + i.p * t / m) - n_sigma * sx, 0.0);
  return {i.p - n_sigma * sp, i.p + n_sigma * sp, low, std::max(reach, 0.0) + n_sigma * sx};
}

void require_support(const PhaseSpaceDistribution& w0) {
  if (w0.mass_nonpositive_x() > 1e-8)
    throw SupportError("initial distribution has mass at x <= 0");
}

// trapezoid over the w0 grid of a per-point functional
template <class F>
double fold_over_distribution(const PhaseSpaceDistribution& w0, F&& per_point) {
  std::size_t np = w0.grid.p_axis.size(), nx = w0.grid.x_axis.size();
  std::vector<double> vals(w0.samples.size(), 0.0);
  numerics::parallel_for(vals.size(), [&](std::size_t k) {
    double w = w0.samples[k];
    if (w == 0.0) return;
    double x0 = w0.grid.x_axis[k % nx];
    if (x0 <= 0) return;
    vals[k] = w * per_point(PhaseSpacePoint{w0.grid.p_axis[k / nx], x0});
  });
  (void)np;
  return numerics::integrate_grid(w0.grid, vals);
}

}  // namespace

double point_survival(const PhaseSpacePoint& i, double t, const BathParams& bath,
                      const QuadratureOptions& q) {
  require_positive_time(t);
  Box b = kernel_box(i, t, bath, q.n_sigma);
  Grid1D gp(b.p_lo, b.p_hi, q.n_p), gx(b.x_lo, b.x_hi, q.n_x);
  std::vector<double> v(q.n_p * q.n_x);
  for (std::size_t a = 0; a < q.n_p; ++a)
    for (std::size_t c = 0; c < q.n_x; ++c)
      v[a * q.n_x + c] = restricted_fp_propagator({gp[a], gx[c]}, t, i, bath);
  return numerics::integrate_grid(Grid2D{gp, gx}, v);
}

double survival_probability(const PhaseSpaceDistribution& w0, double t, const BathParams& bath,
                            const QuadratureOptions& q) {
  require_positive_time(t);
  bath.validate();
  require_support(w0);
  return fold_over_distribution(w0, [&](const PhaseSpacePoint& pt) {
    return point_survival(pt, t, bath, q);
  });
}

double point_crossing_flux(const PhaseSpacePoint& i, double t, const BathParams& bath,
                           const QuadratureOptions& q) {
  require_positive_time(t);
  Grid1D gt(0.0, t, q.n_t + 1);
  std::vector<double> rate(gt.size(), 0.0);
  for (std::size_t k = 1; k < gt.size(); ++k) {
    double tk = gt[k];
    Box b = kernel_box(i, tk, bath, q.n_sigma);
    double lo = std::min(b.p_lo, -1e-12);
    Grid1D gp(lo, 0.0, q.n_p);
    std::vector<double> v(q.n_p);
    for (std::size_t a = 0; a < q.n_p; ++a)
      v[a] = -gp[a] / bath.m * restricted_fp_propagator({gp[a], 0.0}, tk, i, bath);
    rate[k] = numerics::integrate_grid(gp, v);
  }
  return numerics::integrate_grid(gt, rate);
}

double crossing_probability_flux(const PhaseSpaceDistribution& w0, double t,
                                 const BathParams& bath, const QuadratureOptions& q) {
  require_positive_time(t);
  bath.validate();
  require_support(w0);
  return fold_over_distribution(w0, [&](const PhaseSpacePoint& pt) {
    return point_crossing_flux(pt, t, bath, q);
  });
}

namespace {

template <class K>
double fp_residual(K&& kern, const PhaseSpacePoint& f, double t, const PhaseSpacePoint& i,
                   const BathParams& bath, double h) {
  double ft = (kern(f, t + h) - kern(f, t - h)) / (2 * h);
  double fx = (kern({f.p, f.x + h}, t) - kern({f.p, f.x - h}, t)) / (2 * h);
  double f0 = kern(f, t);
  double fpp = (kern({f.p + h, f.x}, t) - 2 * f0 + kern({f.p - h, f.x}, t)) / (h * h);
  double r = ft + f.p / bath.m * fx - bath.Dp() * fpp;
  (void)i;
  return std::abs(ft) > 0 ? std::abs(r) / std::abs(ft) : std::abs(r);
}

}  // namespace

double fp_residual_unrestricted(const PhaseSpacePoint& f, double t, const PhaseSpacePoint& i,
                                const BathParams& bath, double h) {
  return fp_residual([&](const PhaseSpacePoint& q, double tt) { return fp_propagator(q, tt, i, bath); },
                     f, t, i, bath, h);
}

double fp_residual_restricted(const PhaseSpacePoint& f, double t, const PhaseSpacePoint& i,
                              const BathParams& bath, double h) {
  return fp_residual(
      [&](const PhaseSpacePoint& q, double tt) { return restricted_fp_propagator(q, tt, i, bath); },
      f, t, i, bath, h);
}

namespace {

// inverse-CDF sampling of grid nodes with uniform jitter inside the cell
struct NodeSampler {
  std::vector<double> cdf;
  const PhaseSpaceDistribution* w;
  explicit NodeSampler(const PhaseSpaceDistribution& d) : w(&d) {
    cdf.resize(d.samples.size());
    double acc = 0;
    for (std::size_t k = 0; k < cdf.size(); ++k) {
      acc += std::max(0.0, d.samples[k]);
      cdf[k] = acc;
    }
    for (auto& c : cdf) c /= acc;
  }
  template <class Eng>
  PhaseSpacePoint draw(Eng& eng) const {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double r = u(eng);
    std::size_t k = static_cast<std::size_t>(std::lower_bound(cdf.begin(), cdf.end(), r) - cdf.begin());
    k = std::min(k, cdf.size() - 1);
    std::size_t nx = w->grid.x_axis.size();
    double p = w->grid.p_axis[k / nx] + (u(eng) - 0.5) * w->grid.p_axis.spacing();
    double x = w->grid.x_axis[k % nx] + (u(eng) - 0.5) * w->grid.x_axis.spacing();
    return {p, x};
  }
};

constexpr std::size_t kPathBlock = 4096;

}  // namespace

LangevinEstimate langevin_survival(const PhaseSpaceDistribution& w0, double t,
                                   const BathParams& bath, std::size_t n_paths,
                                   std::size_t n_steps, const numerics::RandomStream& stream) {
  require_positive_time(t);
  bath.validate();
  if (n_paths < 1000) throw DomainError("langevin_survival: n_paths must be >= 1000");
  if (n_steps < 100) throw DomainError("langevin_survival: n_steps must be >= 100");
  NodeSampler sampler(w0);
  double dt = t / static_cast<double>(n_steps);
  double m = bath.m;
  double kick = std::sqrt(2.0 * bath.Dp() * dt);
  std::size_t n_blocks = (n_paths + kPathBlock - 1) / kPathBlock;
  std::vector<std::size_t> alive(n_blocks, 0);
  numerics::parallel_for(n_blocks, [&](std::size_t b) {
    numerics::RandomStream s{stream.seed, (stream.stream_index << 24) + b};
    auto eng = s.engine();
    std::normal_distribution<double> nd(0.0, 1.0);
    std::size_t lo = b * kPathBlock, hi = std::min(n_paths, lo + kPathBlock);
    std::size_t count = 0;
    for (std::size_t k = lo; k < hi; ++k) {
      PhaseSpacePoint z = sampler.draw(eng);
      bool ok = z.x > 0;
      for (std::size_t j = 0; j < n_steps && ok; ++j) {
        z.x += z.p / m * dt;
        z.p += kick * nd(eng);
        if (z.x <= 0) ok = false;
      }
      if (ok) ++count;
    }
    alive[b] = count;
  });
  std::size_t total = 0;
  for (auto c : alive) total += c;
  LangevinEstimate e;
  e.n_paths = n_paths;
  e.n_steps = n_steps;
  e.mean = static_cast<double>(total) / static_cast<double>(n_paths);
  e.stderr_ = std::sqrt(std::max(e.mean * (1.0 - e.mean), 0.0) / static_cast<double>(n_paths));
  // typical displacement per step against the distance to the wall
  double mean_x = 0, mean_p = 0;
  {
    std::size_t nx = w0.grid.x_axis.size();
    std::vector<double> wx(w0.samples.size()), wp(w0.samples.size());
    for (std::size_t k = 0; k < w0.samples.size(); ++k) {
      wx[k] = w0.samples[k] * w0.grid.x_axis[k % nx];
      wp[k] = w0.samples[k] * std::abs(w0.grid.p_axis[k / nx]);
    }
    mean_x = numerics::integrate_grid(w0.grid, wx);
    mean_p = numerics::integrate_grid(w0.grid, wp);
  }
  double step = (mean_p + 3.0 * std::sqrt(2.0 * bath.Dp() * t)) / m * dt;
  e.coarse_step_warning = step > 0.05 * mean_x;
  return e;
}

double CubicPath::accel_action() const {
  // integral of (2 c2 + 6 c3 s)^2 over [0, tau]
  double T = tau;
  return 4 * c2 * c2 * T + 12 * c2 * c3 * T * T + 12 * c3 * c3 * T * T * T;
}

CubicPath stationary_path(double X0, double V0, double Xf, double Vf, double tau) {
  if (!(tau > 0) || !std::isfinite(tau)) throw DomainError("stationary_path: tau must be positive");
  double Q = Xf - X0 - tau * V0;
  double k3 = (Vf - V0) / (tau * tau) - 2.0 * Q / (tau * tau * tau);
  CubicPath c;
  c.tau = tau;
  c.c0 = X0;
  c.c1 = V0;
  // Q s^2 / tau^2 + k3 s^2 (s - tau)
  c.c2 = Q / (tau * tau) - k3 * tau;
  c.c3 = k3;
  return c;
}

double stationary_exponent(const CubicPath& path, const BathParams& bath) {
  bath.validate();
  return -bath.m / (8.0 * bath.gamma * bath.kT) * path.accel_action();
}

}  // namespace arrival::classical
