#pragma once

// Classical Brownian first passage through x = 0 in phase space, in the
// limit of negligible dissipation: Fokker-Planck propagator, Carslaw's
// two-sheeted Green function and the restricted (absorbing) kernel built
// from it, survival / crossing probabilities and a Langevin oracle.

#include <vector>

#include "arrival/numerics.hpp"

namespace arrival::classical {

using numerics::Grid1D;
using numerics::Grid2D;

struct BathParams {
  double m = 1.0;
  double gamma = 0.5;
  double kT = 1.0;

  double Dp() const { return 2.0 * m * gamma * kT; }
  // gamma = 0 (no environment) is only meaningful for the quantum evolution
  void validate(bool allow_zero_gamma = false) const;
  // kT fixed at 1, gamma chosen to give the requested diffusion constant.
  static BathParams from_diffusion(double m, double Dp);
};

struct PhaseSpacePoint {
  double p = 0.0;
  double x = 0.0;
};

enum class DistributionKind { classical, wigner };

// samples[ip * nx + ix]; normalized by trapezoid quadrature on construction
// (classical kind must also be non-negative).
struct PhaseSpaceDistribution {
  Grid2D grid;
  std::vector<double> samples;
  DistributionKind kind = DistributionKind::classical;

  static PhaseSpaceDistribution make(Grid2D grid, std::vector<double> samples,
                                     DistributionKind kind);
  double mass() const;
  // Mass carried by nodes with x <= 0.
  double mass_nonpositive_x() const;
};

PhaseSpaceDistribution gaussian_distribution(double p0, double x0, double sigma_p, double sigma_x,
                                             std::size_t n_p = 21, std::size_t n_x = 21,
                                             double n_sigma = 5.0);

// Normalization constant of the unrestricted kernel. The determinant value is
// the one used; the other is kept for the self-test that exposes the mismatch.
double fp_prefactor_determinant(double t, const BathParams& bath);
double fp_prefactor_printed(double t, const BathParams& bath);

double fp_propagator(const PhaseSpacePoint& final_pt, double t, const PhaseSpacePoint& initial,
                     const BathParams& bath);

// Polar coordinates of the Gaussian form of the kernel. Angles are measured
// in [0, 2 pi) from the absorbing ray (x = 0, p > 0).
struct CarslawCoords {
  double r = 0.0;
  double theta = 0.0;
  double r0 = 0.0;
  double theta0 = 0.0;
  double t_tilde = 0.0;
  double norm = 0.0;        // prefactor of the unrestricted kernel
  bool degenerate = false;  // initial point sat on the coordinate origin
};

CarslawCoords carslaw_map(const PhaseSpacePoint& final_pt, const PhaseSpacePoint& initial, double t,
                          const BathParams& bath);

// Unrestricted kernel written in the polar coordinates.
double polar_kernel(const CarslawCoords& c);
// Two-sheeted Green function; theta - theta0 is used as given, not reduced.
double multiform_green(const CarslawCoords& c);
double restricted_fp_propagator(const PhaseSpacePoint& final_pt, double t,
                                const PhaseSpacePoint& initial, const BathParams& bath);

struct QuadratureOptions {
  std::size_t n_p = 241;
  std::size_t n_x = 241;
  std::size_t n_t = 200;  // flux form only
  double n_sigma = 8.0;
};

// Survival from a single phase-space point: integral of K_r over x > 0.
double point_survival(const PhaseSpacePoint& initial, double t, const BathParams& bath,
                      const QuadratureOptions& q = {});
double survival_probability(const PhaseSpaceDistribution& w0, double t, const BathParams& bath,
                            const QuadratureOptions& q = {});
// Time-integrated inward flux through x = 0.
double point_crossing_flux(const PhaseSpacePoint& initial, double t, const BathParams& bath,
                           const QuadratureOptions& q = {});
double crossing_probability_flux(const PhaseSpaceDistribution& w0, double t,
                                 const BathParams& bath, const QuadratureOptions& q = {});

// Finite-difference residual of dK/dt + (p/m) dK/dx - Dp d2K/dp2 relative to
// |dK/dt|; diagnostics for how well a kernel solves the Fokker-Planck equation.
double fp_residual_unrestricted(const PhaseSpacePoint& f, double t, const PhaseSpacePoint& i,
                                const BathParams& bath, double h = 1e-4);
double fp_residual_restricted(const PhaseSpacePoint& f, double t, const PhaseSpacePoint& i,
                              const BathParams& bath, double h = 1e-4);

struct LangevinEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;
  std::size_t n_paths = 0;
  std::size_t n_steps = 0;
  bool coarse_step_warning = false;
};

LangevinEstimate langevin_survival(const PhaseSpaceDistribution& w0, double t,
                                   const BathParams& bath, std::size_t n_paths,
                                   std::size_t n_steps, const numerics::RandomStream& stream);

// Cubic X(s) = c0 + c1 s + c2 s^2 + c3 s^3 solving X'''' = 0 with both
// endpoint positions and velocities fixed.
struct CubicPath {
  double c0 = 0, c1 = 0, c2 = 0, c3 = 0;
  double tau = 0;
  double value(double s) const { return c0 + s * (c1 + s * (c2 + s * c3)); }
  double velocity(double s) const { return c1 + s * (2 * c2 + 3 * s * c3); }
  double accel(double s) const { return 2 * c2 + 6 * c3 * s; }
  // closed-form integral of accel^2 over [0, tau]
  double accel_action() const;
};

CubicPath stationary_path(double X0, double V0, double Xf, double Vf, double tau);

// -(m / 8 gamma kT) * integral of Xdd^2 along the stationary path.
double stationary_exponent(const CubicPath& path, const BathParams& bath);
// Exponent of fp_propagator (the log of K / N).
double fp_exponent(const PhaseSpacePoint& final_pt, double t, const PhaseSpacePoint& initial,
                   const BathParams& bath);

}  // namespace arrival::classical
