#include <cmath>
#include <vector>

#include "doctest.h"

#include "arrival/classical.hpp"

using namespace arrival;
using namespace arrival::classical;

namespace {

// trapezoid over a box around the kernel's mean
double kernel_mass(const PhaseSpacePoint& ini, double t, const BathParams& b) {
  double sp = std::sqrt(2.0 * b.Dp() * t), sx = std::sqrt(2.0 * b.Dp() * t * t * t / 3.0) / b.m;
  double xc = ini.x + ini.p * t / b.m;
  numerics::Grid2D g{numerics::Grid1D(ini.p - 10 * sp, ini.p + 10 * sp, 241),
                     numerics::Grid1D(xc - 10 * sx, xc + 10 * sx, 241)};
  std::vector<double> v(g.size());
  for (std::size_t i = 0; i < 241; ++i)
    for (std::size_t j = 0; j < 241; ++j)
      v[i * 241 + j] = fp_propagator({g.p_axis[i], g.x_axis[j]}, t, ini, b);
  return numerics::integrate_grid(g, v);
}

}  // namespace

TEST_SUITE("classical") {

TEST_CASE("bath parameters") {
  BathParams b{2.0, 0.25, 3.0};
  CHECK(b.Dp() == doctest::Approx(3.0));
  auto c = BathParams::from_diffusion(1.5, 0.6);
  CHECK(c.Dp() == doctest::Approx(0.6));
  CHECK_THROWS_AS((BathParams{1.0, -1.0, 1.0}.validate()), DomainError);
  CHECK_THROWS_AS((BathParams{1.0, 0.0, 1.0}.validate()), DomainError);
  CHECK_NOTHROW((BathParams{1.0, 0.0, 1.0}.validate(true)));
}

TEST_CASE("unrestricted kernel: unit mass for several masses and times") {
  for (double m : {1.0, 2.5})
    for (double t : {0.3, 1.7}) {
      BathParams b{m, 0.4, 1.2};
      CHECK(kernel_mass({0.7, -0.4}, t, b) == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("displayed prefactor is sqrt(pi) above the determinant value") {
  BathParams b{1.3, 0.5, 0.8};
  for (double t : {0.5, 2.0})
    CHECK(fp_prefactor_printed(t, b) / fp_prefactor_determinant(t, b) ==
          doctest::Approx(std::sqrt(kPi)).epsilon(1e-14));
}

TEST_CASE("kernel exponent equals the stationary-path action") {
  BathParams b{1.4, 0.3, 0.9};
  PhaseSpacePoint i{0.5, 1.0}, f{-0.3, 1.8};
  double t = 1.1;
  auto path = stationary_path(i.x, i.p / b.m, f.x, f.p / b.m, t);
  CHECK(path.value(0) == doctest::Approx(i.x));
  CHECK(path.value(t) == doctest::Approx(f.x));
  CHECK(path.velocity(0) == doctest::Approx(i.p / b.m));
  CHECK(path.velocity(t) == doctest::Approx(f.p / b.m));
  // closed-form action against quadrature
  double q = numerics::adaptive_simpson([&](double s) { return path.accel(s) * path.accel(s); }, 0, t);
  CHECK(path.accel_action() == doctest::Approx(q).epsilon(1e-12));
  CHECK(stationary_exponent(path, b) == doctest::Approx(fp_exponent(f, t, i, b)).epsilon(1e-12));
}

TEST_CASE("Carslaw angles lie in [0, 2 pi) and the kernel agrees in polar form") {
  BathParams b = BathParams::from_diffusion(1.0, 1.0);
  for (double p : {-2.0, 0.5, 3.0})
    for (double x : {0.1, 1.5}) {
      auto c = carslaw_map({p, x}, {0.3, 0.8}, 0.9, b);
      CHECK(c.theta >= 0.0);
      CHECK(c.theta < 2 * kPi);
      CHECK(c.theta0 >= 0.0);
      CHECK(c.theta0 < 2 * kPi);
      CHECK(polar_kernel(c) == doctest::Approx(fp_propagator({p, x}, 0.9, {0.3, 0.8}, b)).epsilon(1e-12));
    }
}

TEST_CASE("restricted kernel: absorbing on p > 0, zero on x < 0, equals K far from the wall") {
  BathParams b = BathParams::from_diffusion(1.0, 1.0);
  for (double p : {0.01, 0.5, 4.0})
    CHECK(std::abs(restricted_fp_propagator({p, 0.0}, 0.8, {-0.5, 1.2}, b)) <
          1e-12 * fp_prefactor_determinant(0.8, b));
  CHECK(restricted_fp_propagator({0.3, -0.1}, 0.8, {0.0, 1.0}, b) == 0.0);
  CHECK_THROWS_AS(restricted_fp_propagator({0.3, 1.0}, 0.8, {0.0, -0.5}, b), DomainError);
  // deep interior, short time: the image term is negligible
  PhaseSpacePoint i{0.0, 8.0}, f{0.1, 8.02};
  CHECK(restricted_fp_propagator(f, 0.1, i, b) ==
        doctest::Approx(fp_propagator(f, 0.1, i, b)).epsilon(1e-10));
}

TEST_CASE("restricted kernel is non-negative on the two-sheeted cover") {
  BathParams b = BathParams::from_diffusion(1.0, 1.0);
  for (double p : {-3.0, -1.0, 0.0, 1.0, 3.0})
    for (double x : {0.01, 0.3, 1.0, 2.0})
      CHECK(restricted_fp_propagator({p, x}, 0.7, {-0.4, 0.5}, b) >= -1e-15);
}

TEST_CASE("survival limits and Langevin agreement away from the wall") {
  BathParams b = BathParams::from_diffusion(1.0, 1.0);
  CHECK(point_survival({0.0, 6.0}, 0.5, b) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(point_survival({-8.0, 0.5}, 1.0, b) < 1e-6);
  // image term small here, so analytic and Monte Carlo must agree
  auto w0 = gaussian_distribution(0.0, 1.0, 0.05, 0.05);
  double an = survival_probability(w0, 0.5, b);
  auto mc = langevin_survival(w0, 0.5, b, 20000, 400, {7, 0});
  CHECK(std::abs(an - mc.mean) < 3.0 * mc.stderr_ + 1e-4);
}

TEST_CASE("Langevin estimator: argument checks and reproducibility") {
  BathParams b = BathParams::from_diffusion(1.0, 1.0);
  auto w0 = gaussian_distribution(-0.5, 1.0, 0.2, 0.2);
  CHECK_THROWS_AS(langevin_survival(w0, 0.5, b, 10, 1000, {1, 0}), DomainError);
  CHECK_THROWS_AS(langevin_survival(w0, 0.5, b, 5000, 10, {1, 0}), DomainError);
  auto a = langevin_survival(w0, 0.5, b, 5000, 200, {99, 3});
  auto c = langevin_survival(w0, 0.5, b, 5000, 200, {99, 3});
  CHECK(a.mean == c.mean);
  CHECK(a.stderr_ == c.stderr_);
}

TEST_CASE("flux form matches 1 - survival where the image term is small") {
  BathParams b = BathParams::from_diffusion(1.0, 1.0);
  auto w0 = gaussian_distribution(2.0, 2.0, 0.05, 0.05);
  double s = survival_probability(w0, 0.5, b);
  double c = crossing_probability_flux(w0, 0.5, b);
  CHECK(s + c == doctest::Approx(1.0).epsilon(2e-3));
}

TEST_CASE("image kernel solves the equation locally but leaks mass near the wall") {
  BathParams b = BathParams::from_diffusion(1.0, 1.0);
  CHECK(fp_residual_unrestricted({0.2, 0.9}, 0.6, {0.0, 0.5}, b) < 1e-5);
  CHECK(fp_residual_restricted({0.2, 0.3}, 0.5, {0.0, 0.3}, b) < 1e-3);
  // survival + wall flux should be one; frozen from a run (0.911 at t = 1)
  PhaseSpacePoint i{0.0, 0.3};
  CHECK(point_survival(i, 0.1, b) + point_crossing_flux(i, 0.1, b) == doctest::Approx(1.0).epsilon(1e-3));
  double bal = point_survival(i, 1.0, b) + point_crossing_flux(i, 1.0, b);
  CHECK(bal < 0.93);
  CHECK(bal > 0.89);
}

TEST_CASE("short-time survival resolves the narrow kernel") {
  BathParams b = BathParams::from_diffusion(1.0, 1.0);
  for (double t : {1e-3, 1e-2})
    CHECK(point_survival({0.0, 0.3}, t, b) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("phase-space distributions") {
  auto w = gaussian_distribution(0.5, 2.0, 0.3, 0.2);
  CHECK(w.mass() == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(w.mass_nonpositive_x() == 0.0);
  std::vector<double> neg(w.samples.size(), 1.0);
  neg[3] = -1.0;
  CHECK_THROWS_AS(PhaseSpaceDistribution::make(w.grid, neg, DistributionKind::classical), DomainError);
  CHECK_NOTHROW(PhaseSpaceDistribution::make(w.grid, neg, DistributionKind::wigner));
  auto bad = gaussian_distribution(0.0, 0.5, 0.3, 0.2);
  CHECK_THROWS(survival_probability(bad, 0.5, BathParams::from_diffusion(1.0, 1.0)));
}

}
