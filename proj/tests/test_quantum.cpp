#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"

#include "arrival/quantum.hpp"

using namespace arrival;
using namespace arrival::quantum;

namespace {

const double kInf = std::numeric_limits<double>::infinity();

}  // namespace

TEST_SUITE("quantum") {

TEST_CASE("density matrix construction") {
  auto g = numerics::symmetric_periodic_grid(8.0, 64);
  auto a = unitary::gaussian_state(g, 1.0, 0.5, 0.7);
  auto b = unitary::gaussian_state(g, -2.0, -1.0, 0.9);
  auto r = DensityMatrixGrid::pure(a);
  CHECK(r.trace().real() == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(r.hermiticity_error() < 1e-16);
  auto m = DensityMatrixGrid::mixture({a, b}, {2.0, 6.0});
  CHECK(m.trace().real() == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(m.min_diagonal() >= 0.0);
  CHECK(sup_distance(m, m.adjoint()) < 1e-16);
  CHECK(r.position_std() == doctest::Approx(0.7).epsilon(1e-6));
  CHECK_THROWS_AS(DensityMatrixGrid(g, std::vector<cplx>(10)), DomainError);
}

TEST_CASE("without decoherence the master equation is the free evolution") {
  auto g = numerics::symmetric_periodic_grid(12.0, 128);
  auto psi = unitary::gaussian_state(g, 1.0, 1.5, 0.8);
  ParticleParams pp{1.0, 1.0, 1.4};
  auto rho = evolve(DensityMatrixGrid::pure(psi), pp.t, 20, {1.0, 0.0, 1.0}, pp);
  auto u = unitary::free_evolve(g, psi.samples(), pp);
  double worst = 0;
  for (std::size_t i = 0; i < g.size(); ++i)
    for (std::size_t j = 0; j < g.size(); ++j)
      worst = std::max(worst, std::abs(rho.at(i, j) - u[i] * std::conj(u[j])));
  CHECK(worst < 1e-12);
}

TEST_CASE("step size guard") {
  auto g = numerics::symmetric_periodic_grid(8.0, 64);
  auto rho = DensityMatrixGrid::pure(unitary::gaussian_state(g, 0.0, 0.0, 1.0));
  ParticleParams pp{1.0, 1.0, 0.0};
  double cap = max_stable_step(g, pp);
  CHECK(cap == doctest::Approx(50.0 * g.spacing() * g.spacing()));
  CHECK_THROWS_AS(master_step(rho, 2.0 * cap, BathParams::from_diffusion(1.0, 1.0), pp),
                  StepSizeError);
  // frozen kinetic term has no limit
  CHECK_NOTHROW(master_step(rho, 100.0, BathParams::from_diffusion(1.0, 1.0), {kInf, 1.0, 0.0}));
}

TEST_CASE("off-diagonal decay rate: exact when frozen, close otherwise") {
  auto g = numerics::symmetric_periodic_grid(10.0, 128);
  auto cat = unitary::superposition(unitary::gaussian_state(g, -3.0, 0.0, 0.6),
                                    unitary::gaussian_state(g, 3.0, 0.0, 0.6), 1.0, 1.0);
  auto rho = DensityMatrixGrid::pure(cat);
  auto b = BathParams::from_diffusion(1.0, 0.05);
  auto f = offdiagonal_decay_profile(rho, {0.0, 0.05, 0.1, 0.15, 0.2}, b, {kInf, 1.0, 0.0}, 0.05);
  CHECK(f.rate == doctest::Approx(f.predicted_rate).epsilon(1e-10));
  CHECK(f.x_probe == doctest::Approx(3.0).epsilon(0.05));
  auto h = offdiagonal_decay_profile(rho, {0.0, 0.02, 0.04, 0.06}, b, {1.0, 1.0, 0.0}, 0.01);
  CHECK(h.rate == doctest::Approx(h.predicted_rate).epsilon(0.1));
}

TEST_CASE("Wigner function of a Gaussian against the closed form") {
  auto g = numerics::symmetric_periodic_grid(10.0, 128);
  double x0 = 0.5, p0 = 1.0, s = 0.9;
  auto w = wigner_transform(DensityMatrixGrid::pure(unitary::gaussian_state(g, x0, p0, s)));
  CHECK(w.integral() == doctest::Approx(1.0).epsilon(1e-12));
  double worst = 0;
  for (std::size_t l = 0; l < w.grid.p_axis.size(); ++l)
    for (std::size_t u = 0; u < w.grid.x_axis.size(); ++u) {
      double p = w.grid.p_axis[l], x = w.grid.x_axis[u];
      double expect = std::exp(-(x - x0) * (x - x0) / (2 * s * s) - 2 * s * s * (p - p0) * (p - p0)) / kPi;
      worst = std::max(worst, std::abs(w.samples[l * w.grid.x_axis.size() + u] - expect));
    }
  CHECK(worst < 1e-8);
}

TEST_CASE("Wigner marginals and cat-state negativity") {
  auto g = numerics::symmetric_periodic_grid(10.0, 128);
  auto cat = unitary::superposition(unitary::gaussian_state(g, -3.0, 0.0, 0.7),
                                    unitary::gaussian_state(g, 3.0, 0.0, 0.7), 1.0, 1.0);
  auto rho = DensityMatrixGrid::pure(cat);
  auto w = wigner_transform(rho);
  auto pm = w.position_marginal();
  // integer nodes X_{2i} coincide with the density-matrix grid
  for (std::size_t i = 0; i < g.size(); i += 5)
    CHECK(pm[2 * i] == doctest::Approx(rho.at(i, i).real()).epsilon(1e-10));
  CHECK(w.min_value() < -0.1);
  auto back = inverse_wigner(w);
  CHECK(sup_distance(rho, back) < 1e-12);
}

TEST_CASE("decoherent crossing probabilities") {
  auto g = numerics::symmetric_periodic_grid(16.0, 1068);
  auto b = BathParams::from_diffusion(1.0, 25.0);
  ParticleParams pp{1.0, 1.0, 5.0};
  auto out = DensityMatrixGrid::pure(unitary::gaussian_state(g, 6.0, 45.0, 1.0));
  auto r = quantum_crossing_probabilities(out, pp.t, b, pp);
  CHECK(r.regime_ok);
  CHECK(r.table.p_nocross > 0.95);
  CHECK(r.offdiag_neglected);
  CHECK(r.table.d_offdiag == cplx(0.0));
  CHECK(r.table.p_cross + r.table.p_nocross == doctest::Approx(1.0));

  CoarseOptions strict;
  strict.strict = true;
  auto weak = BathParams::from_diffusion(1.0, 0.1);
  CHECK_THROWS_AS(quantum_crossing_probabilities(out, pp.t, weak, pp, strict), RegimeError);
  auto lax = quantum_crossing_probabilities(out, pp.t, weak, pp);
  CHECK_FALSE(lax.regime_ok);

  auto over = DensityMatrixGrid::pure(unitary::gaussian_state(g, 1.0, 0.0, 1.0));
  CHECK_THROWS_AS(quantum_crossing_probabilities(over, pp.t, b, pp), SupportError);
}

TEST_CASE("branch densities: completeness and the unitary limit") {
  auto g = numerics::symmetric_periodic_grid(12.0, 128);
  auto psi = unitary::gaussian_state(g, 5.0, -2.0, 0.8);
  ParticleParams pp{1.0, 1.0, 2.0};
  auto rho = DensityMatrixGrid::pure(psi);
  auto br = branch_densities(rho, pp.t, 32, {1.0, 0.0, 1.0}, pp);
  CHECK(br.completeness_error() < 1e-12);
  auto tb = unitary::decoherence_table(psi, pp);
  CHECK(br.rho_rr.trace().real() == doctest::Approx(tb.p_nocross).epsilon(1e-10));
  CHECK(br.rho_rc.trace().real() == doctest::Approx(tb.d_offdiag.real()).epsilon(1e-8));
  CHECK(sup_distance(br.rho_cr, br.rho_rc.adjoint()) < 1e-14);
  // the restricted branch stays on x > 0
  for (std::size_t i = 0; i < g.size(); ++i)
    if (g[i] < 0) CHECK(std::abs(br.rho_rr.at(i, i)) < 1e-14);
  CHECK_THROWS_AS(branch_densities(rho, pp.t, 8, {1.0, 0.0, 1.0}, pp), DomainError);
}

TEST_CASE("sliced projections move toward the continuum restriction") {
  auto g = numerics::symmetric_periodic_grid(12.0, 128);
  auto rho = DensityMatrixGrid::pure(unitary::gaussian_state(g, 5.0, -2.0, 0.8));
  ParticleParams pp{1.0, 1.0, 2.0};
  auto b = BathParams::from_diffusion(1.0, 1.0);
  double prev = 0;
  for (std::size_t n : {16u, 64u, 256u}) {
    auto br = branch_densities(rho, pp.t, n, b, pp, BranchMethod::projection);
    CHECK(br.completeness_error() < 1e-12);
    double rr = br.rho_rr.trace().real();
    CHECK(rr > prev);
    prev = rr;
  }
  auto cont = branch_densities(rho, pp.t, 256, b, pp, BranchMethod::dirichlet);
  CHECK(prev < cont.rho_rr.trace().real() + 1e-9);
}

}
