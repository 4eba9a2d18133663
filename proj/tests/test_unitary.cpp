#include <cmath>
#include <vector>

#include "doctest.h"

#include "arrival/unitary.hpp"

using namespace arrival;
using namespace arrival::unitary;

namespace {

double sup_diff(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_SUITE("unitary") {

TEST_CASE("wavefunction normalizes and rejects bad input") {
  auto g = numerics::symmetric_periodic_grid(10.0, 128);
  std::vector<cplx> s(g.size(), 0.0);
  s[70] = 3.0;
  Wavefunction w(g, s);
  CHECK(w.norm2() == doctest::Approx(1.0));
  CHECK_THROWS_AS(Wavefunction(g, std::vector<cplx>(g.size(), 0.0)), DomainError);
  CHECK_THROWS_AS(Wavefunction(g, std::vector<cplx>(3, 1.0)), DomainError);
  CHECK_THROWS_AS((ParticleParams{-1.0, 1.0, 1.0}.validate()), DomainError);
}

TEST_CASE("free evolution of a Gaussian matches the spreading packet") {
  auto g = numerics::symmetric_periodic_grid(30.0, 1024);
  double x0 = 2.0, p0 = 1.5, s = 0.8, t = 3.0;
  auto psi = gaussian_state(g, x0, p0, s);
  auto out = free_evolve(g, psi.samples(), {1.0, 1.0, t});
  double st2 = s * s * (1.0 + std::pow(t / (2.0 * s * s), 2));
  double worst = 0;
  for (std::size_t j = 0; j < g.size(); ++j) {
    double x = g[j] - x0 - p0 * t;
    double expect = std::exp(-x * x / (2.0 * st2)) / std::sqrt(2.0 * kPi * st2);
    worst = std::max(worst, std::abs(std::norm(out[j]) - expect));
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("analytic kernels: restriction vanishes on the wall and kernels add up") {
  ParticleParams pp{1.3, 0.9, 0.7};
  for (double x0 : {0.2, 1.0, 3.5}) {
    CHECK(std::abs(restricted_propagator(0.0, x0, pp)) < 1e-15);
    for (double x : {-1.0, 0.4, 2.0}) {
      cplx sum = restricted_propagator(x, x0, pp) + crossing_propagator(x, x0, pp);
      CHECK(std::abs(sum - free_propagator(x, x0, pp)) < 1e-12);
    }
  }
  // |K| = sqrt(m / 2 pi hbar t)
  CHECK(std::abs(free_propagator(0.3, -0.2, pp)) ==
        doctest::Approx(std::sqrt(pp.m / (2 * kPi * pp.hbar * pp.t))));
  CHECK(std::arg(free_propagator(0.0, 0.0, pp)) == doctest::Approx(-kPi / 4));
  CHECK_THROWS(free_propagator(0.0, 1.0, {1.0, 1.0, 0.0}));
}

TEST_CASE("spectral image amplitude agrees with direct quadrature of the kernel") {
  // the two differ by whatever mass the initial state has on x < 0, so keep it negligible
  auto g = numerics::symmetric_periodic_grid(30.0, 512);
  auto psi = gaussian_state(g, 7.0, -1.0, 0.7);
  ParticleParams pp{1.0, 1.0, 2.0};
  auto a = restricted_amplitude(psi, pp);
  auto b = restricted_amplitude_quadrature(psi, pp);
  CHECK(sup_diff(a.samples(), b.samples()) < 1e-10);
}

TEST_CASE("sliced projections approach the image amplitude like sqrt(step)") {
  // frozen from a run: error ratio per doubling of the slice count
  auto g = numerics::symmetric_periodic_grid(12.0, 1024);
  auto psi = gaussian_state(g, 3.0, -4.0, 0.5);
  ParticleParams pp{1.0, 1.0, 1.0};
  auto exact = restricted_amplitude(psi, pp);
  std::vector<double> err;
  for (std::size_t n : {256u, 512u, 1024u}) {
    auto bf = brute_force_restricted(psi, pp, n);
    std::vector<cplx> d(g.size());
    for (std::size_t j = 0; j < g.size(); ++j) d[j] = bf.samples()[j] - exact.samples()[j];
    err.push_back(std::sqrt(norm2(g, d)));
  }
  for (std::size_t i = 0; i + 1 < err.size(); ++i) {
    double ratio = err[i] / err[i + 1];
    CHECK(ratio > 1.25);
    CHECK(ratio < 1.6);
  }
}

TEST_CASE("sum rule and table bookkeeping") {
  auto g = numerics::symmetric_periodic_grid(15.0, 256);
  auto psi = superposition(gaussian_state(g, 2.0, -1.0, 0.8), gaussian_state(g, -3.0, 2.0, 1.0),
                           1.0, cplx(0.3, 0.5));
  auto tb = decoherence_table(psi, {1.0, 1.0, 1.2});
  CHECK(std::abs(tb.sum_rule_residual) < 1e-12);
  CHECK(tb.p_cross >= 0);
  CHECK(tb.p_nocross >= 0);
  auto t0 = make_table(0.0, 1.0, cplx(0.1, 0.0));
  CHECK(std::isinf(t0.epsilon_ratio));
  auto t1 = make_table(0.25, 0.25, cplx(0.25, 0.0));
  CHECK(t1.epsilon_ratio == doctest::Approx(1.0));
  CHECK(t1.sum_rule_residual == doctest::Approx(0.0));
}

TEST_CASE("antisymmetric states never cross") {
  auto g = numerics::symmetric_periodic_grid(20.0, 512);
  auto psi = antisymmetric_gaussian(g, 2.5, -3.0, 0.6);
  for (double t : {0.1, 1.0, 4.0}) {
    auto tb = decoherence_table(psi, {1.0, 1.0, t});
    CHECK(tb.p_cross < 1e-12);
    CHECK(tb.p_nocross == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("one-sided inbound packet: restricted branch reflects, candidate p_cross exceeds one") {
  auto g = numerics::symmetric_periodic_grid(20.0, 512);
  auto psi = gaussian_state(g, 6.0, -3.0, 1.0);
  auto tb = decoherence_table(psi, {1.0, 1.0, 2.5});
  CHECK(tb.p_nocross == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(tb.p_cross > 1.0);
  CHECK(tb.d_offdiag.real() < -0.5);
}

TEST_CASE("support check and grid suggestion") {
  auto g = numerics::symmetric_periodic_grid(5.0, 128);
  auto wide = gaussian_state(g, 0.0, 0.0, 3.0);
  CHECK_THROWS_AS(decoherence_table(wide, {1.0, 1.0, 1.0}), SupportError);

  ParticleParams pp{1.0, 1.0, 2.0};
  auto s = suggest_grid(4.0, -2.0, 0.7, pp);
  auto gg = numerics::symmetric_periodic_grid(s.half_width, s.n_points);
  auto psi = gaussian_state(gg, 4.0, -2.0, 0.7);
  auto out = Wavefunction::raw(gg, free_evolve(gg, psi.samples(), pp));
  CHECK(edge_amplitude(out) < 1e-6);
  CHECK(out.norm2() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("positive weights") {
  auto g = numerics::symmetric_periodic_grid(2.0, 8);
  auto w = positive_weights(g);
  CHECK(w[g.zero_index()] == 0.5);
  CHECK(w[0] == 0.0);
  CHECK(w[7] == 1.0);
}

}
