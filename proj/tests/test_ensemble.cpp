#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"

#include "arrival/ensemble.hpp"

using namespace arrival;
using namespace arrival::ensemble;

namespace {

// coefficients of (1 + z)^a (1 + alpha z)^b by repeated multiplication
std::vector<double> poly_coeffs(std::size_t a, std::size_t b, double alpha) {
  std::vector<double> c = {1.0};
  auto mul = [&](double s) {
    std::vector<double> o(c.size() + 1, 0.0);
    for (std::size_t i = 0; i < c.size(); ++i) {
      o[i] += c[i];
      o[i + 1] += s * c[i];
    }
    c = o;
  };
  for (std::size_t i = 0; i < a; ++i) mul(1.0);
  for (std::size_t i = 0; i < b; ++i) mul(alpha);
  return c;
}

double rel(cplx a, cplx b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace

TEST_SUITE("ensemble") {

TEST_CASE("one-particle data constructors") {
  auto o = OneParticleHistoryData::with_alpha(0.3, 4.0);
  CHECK(o.alpha() == doctest::Approx(4.0));
  CHECK(std::abs(o.sum_rule_residual()) < 1e-14);
  CHECK(o.d.real() > 0);
  auto f = OneParticleHistoryData::factorized(cplx(0.4, 0.2));
  CHECK(f.alpha() == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(std::abs(f.sum_rule_residual()) < 1e-14);
  std::mt19937_64 eng(5);
  auto r = OneParticleHistoryData::random_physical(eng);
  CHECK(std::abs(r.sum_rule_residual()) < 1e-12);
  CHECK(r.alpha() >= 1.0 - 1e-12);  // Cauchy-Schwarz
  OneParticleHistoryData bad{0.5, 0.6, cplx(0.0)};
  CHECK_THROWS_AS(bad.validate(), DomainError);
}

TEST_CASE("N = 1 reproduces the single-particle functional") {
  OneParticleHistoryData o{0.35, 0.45, cplx(0.1, 0.07)};
  o.pbar = 1.0 - o.p - 2.0 * o.d.real();
  auto m = exact_matrix(1, o);
  CHECK(m.value(0, 0).real() == doctest::Approx(o.pbar));
  CHECK(m.value(1, 1).real() == doctest::Approx(o.p));
  CHECK(std::abs(m.value(0, 1)) == doctest::Approx(std::abs(o.d)));
  CHECK(std::abs(m.value(1, 0) - std::conj(m.value(0, 1))) < 1e-15);
  CHECK(std::abs(m.total() - cplx(1.0)) < 1e-14);
}

TEST_CASE("finite sums, contour and brute force agree") {
  std::mt19937_64 eng(11);
  for (int rep = 0; rep < 3; ++rep) {
    auto o = OneParticleHistoryData::random_physical(eng);
    const std::size_t N = 10;
    auto ex = exact_matrix(N, o);
    auto bf = brute_force_dnn(N, o);
    CHECK(ex.hermiticity_error() < 1e-13);
    CHECK(std::abs(ex.total() - cplx(1.0)) < 1e-12);
    for (std::size_t n = 0; n <= N; ++n)
      for (std::size_t np = 0; np <= N; ++np) {
        CHECK(rel(ex.value(n, np), bf.value(n, np)) < 1e-10);
        CHECK(rel(contour_dnn(N, n, np, o, 64).value(), ex.value(n, np)) < 1e-10);
      }
  }
  auto o = OneParticleHistoryData::with_alpha(0.4, 2.0);
  CHECK_THROWS_AS(contour_dnn(10, 3, 5, o, 8), ResolutionError);
  CHECK_THROWS(brute_force_dnn(13, o));
}

TEST_CASE("binning keeps the total and reduces to the matrix at width one") {
  auto o = OneParticleHistoryData::with_alpha(0.45, 30.0);
  auto m = exact_matrix(20, o);
  BinSpec w1;
  auto same = binned_matrix(m, w1);
  CHECK(same.N() == 20);
  CHECK(rel(same.value(4, 9), m.value(4, 9)) < 1e-14);
  for (std::size_t w : {2u, 4u, 6u}) {
    BinSpec b{w, 0};
    auto bm = binned_matrix(m, b);
    CHECK(std::abs(bm.total() - m.total()) < 1e-12);
    auto rs = b.ranges(20);
    CHECK(rs.front().first == 0);
    CHECK(rs.back().second == 20);  // inclusive ranges
  }
  BinSpec off{4, 2};
  auto rs = off.ranges(20);
  CHECK(rs.front().second == 1);
}

TEST_CASE("epsilon is one for factorized data and falls off like alpha^-|n-n'|") {
  auto f = OneParticleHistoryData::factorized(cplx(0.6, 0.1));
  auto m = exact_matrix(8, f);
  CHECK(epsilon_measure(m, 2, 5) == doctest::Approx(1.0).epsilon(1e-10));
  auto o = OneParticleHistoryData::with_alpha(0.4, 1e6);
  double le = log_epsilon_exact(30, 10, 13, o);
  CHECK(le == doctest::Approx(log_epsilon_large_alpha(30, 10, 13, 1e6)).epsilon(1e-4));
  CHECK(log_epsilon(exact_matrix(30, o), 10, 13) == doctest::Approx(le).epsilon(1e-10));
}

TEST_CASE("J sum against polynomial coefficients") {
  for (double alpha : {0.5, 3.0, 40.0})
    for (std::size_t n : {0u, 4u, 11u}) {
      const std::size_t N = 18;
      auto c = poly_coeffs(N - n, n, alpha);
      for (std::size_t np : {0u, 5u, 9u, 18u})
        CHECK(log_j_exact(N, n, np, alpha) == doctest::Approx(std::log(c[np])).epsilon(1e-12));
    }
}

TEST_CASE("saddle point: closed form, stable root and asymptotic J") {
  for (double alpha : {2.0, 50.0, 1e5}) {
    auto s = saddle_rho(400, 120, 180, alpha);
    CHECK(std::abs(s.residual) < 1e-8 * 180);
    CHECK(s.rho == doctest::Approx(saddle_rho_closed_form(400, 120, 180, alpha)).epsilon(1e-9));
    CHECK(s.kappa2 > 0);
  }
  // leading asymptotics; the error shrinks with N
  double e1 = std::abs(log_j_asymptotic(100, 30, 45, 5.0) - log_j_exact(100, 30, 45, 5.0));
  double e2 = std::abs(log_j_asymptotic(1000, 300, 450, 5.0) - log_j_exact(1000, 300, 450, 5.0));
  CHECK(e2 < e1);
  CHECK(e2 < 1e-2);
}

TEST_CASE("near-one regime and peak statistics") {
  OneParticleHistoryData o = OneParticleHistoryData::with_alpha(0.3, 1.05);
  auto e = near_one_regime(200, 60, 64, o);
  CHECK_FALSE(e.regime_warning);
  CHECK(e.delta > 0);
  CHECK(e.log_epsilon_estimate < 0);
  CHECK(e.log_p_exact.size() == 201);
  auto far = near_one_regime(200, 60, 64, OneParticleHistoryData::with_alpha(0.3, 5.0));
  CHECK(far.regime_warning);

  std::vector<double> lp(11);
  for (std::size_t k = 0; k <= 10; ++k) lp[k] = numerics::log_binomial(10, k) - 10 * std::log(2.0);
  auto ps = peak_stats(lp);
  CHECK(ps.argmax == 5);
  CHECK(ps.mean == doctest::Approx(5.0));
  CHECK(ps.variance == doctest::Approx(2.5));
  CHECK(ps.total == doctest::Approx(1.0));
}

TEST_CASE("large N stays finite in log space") {
  auto o = OneParticleHistoryData::with_alpha(0.25, 1e3);
  auto lp = log_candidate_probabilities(5000, o);
  for (double v : lp) CHECK(std::isfinite(v));
  auto cp = candidate_probabilities(60, o);
  double s = 0;
  for (double v : cp) s += v;
  CHECK(s < 1.0);
  CHECK(std::isfinite(log_epsilon_exact(5000, 1200, 1300, o)));
}

}
