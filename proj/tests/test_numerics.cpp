#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>
#include <vector>

#include "doctest.h"

#include "arrival/numerics.hpp"

using namespace arrival;
using namespace arrival::numerics;

TEST_SUITE("numerics") {

TEST_CASE("grid endpoints and spacing") {
  Grid1D g(-1.0, 1.0, 5);
  CHECK(g.size() == 5);
  CHECK(g.spacing() == doctest::Approx(0.5));
  CHECK(g[0] == -1.0);
  CHECK(g[4] == doctest::Approx(1.0));
  CHECK(g.zero_index() == 2);
  CHECK_THROWS_AS(Grid1D(1.0, -1.0, 5), DomainError);
  CHECK_THROWS_AS(Grid1D(0.0, 1.0, 1), DomainError);
}

TEST_CASE("periodic grid has a node at zero and reflection is an involution") {
  auto g = symmetric_periodic_grid(8.0, 64);
  CHECK(g.spacing() == doctest::Approx(0.25));
  REQUIRE(g.zero_index() == 32);
  auto r = reflection_indices(g);
  for (std::size_t j = 0; j < g.size(); ++j) {
    CHECK(r[r[j]] == j);
    if (j > 0) CHECK(g[r[j]] == doctest::Approx(-g[j]));
  }
  CHECK(r[0] == 0);  // -L maps onto itself through periodicity
}

TEST_CASE("log binomial against exact integers") {
  CHECK(std::exp(log_binomial(10, 3)) == doctest::Approx(120.0).epsilon(1e-14));
  // C(60, 30) = 118264581564861424
  CHECK(log_binomial(60, 30) == doctest::Approx(std::log(118264581564861424.0)).epsilon(1e-15));
  CHECK(log_binomial(7, 0) == 0.0);
  CHECK(log_binomial(7, 7) == 0.0);
  CHECK(log_binomial(1000, 3) == doctest::Approx(log_binomial(1000, 997)).epsilon(1e-15));
  CHECK_THROWS_AS(log_binomial(3, 4), DomainError);
  LogFactorialTable t(200);
  for (std::size_t n : {0u, 1u, 50u, 100u, 200u})
    CHECK(t.log_binomial(200, n) == doctest::Approx(log_binomial(200, n)).epsilon(1e-13));
}

TEST_CASE("gauss tail integral matches quadrature") {
  CHECK(gauss_tail_integral(0.0) == doctest::Approx(0.5 * kSqrtPi).epsilon(1e-15));
  CHECK(gauss_tail_integral(40.0) == doctest::Approx(kSqrtPi).epsilon(1e-15));
  CHECK(gauss_tail_integral(-40.0) == 0.0);
  for (double a : {-2.5, -0.3, 0.7, 3.0}) {
    double q = adaptive_simpson([](double l) { return std::exp(-l * l); }, -12.0, a);
    CHECK(gauss_tail_integral(a) == doctest::Approx(q).epsilon(1e-11));
  }
}

TEST_CASE("compensated sum keeps the small term") {
  CompensatedSum s;
  s.add(1e100);
  s.add(1.0);
  s.add(-1e100);
  CHECK(s.value() == 1.0);
}

TEST_CASE("trapezoid rules") {
  Grid1D g(-12.0, 12.0, 401);
  std::vector<double> v(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) v[i] = std::exp(-g[i] * g[i]);
  CHECK(integrate_grid(g, v) == doctest::Approx(kSqrtPi).epsilon(1e-14));
  // linear function: exact
  Grid1D h(0.0, 2.0, 3);
  std::vector<double> lin = {1.0, 2.0, 3.0};
  CHECK(integrate_grid(h, lin) == doctest::Approx(4.0));
  Grid2D g2{Grid1D(-10, 10, 201), Grid1D(-10, 10, 201)};
  std::vector<double> w(g2.size());
  for (std::size_t i = 0; i < 201; ++i)
    for (std::size_t j = 0; j < 201; ++j)
      w[i * 201 + j] = std::exp(-g2.p_axis[i] * g2.p_axis[i] - 2 * g2.x_axis[j] * g2.x_axis[j]);
  CHECK(integrate_grid(g2, w) == doctest::Approx(kPi / std::sqrt(2.0)).epsilon(1e-13));
}

TEST_CASE("line fit recovers an exact line") {
  std::vector<double> x = {0, 1, 2, 3}, y = {1, 3, 5, 7};
  auto f = fit_line(x, y);
  CHECK(f.slope == doctest::Approx(2.0));
  CHECK(f.intercept == doctest::Approx(1.0));
  CHECK(f.r_squared == doctest::Approx(1.0));
}

TEST_CASE("fft round trip and delta") {
  std::vector<cplx> a(16, 0.0);
  a[0] = 1.0;
  fft_forward(a);
  for (auto v : a) CHECK(std::abs(v - cplx(1.0)) < 1e-15);
  std::vector<cplx> b(48);
  for (std::size_t i = 0; i < b.size(); ++i) b[i] = cplx(std::sin(0.3 * i), std::cos(1.1 * i));
  auto c = b;
  fft_forward(c);
  fft_backward(c);
  for (std::size_t i = 0; i < b.size(); ++i) CHECK(std::abs(c[i] / 48.0 - b[i]) < 1e-14);
  std::vector<cplx> m(6 * 8);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = cplx(std::cos(0.7 * i), 0.2 * i);
  auto m2 = m;
  fft2_forward(m2, 6, 8);
  fft2_backward(m2, 6, 8);
  for (std::size_t i = 0; i < m.size(); ++i) CHECK(std::abs(m2[i] / 48.0 - m[i]) < 1e-13);
  auto k = fft_wavenumbers(8, 0.5);
  CHECK(k[1] == doctest::Approx(2 * kPi / 4.0));
  CHECK(k[4] == doctest::Approx(-2 * kPi / 4.0 * 4));
}

TEST_CASE("parallel_for visits every index once and rethrows") {
  std::vector<int> hit(1000, 0);
  parallel_for(hit.size(), [&](std::size_t i) { hit[i] += 1; });
  CHECK(std::accumulate(hit.begin(), hit.end(), 0) == 1000);
  CHECK_THROWS_AS(parallel_for(100,
                               [](std::size_t i) {
                                 if (i == 37) throw std::runtime_error("boom");
                               }),
                  std::runtime_error);
}

TEST_CASE("random streams are reproducible and distinct") {
  auto a = gaussian_draws({42, 0}, 100), b = gaussian_draws({42, 0}, 100),
       c = gaussian_draws({42, 1}, 100);
  CHECK(a == b);
  CHECK(a != c);
  double mean = std::accumulate(a.begin(), a.end(), 0.0) / 100.0;
  CHECK(std::abs(mean) < 0.5);
}

TEST_CASE("require_finite") {
  std::vector<double> ok = {1, 2}, bad = {1, std::nan("")};
  CHECK_NOTHROW(require_finite(ok, "ok"));
  CHECK_THROWS_AS(require_finite(bad, "bad"), NumericError);
}

}
