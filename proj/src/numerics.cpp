#include "arrival/numerics.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numeric>
#include <thread>
#include <tuple>

namespace arrival::numerics {

Grid1D::Grid1D(double x_min, double x_max, std::size_t n_points)
    : x_min_(x_min), x_max_(x_max), n_(n_points) {
  if (!std::isfinite(x_min) || !std::isfinite(x_max))
    throw NumericError("Grid1D: non-finite bounds");
  if (n_points < 2) throw DomainError("Grid1D: n_points must be >= 2");
  if (!(x_max > x_min)) throw DomainError("Grid1D: x_max must exceed x_min");
  dx_ = (x_max - x_min) / static_cast<double>(n_points - 1);
}

std::vector<double> Grid1D::points() const {
  std::vector<double> out(n_);
  for (std::size_t i = 0; i < n_; ++i) out[i] = (*this)[i];
  return out;
}

std::ptrdiff_t Grid1D::zero_index() const {
  double j = -x_min_ / dx_;
  double jr = std::round(j);
  if (std::abs(j - jr) > 1e-9 || jr < 0 || jr >= static_cast<double>(n_)) return -1;
  return static_cast<std::ptrdiff_t>(jr);
}

Grid1D symmetric_periodic_grid(double half_width, std::size_t n_points) {
  if (n_points < 4 || n_points % 2 != 0)
    throw DomainError("periodic grid needs an even number of points >= 4");
  if (!(half_width > 0)) throw DomainError("periodic grid half width must be positive");
  double dx = 2.0 * half_width / static_cast<double>(n_points);
  // last sample is L - dx; the periodic image of -L
  return Grid1D(-half_width, half_width - dx, n_points);
}

std::vector<std::size_t> reflection_indices(const Grid1D& grid) {
  auto j0 = grid.zero_index();
  if (j0 < 0) throw DomainError("reflection_indices: grid has no node at x = 0");
  std::size_t n = grid.size();
  std::vector<std::size_t> r(n);
  for (std::size_t j = 0; j < n; ++j)
    r[j] = (2 * static_cast<std::size_t>(j0) + n - j) % n;
  return r;
}

std::mt19937_64 RandomStream::engine() const {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream_index),
                    static_cast<std::uint32_t>(stream_index >> 32), 0x5eedu};
  return std::mt19937_64(seq);
}

double erf(double x) { return std::erf(x); }
double erfc(double x) { return std::erfc(x); }

double gauss_tail_integral(double a) {
  if (!std::isfinite(a)) throw NumericError("gauss_tail_integral: non-finite argument");
  // erfc keeps full relative accuracy in the far left tail
  return 0.5 * kSqrtPi * std::erfc(-a);
}

double log_binomial(long long N, long long n) {
  if (N < 0 || n < 0 || n > N) throw DomainError("log_binomial: need 0 <= n <= N");
  long long k = std::min(n, N - n);
  if (k == 0) return 0.0;
  if (k <= 30) {
    // ln prod_{i=1..k} (N-k+i)/i, exact enough and symmetric by construction
    double s = 0.0;
    for (long long i = 1; i <= k; ++i)
      s += std::log(static_cast<double>(N - k + i)) - std::log(static_cast<double>(i));
    return s;
  }
  return std::lgamma(static_cast<double>(N) + 1.0) - std::lgamma(static_cast<double>(k) + 1.0) -
         std::lgamma(static_cast<double>(N - k) + 1.0);
}

LogFactorialTable::LogFactorialTable(std::size_t n_max) : table_(n_max + 1, 0.0) {
  CompensatedSum s;
  for (std::size_t k = 2; k <= n_max; ++k) {
    s.add(std::log(static_cast<double>(k)));
    table_[k] = s.value();
  }
}

double LogFactorialTable::log_binomial(std::size_t N, std::size_t n) const {
  if (n > N) throw DomainError("log_binomial: n > N");
  std::size_t k = std::min(n, N - n);
  return table_.at(N) - table_[k] - table_[N - k];
}

void CompensatedSum::add(double v) {
  double t = sum_ + v;
  if (std::abs(sum_) >= std::abs(v))
    comp_ += (sum_ - t) + v;
  else
    comp_ += (v - t) + sum_;
  sum_ = t;
}

void require_finite(std::span<const double> values, const char* what) {
  for (double v : values)
    if (!std::isfinite(v)) throw NumericError(std::string(what) + ": non-finite sample");
}

void require_finite(std::span<const cplx> values, const char* what) {
  for (const cplx& v : values)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      throw NumericError(std::string(what) + ": non-finite sample");
}

double integrate_grid(const Grid1D& grid, std::span<const double> values) {
  if (values.size() != grid.size()) throw DomainError("integrate_grid: size mismatch");
  require_finite(values, "integrate_grid");
  CompensatedSum s;
  s.add(0.5 * values.front());
  for (std::size_t i = 1; i + 1 < values.size(); ++i) s.add(values[i]);
  s.add(0.5 * values.back());
  return s.value() * grid.spacing();
}

cplx integrate_grid(const Grid1D& grid, std::span<const cplx> values) {
  if (values.size() != grid.size()) throw DomainError("integrate_grid: size mismatch");
  require_finite(values, "integrate_grid");
  CompensatedSum re, im;
  auto add = [&](cplx v, double w) {
    re.add(w * v.real());
    im.add(w * v.imag());
  };
  add(values.front(), 0.5);
  for (std::size_t i = 1; i + 1 < values.size(); ++i) add(values[i], 1.0);
  add(values.back(), 0.5);
  return cplx(re.value(), im.value()) * grid.spacing();
}

double integrate_grid(const Grid2D& grid, std::span<const double> values) {
  std::size_t np = grid.p_axis.size(), nx = grid.x_axis.size();
  if (values.size() != np * nx) throw DomainError("integrate_grid: size mismatch");
  std::vector<double> rows(np);
  for (std::size_t i = 0; i < np; ++i)
    rows[i] = integrate_grid(grid.x_axis, values.subspan(i * nx, nx));
  return integrate_grid(grid.p_axis, rows);
}

double integrate_periodic(const Grid1D& grid, std::span<const double> values) {
  if (values.size() != grid.size()) throw DomainError("integrate_periodic: size mismatch");
  require_finite(values, "integrate_periodic");
  CompensatedSum s;
  for (double v : values) s.add(v);
  return s.value() * grid.spacing();
}

std::vector<double> gaussian_draws(const RandomStream& stream, std::size_t count) {
  if (count < 1) throw DomainError("gaussian_draws: count must be >= 1");
  auto eng = stream.engine();
  std::normal_distribution<double> nd(0.0, 1.0);
  std::vector<double> out(count);
  for (auto& v : out) v = nd(eng);
  return out;
}

namespace {

double simpson_step(const std::function<double(double)>& f, double a, double b, double fa,
                    double fm, double fb, double whole, double tol, int depth) {
  double m = 0.5 * (a + b);
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = f(lm), frm = f(rm);
  double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  double diff = left + right - whole;
  if (depth <= 0 || std::abs(diff) <= 15.0 * tol) return left + right + diff / 15.0;
  return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol,
                        int max_depth) {
  double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson_step(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw DomainError("fit_line: need >= 2 paired points");
  double n = static_cast<double>(x.size());
  double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0) throw DomainError("fit_line: degenerate abscissae");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r_squared = syy > 0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return f;
}

// plans are cached per shape and run through the new-array interface, which is
// thread safe; only planning itself needs the lock
namespace {

std::mutex g_plan_mutex;
std::map<std::tuple<std::size_t, std::size_t, int>, fftw_plan> g_plans;

fftw_plan get_plan(std::size_t rows, std::size_t cols, int sign) {
  std::lock_guard<std::mutex> lock(g_plan_mutex);
  auto key = std::make_tuple(rows, cols, sign);
  auto it = g_plans.find(key);
  if (it != g_plans.end()) return it->second;
  std::size_t total = rows * cols;
  auto* buf = fftw_alloc_complex(total);
  fftw_plan plan;
  unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  if (rows == 1)
    plan = fftw_plan_dft_1d(static_cast<int>(cols), buf, buf, sign, flags);
  else
    plan = fftw_plan_dft_2d(static_cast<int>(rows), static_cast<int>(cols), buf, buf, sign, flags);
  fftw_free(buf);
  if (!plan) throw NumericError("FFT planning failed");
  g_plans.emplace(key, plan);
  return plan;
}

void run_plan(std::span<cplx> data, std::size_t rows, std::size_t cols, int sign) {
  if (data.size() != rows * cols) throw DomainError("fft: size mismatch");
  if (data.empty()) return;
  auto plan = get_plan(rows, cols, sign);
  auto* p = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(plan, p, p);
}

}  // namespace

void fft_forward(std::span<cplx> data) { run_plan(data, 1, data.size(), FFTW_FORWARD); }
void fft_backward(std::span<cplx> data) { run_plan(data, 1, data.size(), FFTW_BACKWARD); }
void fft2_forward(std::span<cplx> data, std::size_t rows, std::size_t cols) {
  run_plan(data, rows, cols, FFTW_FORWARD);
}
void fft2_backward(std::span<cplx> data, std::size_t rows, std::size_t cols) {
  run_plan(data, rows, cols, FFTW_BACKWARD);
}

std::vector<double> fft_wavenumbers(std::size_t n, double dx) {
  std::vector<double> k(n);
  double base = 2.0 * kPi / (static_cast<double>(n) * dx);
  for (std::size_t i = 0; i < n; ++i) {
    long long j = static_cast<long long>(i);
    if (i >= (n + 1) / 2) j -= static_cast<long long>(n);
    k[i] = base * static_cast<double>(j);
  }
  return k;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  std::size_t workers = std::min<std::size_t>(hw, n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) body(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace arrival::numerics
