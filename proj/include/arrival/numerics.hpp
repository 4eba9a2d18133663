#pragma once

// Shared numeric kernels: grids, quadrature, the Gaussian tail integral,
// log-space combinatorics, a seeded random stream and a thin FFT wrapper.

#include <complex>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace arrival {

using cplx = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kSqrtPi = 1.77245385090551602730;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
// Argument outside the mathematical domain of an operation.
struct DomainError : Error {
  using Error::Error;
};
// Non-finite input or a result that could not be represented.
struct NumericError : Error {
  using Error::Error;
};
// Discretization too coarse for the requested operation.
struct ResolutionError : Error {
  using Error::Error;
};
// Input state has mass where the operation requires none.
struct SupportError : Error {
  using Error::Error;
};
// Time step outside the documented bound of a stepping scheme.
struct StepSizeError : Error {
  using Error::Error;
};
// A physical-regime assumption failed and the caller asked for strictness.
struct RegimeError : Error {
  using Error::Error;
};

namespace numerics {

// Uniform 1-D grid with both endpoints sampled.
class Grid1D {
 public:
  Grid1D() = default;
  Grid1D(double x_min, double x_max, std::size_t n_points);

  double x_min() const { return x_min_; }
  double x_max() const { return x_max_; }
  std::size_t size() const { return n_; }
  double spacing() const { return dx_; }
  double operator[](std::size_t i) const { return x_min_ + static_cast<double>(i) * dx_; }
  std::vector<double> points() const;

  // Index of the node sitting at x = 0, if there is one (within 1e-9 spacing).
  std::ptrdiff_t zero_index() const;

 private:
  double x_min_ = 0.0;
  double x_max_ = 1.0;
  std::size_t n_ = 2;
  double dx_ = 1.0;
};

// Periodic grid on [-L, L) with 0 on a node: n points, spacing 2L/n.
Grid1D symmetric_periodic_grid(double half_width, std::size_t n_points);

// Index map j -> index of -x_j on a periodic grid that has a node at 0.
std::vector<std::size_t> reflection_indices(const Grid1D& grid);

struct Grid2D {
  Grid1D p_axis;
  Grid1D x_axis;
  std::size_t size() const { return p_axis.size() * x_axis.size(); }
};

// Seed plus stream index; equal pairs produce equal draw sequences.
struct RandomStream {
  std::uint64_t seed = 0;
  std::uint64_t stream_index = 0;

  std::mt19937_64 engine() const;
};

double erf(double x);
double erfc(double x);

// Integral of exp(-l^2) over (-inf, a].
double gauss_tail_integral(double a);

// ln(N choose n). Throws DomainError for n > N.
double log_binomial(long long N, long long n);

// Cached ln(k!) for k in [0, n_max]; used on hot paths.
class LogFactorialTable {
 public:
  explicit LogFactorialTable(std::size_t n_max);
  double log_factorial(std::size_t k) const { return table_.at(k); }
  double log_binomial(std::size_t N, std::size_t n) const;
  std::size_t max() const { return table_.size() - 1; }

 private:
  std::vector<double> table_;
};

// Composite trapezoidal rule on a Grid1D. O(spacing^2).
double integrate_grid(const Grid1D& grid, std::span<const double> values);
cplx integrate_grid(const Grid1D& grid, std::span<const cplx> values);
// Row-major samples, x fastest: values[ip * nx + ix].
double integrate_grid(const Grid2D& grid, std::span<const double> values);

// Rectangle (periodic trapezoid) rule: sum * spacing.
double integrate_periodic(const Grid1D& grid, std::span<const double> values);

std::vector<double> gaussian_draws(const RandomStream& stream, std::size_t count);

// Adaptive Simpson quadrature on [a, b].
double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double tol = 1e-13, int max_depth = 50);

// Neumaier-compensated accumulator.
class CompensatedSum {
 public:
  void add(double v);
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

// Least-squares line fit y = intercept + slope x, with R^2.
struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};
LineFit fit_line(std::span<const double> x, std::span<const double> y);

void require_finite(std::span<const double> values, const char* what);
void require_finite(std::span<const cplx> values, const char* what);

// Unnormalized in-place complex DFTs (FFTW backend, estimate plans).
void fft_forward(std::span<cplx> data);
void fft_backward(std::span<cplx> data);
// 2-D transforms of a row-major rows x cols array.
void fft2_forward(std::span<cplx> data, std::size_t rows, std::size_t cols);
void fft2_backward(std::span<cplx> data, std::size_t rows, std::size_t cols);

// Angular wavenumbers in FFT order for a periodic grid of n points, spacing dx.
std::vector<double> fft_wavenumbers(std::size_t n, double dx);

// Runs body(i) for i in [0, n) on worker threads. Each index must write only
// its own output slot; any reduction happens afterwards in index order.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace numerics
}  // namespace arrival
