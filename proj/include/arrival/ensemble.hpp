#pragma once

// N independent copies of a two-history system (cross / never cross) and the
// decoherence functional D(n, n') between "n of N crossed" and "n' of N
// crossed": finite sums, contour quadrature, brute-force polynomial
// expansion, binning, the epsilon measure and large-N saddle asymptotics.
//
// Everything is carried as (log |z|, arg z); N of several thousand is routine.

#include <cstddef>
#include <cmath>
#include <limits>
#include <vector>

#include "arrival/numerics.hpp"

namespace arrival::ensemble {

struct LogComplex {
  double log_mag = -std::numeric_limits<double>::infinity();  // exact zero
  double phase = 0.0;

  cplx value() const;
  bool is_zero() const { return std::isinf(log_mag) && log_mag < 0; }
  static LogComplex from(cplx z);
};

struct OneParticleHistoryData {
  double p = 0.0;     // crossing
  double pbar = 0.0;  // not crossing
  cplx d{0.0, 0.0};   // D(cross, not cross)

  // p pbar / |d|^2, +inf when d = 0
  double alpha() const;
  double sum_rule_residual() const { return p + pbar + 2.0 * d.real() - 1.0; }
  void validate(double tol = 1e-8) const;

  // real positive d chosen so that p pbar / d^2 = alpha
  static OneParticleHistoryData with_alpha(double p, double alpha);
  // amplitudes a (cross) and 1 - a (not cross): alpha = 1 exactly
  static OneParticleHistoryData factorized(cplx a);
  // from two random amplitude vectors whose sum is a unit vector
  static OneParticleHistoryData random_physical(std::mt19937_64& eng, std::size_t dim = 4);
};

class EnsembleDecoherenceMatrix {
 public:
  EnsembleDecoherenceMatrix() = default;
  explicit EnsembleDecoherenceMatrix(std::size_t N);

  std::size_t N() const { return N_; }
  std::size_t dim() const { return N_ + 1; }
  LogComplex& at(std::size_t n, std::size_t np) { return e_[n * dim() + np]; }
  const LogComplex& at(std::size_t n, std::size_t np) const { return e_[n * dim() + np]; }
  cplx value(std::size_t n, std::size_t np) const { return at(n, np).value(); }
  cplx total() const;
  double hermiticity_error() const;  // relative

 private:
  std::size_t N_ = 0;
  std::vector<LogComplex> e_;
};

// Finite sums; both index orders are evaluated when n == n' and must agree.
LogComplex exact_dnn(std::size_t N, std::size_t n, std::size_t nprime,
                     const OneParticleHistoryData& one);
EnsembleDecoherenceMatrix exact_matrix(std::size_t N, const OneParticleHistoryData& one);

// Trapezoid rule on |z| = radius of the generating-function contour integral.
// radius <= 0 selects contour_radius.
// Radius minimizing the bound on the integrand; the saddle radius when d > 0.
double contour_radius(std::size_t N, std::size_t n, std::size_t nprime,
                      const OneParticleHistoryData& one);
LogComplex contour_dnn(std::size_t N, std::size_t n, std::size_t nprime,
                       const OneParticleHistoryData& one, std::size_t m_points,
                       double radius = 0.0);

// Direct expansion of prod_i (pbar + z d + zb d* + z zb p); N <= 12.
EnsembleDecoherenceMatrix brute_force_dnn(std::size_t N, const OneParticleHistoryData& one);

struct BinSpec {
  std::size_t width = 1;  // 2 * delta_n
  std::size_t offset = 0; // first bin is [0, offset) when offset > 0
  std::vector<std::pair<std::size_t, std::size_t>> ranges(std::size_t N) const;
};

EnsembleDecoherenceMatrix binned_matrix(const EnsembleDecoherenceMatrix& m, const BinSpec& bins);

// |D(n,n')|^2 / (D(n,n) D(n',n')) in log space; throws if a diagonal entry is zero.
double log_epsilon(const EnsembleDecoherenceMatrix& m, std::size_t n, std::size_t nprime);
double epsilon_measure(const EnsembleDecoherenceMatrix& m, std::size_t n, std::size_t nprime);
// Same, straight from the finite sums without a full matrix.
double log_epsilon_exact(std::size_t N, std::size_t n, std::size_t nprime,
                         const OneParticleHistoryData& one);

// Large-alpha leading term of log epsilon (n' > n).
double log_epsilon_large_alpha(std::size_t N, std::size_t n, std::size_t nprime, double alpha);

// p(n) = D(n, n)
std::vector<double> candidate_probabilities(std::size_t N, const OneParticleHistoryData& one);
std::vector<double> log_candidate_probabilities(std::size_t N, const OneParticleHistoryData& one);

struct SaddleState {
  double rho = 0.0;
  double kappa2 = 0.0;
  double log_f = 0.0;        // ln f(rho)
  double residual = 0.0;     // N rho f'/f - n'
};

SaddleState saddle_rho(std::size_t N, std::size_t n, std::size_t nprime, double alpha);
// the displayed root formula, kept for comparison with the stable solver
double saddle_rho_closed_form(std::size_t N, std::size_t n, std::size_t nprime, double alpha);
double log_j_exact(std::size_t N, std::size_t n, std::size_t nprime, double alpha);
double log_j_asymptotic(std::size_t N, std::size_t n, std::size_t nprime, double alpha);
LogComplex asymptotic_dnn(std::size_t N, std::size_t n, std::size_t nprime,
                          const OneParticleHistoryData& one);

struct NearOneEstimate {
  double delta = 0.0;
  bool regime_warning = false;
  double log_epsilon_estimate = 0.0;  // -(n - n')^2 delta / N
  double log_epsilon_exact = 0.0;
  double peak_estimate = 0.0;         // N sqrt(p) / (sqrt(p) + sqrt(pbar))
  std::vector<double> log_p_estimate; // unnormalized leading-order form
  std::vector<double> log_p_exact;
};

NearOneEstimate near_one_regime(std::size_t N, std::size_t n, std::size_t nprime,
                                const OneParticleHistoryData& one);

// Distribution summaries of a log-probability vector.
struct PeakStats {
  std::size_t argmax = 0;
  double mean = 0.0;
  double variance = 0.0;
  double total = 0.0;
};
PeakStats peak_stats(const std::vector<double>& log_p);

}  // namespace arrival::ensemble
