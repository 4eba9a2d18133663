#include "arrival/ensemble.hpp"

#include <algorithm>
#include <memory>
#include <mutex>

namespace arrival::ensemble {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// shared ln k! table, grown on demand
std::shared_ptr<const numerics::LogFactorialTable> log_fact(std::size_t n_max) {
  static std::mutex mu;
  static std::shared_ptr<const numerics::LogFactorialTable> table;
  std::lock_guard<std::mutex> lock(mu);
  if (!table || table->max() < n_max)
    table = std::make_shared<const numerics::LogFactorialTable>(std::max<std::size_t>(2 * n_max, 1024));
  return table;
}

// k log v with 0 log 0 = 0
double xlog(double k, double logv) { return k == 0 ? 0.0 : k * logv; }

double safe_log(double v) { return v > 0 ? std::log(v) : kNegInf; }

double wrap_phase(double a) { return std::remainder(a, 2.0 * kPi); }

// log of sum exp(t_k) over finite entries
double log_sum_exp(const std::vector<double>& t) {
  double m = kNegInf;
  for (double v : t) m = std::max(m, v);
  if (std::isinf(m)) return kNegInf;
  numerics::CompensatedSum s;
  for (double v : t)
    if (!std::isinf(v)) s.add(std::exp(v - m));
  return m + std::log(s.value());
}

}  // namespace

cplx LogComplex::value() const {
  if (is_zero()) return 0.0;
  return std::polar(std::exp(log_mag), phase);
}

LogComplex LogComplex::from(cplx z) {
  LogComplex l;
  double a = std::abs(z);
  if (a == 0) return l;
  l.log_mag = std::log(a);
  l.phase = std::arg(z);
  return l;
}

double OneParticleHistoryData::alpha() const {
  double d2 = std::norm(d);
  if (d2 == 0) return std::numeric_limits<double>::infinity();
  return p * pbar / d2;
}

void OneParticleHistoryData::validate(double tol) const {
  if (!std::isfinite(p) || !std::isfinite(pbar) || !std::isfinite(d.real()) ||
      !std::isfinite(d.imag()))
    throw NumericError("one-particle data: non-finite value");
  if (p < 0 || pbar < 0) throw DomainError("one-particle data: probabilities must be >= 0");
  if (std::abs(sum_rule_residual()) > tol)
    throw DomainError("one-particle data violates p + pbar + 2 Re d = 1 (residual " +
                      std::to_string(sum_rule_residual()) + ")");
}

OneParticleHistoryData OneParticleHistoryData::with_alpha(double p, double alpha) {
  if (!(p > 0 && p < 1)) throw DomainError("with_alpha: p must lie in (0, 1)");
  if (!(alpha > 0) || !std::isfinite(alpha)) throw DomainError("with_alpha: alpha must be positive");
  // p (1 - p - 2x) = alpha x^2
  double x = (-2.0 * p + std::sqrt(4.0 * p * p + 4.0 * alpha * p * (1.0 - p))) / (2.0 * alpha);
  OneParticleHistoryData o{p, 1.0 - p - 2.0 * x, cplx(x, 0.0)};
  if (o.pbar < 0) throw DomainError("with_alpha: no valid data for this (p, alpha)");
  return o;
}

OneParticleHistoryData OneParticleHistoryData::factorized(cplx a) {
  cplx b = 1.0 - a;
  return {std::norm(a), std::norm(b), a * std::conj(b)};
}

OneParticleHistoryData OneParticleHistoryData::random_physical(std::mt19937_64& eng,
                                                               std::size_t dim) {
  std::normal_distribution<double> nd(0.0, 1.0);
  std::vector<cplx> c(dim), r(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    c[i] = cplx(nd(eng), nd(eng));
    r[i] = cplx(nd(eng), nd(eng));
  }
  double s2 = 0;
  for (std::size_t i = 0; i < dim; ++i) s2 += std::norm(c[i] + r[i]);
  double k = 1.0 / std::sqrt(s2);
  OneParticleHistoryData o;
  for (std::size_t i = 0; i < dim; ++i) {
    c[i] *= k;
    r[i] *= k;
    o.p += std::norm(c[i]);
    o.pbar += std::norm(r[i]);
    o.d += c[i] * std::conj(r[i]);
  }
  return o;
}

EnsembleDecoherenceMatrix::EnsembleDecoherenceMatrix(std::size_t N)
    : N_(N), e_((N + 1) * (N + 1)) {}

cplx EnsembleDecoherenceMatrix::total() const {
  numerics::CompensatedSum re, im;
  for (const auto& v : e_) {
    cplx z = v.value();
    re.add(z.real());
    im.add(z.imag());
  }
  return {re.value(), im.value()};
}

double EnsembleDecoherenceMatrix::hermiticity_error() const {
  double e = 0;
  for (std::size_t n = 0; n < dim(); ++n)
    for (std::size_t m = n; m < dim(); ++m) {
      cplx a = value(n, m), b = std::conj(value(m, n));
      double s = std::max(std::abs(a), std::abs(b));
      if (s > 0) e = std::max(e, std::abs(a - b) / s);
    }
  return e;
}

namespace {

void check_indices(std::size_t N, std::size_t n, std::size_t np) {
  if (n > N || np > N) throw DomainError("ensemble index outside [0, N]");
}

// sum over k for n <= n'
double log_sum_lower(std::size_t N, std::size_t n, std::size_t np, double lp, double lpb, double ld,
                     const numerics::LogFactorialTable& lf) {
  std::size_t kmin = np > N - n ? np - (N - n) : 0;
  std::size_t kmax = std::min(n, np);
  std::vector<double> t;
  t.reserve(kmax + 1);
  for (std::size_t k = kmin; k <= kmax; ++k) {
    double e = lf.log_binomial(N - n, np - k) + lf.log_binomial(n, k) +
               xlog(static_cast<double>(N - n - np + k), lpb) +
               xlog(static_cast<double>(n + np - 2 * k), ld) + xlog(static_cast<double>(k), lp);
    t.push_back(e);
  }
  return log_sum_exp(t);
}

// sum over k for n >= n'
double log_sum_upper(std::size_t N, std::size_t n, std::size_t np, double lp, double lpb, double ld,
                     const numerics::LogFactorialTable& lf) {
  std::size_t kmax = std::min(N - n, np);
  std::vector<double> t;
  t.reserve(kmax + 1);
  for (std::size_t k = 0; k <= kmax; ++k) {
    if (np - k > n) continue;
    double e = lf.log_binomial(N - n, k) + lf.log_binomial(n, np - k) +
               xlog(static_cast<double>(N - n - k), lpb) +
               xlog(static_cast<double>(2 * k + n - np), ld) + xlog(static_cast<double>(np - k), lp);
    t.push_back(e);
  }
  return log_sum_exp(t);
}

}  // namespace

LogComplex exact_dnn(std::size_t N, std::size_t n, std::size_t np,
                     const OneParticleHistoryData& one) {
  check_indices(N, n, np);
  one.validate();
  auto lfp = log_fact(N);
  const auto& lf = *lfp;
  double lp = safe_log(one.p), lpb = safe_log(one.pbar), ld = safe_log(std::abs(one.d));
  double s;
  if (n < np) {
    s = log_sum_lower(N, n, np, lp, lpb, ld, lf);
  } else if (n > np) {
    s = log_sum_upper(N, n, np, lp, lpb, ld, lf);
  } else {
    double a = log_sum_lower(N, n, np, lp, lpb, ld, lf);
    s = log_sum_upper(N, n, np, lp, lpb, ld, lf);
    bool both_zero = std::isinf(a) && std::isinf(s);
    if (!both_zero && !(std::abs(a - s) <= 1e-10 * std::max(1.0, std::abs(s))))
      throw NumericError("exact_dnn: the two finite-sum forms disagree on the diagonal");
  }
  LogComplex out;
  if (std::isinf(s)) return out;
  out.log_mag = lf.log_binomial(N, n) + s;
  out.phase = std::abs(one.d) > 0
                  ? wrap_phase((static_cast<double>(n) - static_cast<double>(np)) * std::arg(one.d))
                  : 0.0;
  return out;
}

EnsembleDecoherenceMatrix exact_matrix(std::size_t N, const OneParticleHistoryData& one) {
  one.validate();
  EnsembleDecoherenceMatrix m(N);
  log_fact(N);
  numerics::parallel_for(N + 1, [&](std::size_t n) {
    for (std::size_t np = 0; np <= N; ++np) m.at(n, np) = exact_dnn(N, n, np, one);
  });
  return m;
}

double contour_radius(std::size_t N, std::size_t n, std::size_t np,
                      const OneParticleHistoryData& one) {
  // minimize r^-n' (pbar + |d| r)^(N-n) (|d| + p r)^n over log r; convex, and
  // equal to the real saddle when d is real and positive. Roundoff of the
  // trapezoid sum scales with this bound, so it is the right radius at the
  // corners of the (n, n') square too.
  double ad = std::abs(one.d);
  auto f = [&](double u) {
    double r = std::exp(u);
    double v = -static_cast<double>(np) * u;
    if (N > n) v += static_cast<double>(N - n) * std::log(std::max(one.pbar + ad * r, 1e-300));
    if (n > 0) v += static_cast<double>(n) * std::log(std::max(ad + one.p * r, 1e-300));
    return v;
  };
  double lo = -40.0, hi = 40.0;
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = hi - g * (hi - lo), b = lo + g * (hi - lo);
  double fa = f(a), fb = f(b);
  for (int it = 0; it < 200 && hi - lo > 1e-10; ++it) {
    if (fa < fb) {
      hi = b;
      b = a;
      fb = fa;
      a = hi - g * (hi - lo);
      fa = f(a);
    } else {
      lo = a;
      a = b;
      fa = fb;
      b = lo + g * (hi - lo);
      fb = f(b);
    }
  }
  return std::exp(0.5 * (lo + hi));
}

LogComplex contour_dnn(std::size_t N, std::size_t n, std::size_t np,
                       const OneParticleHistoryData& one, std::size_t m_points, double radius) {
  check_indices(N, n, np);
  one.validate();
  if (m_points < N + np + 2)
    throw ResolutionError("contour_dnn: m_points must be at least N + n' + 2");
  if (radius <= 0) radius = contour_radius(N, n, np, one);
  if (!std::isfinite(radius) || radius <= 0) throw DomainError("contour_dnn: bad radius");
  double M = static_cast<double>(m_points);
  cplx dc = std::conj(one.d);
  std::vector<cplx> L(m_points);
  double lr = std::log(radius);
  for (std::size_t j = 0; j < m_points; ++j) {
    double th = 2.0 * kPi * static_cast<double>(j) / M;
    cplx z = std::polar(radius, th);
    cplx a = one.pbar + dc * z, b = one.d + one.p * z;
    double re = 0, im = 0;
    bool zero = false;
    if (N - n > 0) {
      if (a == cplx(0.0)) zero = true;
      else {
        cplx la = std::log(a);
        re += static_cast<double>(N - n) * la.real();
        im += static_cast<double>(N - n) * la.imag();
      }
    }
    if (n > 0) {
      if (b == cplx(0.0)) zero = true;
      else {
        cplx lb = std::log(b);
        re += static_cast<double>(n) * lb.real();
        im += static_cast<double>(n) * lb.imag();
      }
    }
    re -= static_cast<double>(np) * lr;
    im -= static_cast<double>(np) * th;
    L[j] = zero ? cplx(kNegInf, 0.0) : cplx(re, im);
  }
  double mx = kNegInf;
  for (auto& l : L) mx = std::max(mx, l.real());
  LogComplex out;
  if (std::isinf(mx)) return out;
  numerics::CompensatedSum sr, si;
  for (auto& l : L) {
    if (std::isinf(l.real())) continue;
    cplx v = std::polar(std::exp(l.real() - mx), l.imag());
    sr.add(v.real());
    si.add(v.imag());
  }
  cplx S(sr.value(), si.value());
  if (std::abs(S) == 0) return out;
  out.log_mag = log_fact(N)->log_binomial(N, n) + mx + std::log(std::abs(S) / M);
  out.phase = std::arg(S);
  return out;
}

EnsembleDecoherenceMatrix brute_force_dnn(std::size_t N, const OneParticleHistoryData& one) {
  if (N > 12) throw DomainError("brute_force_dnn: N must be <= 12");
  one.validate();
  std::size_t D = N + 1;
  std::vector<cplx> c(D * D, 0.0), nx(D * D);
  c[0] = 1.0;
  cplx dc = std::conj(one.d);
  for (std::size_t f = 0; f < N; ++f) {
    std::fill(nx.begin(), nx.end(), cplx(0.0));
    for (std::size_t a = 0; a <= f; ++a)
      for (std::size_t b = 0; b <= f; ++b) {
        cplx v = c[a * D + b];
        if (v == cplx(0.0)) continue;
        nx[a * D + b] += one.pbar * v;
        nx[(a + 1) * D + b] += one.d * v;
        nx[a * D + b + 1] += dc * v;
        nx[(a + 1) * D + b + 1] += one.p * v;
      }
    c.swap(nx);
  }
  EnsembleDecoherenceMatrix m(N);
  for (std::size_t a = 0; a < D; ++a)
    for (std::size_t b = 0; b < D; ++b) m.at(a, b) = LogComplex::from(c[a * D + b]);
  return m;
}

std::vector<std::pair<std::size_t, std::size_t>> BinSpec::ranges(std::size_t N) const {
  if (width < 1) throw DomainError("BinSpec: width must be >= 1");
  std::vector<std::pair<std::size_t, std::size_t>> r;
  std::size_t start = 0;
  if (offset > 0) {
    r.emplace_back(0, std::min(offset, N + 1) - 1);
    start = offset;
  }
  for (; start <= N; start += width) r.emplace_back(start, std::min(start + width - 1, N));
  return r;
}

EnsembleDecoherenceMatrix binned_matrix(const EnsembleDecoherenceMatrix& m, const BinSpec& bins) {
  auto r = bins.ranges(m.N());
  EnsembleDecoherenceMatrix out(r.size() - 1);
  for (std::size_t I = 0; I < r.size(); ++I)
    for (std::size_t J = 0; J < r.size(); ++J) {
      double mx = kNegInf;
      for (std::size_t a = r[I].first; a <= r[I].second; ++a)
        for (std::size_t b = r[J].first; b <= r[J].second; ++b)
          mx = std::max(mx, m.at(a, b).log_mag);
      if (std::isinf(mx)) continue;
      numerics::CompensatedSum sr, si;
      for (std::size_t a = r[I].first; a <= r[I].second; ++a)
        for (std::size_t b = r[J].first; b <= r[J].second; ++b) {
          const auto& e = m.at(a, b);
          if (e.is_zero()) continue;
          cplx v = std::polar(std::exp(e.log_mag - mx), e.phase);
          sr.add(v.real());
          si.add(v.imag());
        }
      cplx S(sr.value(), si.value());
      LogComplex l;
      if (std::abs(S) > 0) {
        l.log_mag = mx + std::log(std::abs(S));
        l.phase = std::arg(S);
      }
      out.at(I, J) = l;
    }
  return out;
}

double log_epsilon(const EnsembleDecoherenceMatrix& m, std::size_t n, std::size_t np) {
  check_indices(m.N(), n, np);
  if (m.at(n, n).is_zero() || m.at(np, np).is_zero())
    throw DomainError("epsilon undefined: zero diagonal entry");
  return 2.0 * m.at(n, np).log_mag - m.at(n, n).log_mag - m.at(np, np).log_mag;
}

double epsilon_measure(const EnsembleDecoherenceMatrix& m, std::size_t n, std::size_t np) {
  return std::exp(log_epsilon(m, n, np));
}

double log_epsilon_exact(std::size_t N, std::size_t n, std::size_t np,
                         const OneParticleHistoryData& one) {
  auto a = exact_dnn(N, n, n, one), b = exact_dnn(N, np, np, one);
  if (a.is_zero() || b.is_zero()) throw DomainError("epsilon undefined: zero diagonal entry");
  return 2.0 * exact_dnn(N, n, np, one).log_mag - a.log_mag - b.log_mag;
}

double log_epsilon_large_alpha(std::size_t N, std::size_t n, std::size_t np, double alpha) {
  check_indices(N, n, np);
  if (np < n) std::swap(n, np);
  auto lfp = log_fact(N);
  const auto& lf = *lfp;
  return -static_cast<double>(np - n) * std::log(alpha) + lf.log_factorial(np) +
         lf.log_factorial(N - n) - lf.log_factorial(n) - lf.log_factorial(N - np) -
         2.0 * lf.log_factorial(np - n);
}

std::vector<double> log_candidate_probabilities(std::size_t N, const OneParticleHistoryData& one) {
  one.validate();
  log_fact(N);
  std::vector<double> out(N + 1);
  numerics::parallel_for(N + 1, [&](std::size_t n) { out[n] = exact_dnn(N, n, n, one).log_mag; });
  return out;
}

std::vector<double> candidate_probabilities(std::size_t N, const OneParticleHistoryData& one) {
  auto l = log_candidate_probabilities(N, one);
  for (auto& v : l) v = std::exp(v);
  return l;
}

namespace {

void check_interior(std::size_t N, std::size_t n, std::size_t np, double alpha) {
  if (n == 0 || n >= N || np == 0 || np >= N)
    throw DomainError("saddle point needs interior indices 0 < n, n' < N");
  if (!(alpha > 0) || !std::isfinite(alpha)) throw DomainError("saddle point needs finite alpha > 0");
}

}  // namespace

SaddleState saddle_rho(std::size_t N, std::size_t n, std::size_t np, double alpha) {
  check_interior(N, n, np, alpha);
  double Nd = static_cast<double>(N), nd = static_cast<double>(n), npd = static_cast<double>(np);
  double a = alpha * (Nd - npd);
  double b = Nd - nd - npd + alpha * (nd - npd);
  double disc = std::sqrt(b * b + 4.0 * alpha * npd * (Nd - npd));
  SaddleState s;
  s.rho = b >= 0 ? 2.0 * npd / (b + disc) : (disc - b) / (2.0 * a);
  double nu = nd / Nd, r = s.rho;
  s.log_f = (1.0 - nu) * std::log1p(r) + nu * std::log1p(alpha * r);
  s.residual = Nd * ((1.0 - nu) * r / (1.0 + r) + nu * alpha * r / (1.0 + alpha * r)) - npd;
  s.kappa2 = (1.0 - nu) * r / ((1.0 + r) * (1.0 + r)) +
             nu * alpha * r / ((1.0 + alpha * r) * (1.0 + alpha * r));
  return s;
}

double saddle_rho_closed_form(std::size_t N, std::size_t n, std::size_t np, double alpha) {
  check_interior(N, n, np, alpha);
  double Nd = static_cast<double>(N), nd = static_cast<double>(n), npd = static_cast<double>(np);
  double b = Nd - nd - npd + alpha * (nd - npd);
  return (-b + std::sqrt(b * b + 4.0 * alpha * npd * (Nd - npd))) / (2.0 * alpha * (Nd - npd));
}

double log_j_exact(std::size_t N, std::size_t n, std::size_t np, double alpha) {
  check_indices(N, n, np);
  auto lfp = log_fact(N);
  const auto& lf = *lfp;
  double la = std::log(alpha);
  std::size_t kmin = np > N - n ? np - (N - n) : 0;
  std::vector<double> t;
  for (std::size_t k = kmin; k <= std::min(n, np); ++k)
    t.push_back(lf.log_binomial(N - n, np - k) + lf.log_binomial(n, k) + static_cast<double>(k) * la);
  return log_sum_exp(t);
}

double log_j_asymptotic(std::size_t N, std::size_t n, std::size_t np, double alpha) {
  auto s = saddle_rho(N, n, np, alpha);
  double Nd = static_cast<double>(N);
  return Nd * s.log_f - static_cast<double>(np) * std::log(s.rho) -
         0.5 * std::log(2.0 * kPi * Nd * s.kappa2);
}

LogComplex asymptotic_dnn(std::size_t N, std::size_t n, std::size_t np,
                          const OneParticleHistoryData& one) {
  one.validate();
  if (N < 30) throw DomainError("asymptotic_dnn: N must be >= 30");
  double al = one.alpha();
  check_interior(N, n, np, al);
  if (!(one.pbar > 0)) throw DomainError("asymptotic_dnn: pbar must be positive");
  LogComplex out;
  out.log_mag = log_fact(N)->log_binomial(N, n) +
                static_cast<double>(N - n) * std::log(one.pbar) -
                static_cast<double>(np) * std::log(one.pbar) +
                static_cast<double>(n + np) * std::log(std::abs(one.d)) +
                log_j_asymptotic(N, n, np, al);
  out.phase = wrap_phase((static_cast<double>(n) - static_cast<double>(np)) * std::arg(one.d));
  return out;
}

NearOneEstimate near_one_regime(std::size_t N, std::size_t n, std::size_t np,
                                const OneParticleHistoryData& one) {
  check_indices(N, n, np);
  one.validate();
  NearOneEstimate e;
  e.delta = one.alpha() - 1.0;
  e.regime_warning = !(e.delta > 0 && e.delta < 0.5);
  double Nd = static_cast<double>(N);
  double dn = static_cast<double>(n) - static_cast<double>(np);
  e.log_epsilon_estimate = -dn * dn * e.delta / Nd;
  e.log_epsilon_exact = log_epsilon_exact(N, n, np, one);
  double sp = std::sqrt(one.p), sq = std::sqrt(one.pbar);
  e.peak_estimate = Nd * sp / (sp + sq);
  auto lfp = log_fact(N);
  const auto& lf = *lfp;
  double lp = safe_log(one.p), lpb = safe_log(one.pbar);
  e.log_p_estimate.resize(N + 1);
  for (std::size_t k = 0; k <= N; ++k) {
    double kd = static_cast<double>(k);
    e.log_p_estimate[k] = 2.0 * lf.log_binomial(N, k) + xlog(Nd - kd, lpb) + xlog(kd, lp) +
                          e.delta * kd * kd / Nd;
  }
  e.log_p_exact = log_candidate_probabilities(N, one);
  return e;
}

PeakStats peak_stats(const std::vector<double>& log_p) {
  if (log_p.empty()) throw DomainError("peak_stats: empty input");
  PeakStats s;
  s.argmax = static_cast<std::size_t>(std::max_element(log_p.begin(), log_p.end()) - log_p.begin());
  double mx = log_p[s.argmax];
  double w0 = 0, w1 = 0, w2 = 0;
  for (std::size_t k = 0; k < log_p.size(); ++k) {
    double w = std::isinf(log_p[k]) ? 0.0 : std::exp(log_p[k] - mx);
    double kd = static_cast<double>(k);
    w0 += w;
    w1 += w * kd;
  }
  s.mean = w1 / w0;
  for (std::size_t k = 0; k < log_p.size(); ++k) {
    double w = std::isinf(log_p[k]) ? 0.0 : std::exp(log_p[k] - mx);
    double dk = static_cast<double>(k) - s.mean;
    w2 += w * dk * dk;
  }
  s.variance = w2 / w0;
  s.total = std::exp(mx) * w0;
  return s;
}

}  // namespace arrival::ensemble
