#pragma once

// Free-particle crossing / non-crossing histories through the surface x = 0.
//
// Amplitudes are evolved spectrally on a periodic grid that has a node at the
// origin; the image construction then reduces to an index reflection. The
// analytic kernels are exposed too, and a direct O(n^2) quadrature of the
// restricted kernel serves as an independent check.

#include <vector>

#include "arrival/numerics.hpp"

namespace arrival::unitary {

using numerics::Grid1D;

struct ParticleParams {
  double m = 1.0;
  double hbar = 1.0;
  double t = 0.0;
  void validate() const;
};

// Samples on a periodic grid (see numerics::symmetric_periodic_grid). The
// norm is sum |psi|^2 dx, which is what the spectral evolution conserves.
class Wavefunction {
 public:
  Wavefunction() = default;
  // Normalizes on construction.
  Wavefunction(Grid1D grid, std::vector<cplx> samples);
  // Keeps the samples as given (evolved amplitudes are not normalized).
  static Wavefunction raw(Grid1D grid, std::vector<cplx> samples);

  const Grid1D& grid() const { return grid_; }
  const std::vector<cplx>& samples() const { return samples_; }
  std::size_t size() const { return samples_.size(); }
  double norm2() const;

 private:
  Grid1D grid_;
  std::vector<cplx> samples_;
};

double norm2(const Grid1D& grid, const std::vector<cplx>& a);
cplx inner(const Grid1D& grid, const std::vector<cplx>& a, const std::vector<cplx>& b);  // sum a b* dx

struct CrossingDecoherenceTable {
  double p_cross = 0.0;
  double p_nocross = 0.0;
  cplx d_offdiag{0.0, 0.0};
  double epsilon_ratio = 0.0;  // |D|^2 / (p pbar); +inf when p pbar = 0 and D != 0
  double sum_rule_residual = 0.0;
};

CrossingDecoherenceTable make_table(double p_cross, double p_nocross, cplx d);

// Kernels. t = 0 is singular and rejected.
cplx free_propagator(double x, double x0, const ParticleParams& pp);
// Same kernel at complex time t(1 - i eta); only for composition self-tests.
cplx free_propagator_softened(double x, double x0, const ParticleParams& pp, double eta);
cplx restricted_propagator(double x, double x0, const ParticleParams& pp);
cplx crossing_propagator(double x, double x0, const ParticleParams& pp);

// Unitary free evolution exp(-i p^2 t / 2m hbar) on the periodic grid.
std::vector<cplx> free_evolve(const Grid1D& grid, const std::vector<cplx>& psi,
                              const ParticleParams& pp);

// Weight of each node in the x > 0 region: 1, 1/2 at the origin, 0 otherwise.
std::vector<double> positive_weights(const Grid1D& grid);

Wavefunction restricted_amplitude(const Wavefunction& psi0, const ParticleParams& pp);
Wavefunction crossing_amplitude(const Wavefunction& psi0, const ParticleParams& pp);
// Direct quadrature of the analytic restricted kernel, O(n^2). Only usable
// when the kernel's phase is resolved by the grid (dx << pi hbar t / (m L)).
Wavefunction restricted_amplitude_quadrature(const Wavefunction& psi0, const ParticleParams& pp);

CrossingDecoherenceTable decoherence_table(const Wavefunction& psi0, const ParticleParams& pp);

// Sliced projections: free evolution over t/n alternated with projection onto
// each half line separately (the origin node is removed from both).
Wavefunction brute_force_restricted(const Wavefunction& psi0, const ParticleParams& pp,
                                    std::size_t n_slices);

// State builders (all normalized).
Wavefunction gaussian_state(const Grid1D& grid, double x0, double p0, double sigma,
                            double hbar = 1.0);
// psi(x) - psi(-x) for a Gaussian centred at x0.
Wavefunction antisymmetric_gaussian(const Grid1D& grid, double x0, double p0, double sigma,
                                    double hbar = 1.0);
// Gaussian zeroed on x <= 0.
Wavefunction truncated_gaussian(const Grid1D& grid, double x0, double p0, double sigma,
                                double hbar = 1.0);
Wavefunction superposition(const Wavefunction& a, const Wavefunction& b, cplx ca, cplx cb);

// Box half-width and a power-of-two grid size able to hold a Gaussian's
// evolution over time pp.t.
struct GridSuggestion {
  double half_width;
  std::size_t n_points;
};
GridSuggestion suggest_grid(double x0, double p0, double sigma, const ParticleParams& pp);

// Amplitude on the outer 5% of the box on either side, relative to the peak.
double edge_amplitude(const Wavefunction& psi);

}  // namespace arrival::unitary
