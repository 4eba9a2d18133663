#pragma once

// Quantum Brownian motion without dissipation: master-equation evolution of
// rho(x, y), the discrete Wigner transform pair, crossing probabilities from
// the classical restricted kernel applied to the initial Wigner function,
// and the restricted / crossing branch densities used to check it.

#include <vector>

#include "arrival/classical.hpp"
#include "arrival/numerics.hpp"
#include "arrival/unitary.hpp"

namespace arrival::quantum {

using classical::BathParams;
using numerics::Grid1D;
using numerics::Grid2D;
using unitary::CrossingDecoherenceTable;
using unitary::ParticleParams;
using unitary::Wavefunction;

// rho(x_i, y_j) at samples[i * n + j] on a periodic grid shared by both
// arguments. Trace is sum rho(x, x) dx.
class DensityMatrixGrid {
 public:
  DensityMatrixGrid() = default;
  DensityMatrixGrid(Grid1D grid, std::vector<cplx> samples);
  static DensityMatrixGrid pure(const Wavefunction& psi);
  // sum_k w_k |psi_k><psi_k|, weights normalized to one
  static DensityMatrixGrid mixture(const std::vector<Wavefunction>& states,
                                   const std::vector<double>& weights);
  static DensityMatrixGrid zeros(const Grid1D& grid);

  const Grid1D& grid() const { return grid_; }
  std::size_t n() const { return grid_.size(); }
  std::vector<cplx>& samples() { return samples_; }
  const std::vector<cplx>& samples() const { return samples_; }
  cplx& at(std::size_t i, std::size_t j) { return samples_[i * n() + j]; }
  const cplx& at(std::size_t i, std::size_t j) const { return samples_[i * n() + j]; }

  cplx trace() const;
  double hermiticity_error() const;  // sup |rho - rho^dagger|
  double min_diagonal() const;
  double position_std() const;
  // diagonal mass on x <= 0
  double mass_nonpositive() const;
  DensityMatrixGrid adjoint() const;

 private:
  Grid1D grid_;
  std::vector<cplx> samples_;
};

DensityMatrixGrid operator+(const DensityMatrixGrid& a, const DensityMatrixGrid& b);
DensityMatrixGrid operator-(const DensityMatrixGrid& a, const DensityMatrixGrid& b);
double sup_distance(const DensityMatrixGrid& a, const DensityMatrixGrid& b);

struct MasterOptions {
  // dt must satisfy dt <= stability_constant * m dx^2 / hbar
  double stability_constant = 50.0;
};

// Particle mass may be +infinity, which freezes the kinetic term.
void validate_particle(const ParticleParams& pp);
double max_stable_step(const Grid1D& grid, const ParticleParams& pp, const MasterOptions& o = {});

// One Strang step: half decoherence, exact kinetic step, half decoherence.
DensityMatrixGrid master_step(const DensityMatrixGrid& rho, double dt, const BathParams& bath,
                              const ParticleParams& pp, const MasterOptions& o = {});
DensityMatrixGrid evolve(const DensityMatrixGrid& rho, double t, std::size_t n_steps,
                         const BathParams& bath, const ParticleParams& pp,
                         const MasterOptions& o = {});

// W(p_l, X_u): X_u = x_min + u dx / 2 for u in [0, 2n - 2], p_l = pi hbar l / (n dx)
// for l in [-n/2, n/2). Row-major in p, X fastest.
struct WignerGrid {
  Grid2D grid;
  std::vector<double> samples;
  Grid1D rho_grid;
  double hbar = 1.0;

  double integral() const;
  // integral over p at X_u
  std::vector<double> position_marginal() const;
  // integral over X at p_l
  std::vector<double> momentum_marginal() const;
  double min_value() const;
};

WignerGrid wigner_transform(const DensityMatrixGrid& rho, double hbar = 1.0);
DensityMatrixGrid inverse_wigner(const WignerGrid& w);

struct CoarseOptions {
  std::size_t n_p = 31;
  std::size_t n_x = 31;
  classical::QuadratureOptions quad{161, 161, 200, 8.0};
  bool strict = false;
};

struct QuantumCrossingResult {
  CrossingDecoherenceTable table;
  double raw_nocross = 0.0;       // before clamping to [0, 1]
  double clamp_magnitude = 0.0;
  double wigner_min = 0.0;        // most negative initial Wigner value
  double regime_ratio = 0.0;      // hbar / sqrt(Dp t) over sigma_x; must be <= 0.1
  bool regime_ok = false;
  bool offdiag_neglected = true;  // d_offdiag set to zero, not computed
};

QuantumCrossingResult quantum_crossing_probabilities(const DensityMatrixGrid& rho0, double t,
                                                     const BathParams& bath,
                                                     const ParticleParams& pp,
                                                     const CoarseOptions& o = {});

enum class BranchMethod {
  dirichlet,   // odd extension across x = 0 (and y = 0) between decoherence steps
  projection,  // zero the excluded region after each step
};

struct BranchDensities {
  DensityMatrixGrid rho_rr, rho_rc, rho_cr, rho_cc;
  DensityMatrixGrid full;
  double completeness_error() const;
};

BranchDensities branch_densities(const DensityMatrixGrid& rho0, double t, std::size_t n_slices,
                                 const BathParams& bath, const ParticleParams& pp,
                                 BranchMethod method = BranchMethod::dirichlet,
                                 const MasterOptions& o = {});

struct DecayFit {
  double x_probe = 0.0;
  double rate = 0.0;
  double predicted_rate = 0.0;  // Dp (2x)^2 / hbar^2
  double r_squared = 0.0;
  bool insufficient_range = false;
};

// Decay of |rho_t(x, -x)| / |rho_0(x, -x)| at the x > 0 node where |rho_0(x, -x)|
// is largest; steps of at most max_dt between the requested times.
DecayFit offdiagonal_decay_profile(const DensityMatrixGrid& rho0, const std::vector<double>& times,
                                   const BathParams& bath, const ParticleParams& pp,
                                   double max_dt, const MasterOptions& o = {});

}  // namespace arrival::quantum
