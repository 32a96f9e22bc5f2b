#pragma once

#include <vector>

#include "mather/flow.hpp"
#include "mather/grid.hpp"
#include "mather/lagrangian.hpp"
#include "mather/orbit.hpp"
#include "mather/potential.hpp"

namespace mather {

// ---- Laplace method for the N-step kernel ----

struct LaplaceRow {
  double beta = 0.0;
  double lhs = 0.0;  // (beta/2pi)^{(N-1)d/2} int exp(-beta (A - h_N)) over the interior points
  double rhs = 0.0;  // det(A'')^{-1/2}
  double rel_err = 0.0;
};

struct LaplaceTable {
  Orbit minimizer;  // Newton-refined, endpoints x and y fixed as given (lifted)
  double action = 0.0;
  double log_det = 0.0;
  std::vector<LaplaceRow> rows;
};

/// Both sides carry the common factor exp(beta h_N). The integral runs over all
/// lifts of the interior points with the lifted endpoints held fixed; needs (N-1) d <= 2.
LaplaceTable laplace_validate(const Lagrangian& lag, const Vec& x, const Vec& y, int n,
                              const std::vector<double>& betas);

// ---- determinant of the Jacobi map in continuous time ----

/// det of Y'_0 -> Y_t / t for ydd + V''(x(s)) y = 0 along xdd = -V'(x).
double continuous_monodromy_det(const TrigPotential& potential, const PhasePoint& start, double t,
                                double dt = kDefaultTimeStep);

/// Points Gamma_0..Gamma_N of the one-step scheme with step t/N: the twist map of
/// (t/N)^2 V started from x and x + (t/N) v - (t/N)^2 V'(x) / 2.
Orbit discretized_orbit(const TrigPotential& potential, const PhasePoint& start, double t, int n);

/// det(Y_1 -> Y_N) / N^d along discretized_orbit. N must be a power of two >= 8.
double discretized_hessian_det(const TrigPotential& potential, const PhasePoint& start, double t, int n);

struct DetConvergenceRow {
  int n = 0;
  double discrete = 0.0;
  double continuous = 0.0;
  double error = 0.0;
};
/// The continuous reference uses the Verlet step reference_dt.
std::vector<DetConvergenceRow> detconv_table(const TrigPotential& potential, const PhasePoint& start, double t,
                                             const std::vector<int>& ns, double reference_dt = 1e-5);

/// Verlet samples of xdd = -V'(x) with cubic Hermite interpolation between them.
struct Trajectory {
  std::vector<PhasePoint> samples;
  double t = 0.0;
  double dt = 0.0;

  Vec position(double s) const;
};
Trajectory integrate_trajectory(const TrigPotential& potential, const PhasePoint& start, double t,
                                double dt = kDefaultTimeStep);

/// f in the basis e_k(s) = sqrt(2/t) sin(k pi s/t) t/(k pi), k = 1..K, orthonormal for
/// int xi' eta'. Entry ((k,a),(l,b)) = -int V''_ab(gamma_s) e_k(s) e_l(s) ds.
struct FredholmOperator {
  double t = 0.0;
  int modes = 0;
  int d = 1;
  DenseMatrix matrix;
};
FredholmOperator fredholm_operator(const TrigPotential& potential, const Trajectory& gamma, int modes);

struct FredholmDet {
  double value = 0.0;
  double min_eigenvalue = 0.0;  // of f
  int negative_modes = 0;       // eigenvalues of f below -1
  bool conjugate_passed = false;
};
/// det(I + f_K) from the eigenvalues; K >= 8.
FredholmDet fredholm_det(const TrigPotential& potential, const Trajectory& gamma, int modes);
/// The truncation tail is ~ c / K: Richardson 2 det_{2K} - det_K.
double fredholm_limit(const TrigPotential& potential, const Trajectory& gamma, int modes);

// ---- semiclassical ground state ----

struct SchrodingerResult {
  double hbar = 0.0;
  int m = 0;
  double energy = 0.0;
  GridFunction psi;  // positive, sum psi^2 h^d = 1
  double residual = 0.0;
  int iterations = 0;

  GridFunction density() const { return GridFunction(psi.grid, psi.values.array().square().matrix()); }
};

/// Smallest m with hbar / h >= 8.
int minimum_grid_size(double hbar);

/// -hbar^2 Delta / 2 + V with periodic second differences; shifted inverse power iteration.
SchrodingerResult schrodinger_ground(const TrigPotential& potential, double hbar, const TorusGrid& grid);

struct Well {
  Vec center;
  // <= 0: 3 sqrt(hbar / sqrt(lambda_min V''(center))), capped at half the distance to the nearest other center
  double radius = 0.0;
};

struct WellMass {
  double hbar = 0.0;
  int well = 0;
  double radius = 0.0;
  double mass = 0.0;
};

struct ConcentrationResult {
  std::vector<WellMass> rows;      // hbar-major, in the order given
  std::vector<double> energies;    // E_0 per hbar
  std::vector<double> lyapunov_sums;  // sum of sqrt(eig V'') per well
  int selected_well = 0;           // smallest Lyapunov sum
};

/// Ground-state mass inside each well (sup-norm ball on the torus) for each hbar.
/// The grid per hbar is max(min_grid, minimum_grid_size(hbar)) rounded up to a multiple of 8.
ConcentrationResult concentration_experiment(const TrigPotential& potential, const std::vector<Well>& wells,
                                             const std::vector<double>& hbars, int min_grid = 0);

}  // namespace mather
