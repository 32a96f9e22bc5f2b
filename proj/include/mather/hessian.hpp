#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "mather/flow.hpp"
#include "mather/lagrangian.hpp"
#include "mather/orbit.hpp"

namespace mather {

/// Symmetric block-tridiagonal matrix: diag[k] on the diagonal, off[k] in
/// block (k, k+1) and its transpose in (k+1, k).
struct BlockTridiagonal {
  int d = 1;
  std::vector<Mat> diag;
  std::vector<Mat> off;

  int blocks() const { return static_cast<int>(diag.size()); }
  int size() const { return blocks() * d; }
  DenseMatrix to_dense() const;
  /// Blocks first..first+count-1 as a new matrix.
  BlockTridiagonal principal(int first, int count) const;
};

/// Determinant carried as sign * exp(log_abs).
struct LogDet {
  int sign = 1;
  double log_abs = 0.0;
  bool conjugate_point = false;  // exactly singular
  bool pivoted = false;          // banded LU fallback was used

  double value() const { return conjugate_point ? 0.0 : sign * std::exp(log_abs); }
};

/// Action Hessian with respect to the interior points g_1..g_{n-1} of a path
/// g_0..g_n: diagonal d22 L(g_{i-1}, g_i) + d11 L(g_i, g_{i+1}), off-diagonal d12 L(g_i, g_{i+1}).
BlockTridiagonal assemble_hessian(const Lagrangian& lag, const Orbit& path);

/// Forward block elimination D_1 = B_11, D_k = B_kk - C_{k-1}^T D_{k-1}^{-1} C_{k-1}.
/// `prefix`, if given, receives log det of the leading k-block minors, k = 1..n.
/// Falls back to banded LU with partial pivoting when some |det D_k| is tiny.
LogDet block_determinant(const BlockTridiagonal& b, std::vector<double>* prefix = nullptr);
/// Banded LU with partial pivoting on the whole matrix.
LogDet banded_determinant(const BlockTridiagonal& b);
LogDet dense_determinant(const DenseMatrix& m);

/// Solves B x = rhs by the same block elimination; throws on singular D_k.
std::vector<Vec> block_tridiagonal_solve(const BlockTridiagonal& b, const std::vector<Vec>& rhs);

/// The map Y_1 -> Y_n for the linearized twist recurrence along an orbit
/// g_0..g_n (Y_0 = 0), as matrix = scaled * exp(log_scale).
struct Monodromy {
  Mat scaled;
  double log_scale = 0.0;
  LogDet det;

  Mat matrix() const { return scaled * std::exp(log_scale); }
};

/// Propagates the 2d x d frame (Y_{k-1}, Y_k) with twist_jacobian, re-orthonormalized every step.
Monodromy monodromy_map(const DiscreteLagrangian& lag, const Orbit& orbit);
/// General lagrangian: Y_{k+1} = -C_k^{-1} (B_kk Y_k + C_{k-1}^T Y_{k-1}) with the action-Hessian blocks.
Monodromy monodromy_map(const Lagrangian& lag, const Orbit& orbit);

/// (-1)^{(n-1)d} / prod_{k=1}^{n-1} det d12 L(g_k, g_{k+1}): det(Y_1 -> Y_n) = prefactor * det(Hessian).
LogDet monodromy_prefactor(const Lagrangian& lag, const Orbit& orbit);

struct LyapunovSpectrum {
  int steps = 0;
  std::vector<double> positive;  // d largest, descending
  std::vector<double> full;      // all 2d, descending
  std::vector<double> history;   // running sum of positive exponents, sampled
  double pairing_error() const;  // |sum of all 2d exponents|
  double positive_sum() const;
};

/// QR-reorthogonalized product of twist jacobians along the orbit from (g_0, g_1) = (start.x, start.v).
/// Lifts are reduced mod 1 as the orbit is generated.
LyapunovSpectrum lyapunov_exponents(const DiscreteLagrangian& lag, const PhasePoint& start, int n,
                                    int history_every = 0);
/// Same, along the interior points of a given orbit.
LyapunovSpectrum lyapunov_exponents(const DiscreteLagrangian& lag, const Orbit& orbit, int history_every = 0);

struct ThoulessResult {
  double value = 0.0;  // (1/n) log|det nA''|, -inf at a conjugate point
  int n = 0;           // interior points
  bool conjugate_point = false;
  std::vector<double> running;  // (1/k) log|det kA''|, k = 1..n
};
/// Hessian over the interior points g_1..g_n of an orbit g_0..g_{n+1}.
ThoulessResult thouless_limit(const Lagrangian& lag, const Orbit& orbit);

struct SubadditivityResult {
  double slack = 0.0;  // log[A_m] + log[A_{n-m}(shift^m)] - log[A_n]
  bool holds = false;  // slack >= -1e-9 with both sub-blocks positive definite
};
/// Splits the interior block range 1..n into 1..m and m+1..n.
SubadditivityResult subadditivity_check(const Lagrangian& lag, const Orbit& orbit, int m);

/// r(alpha) = 2 / (alpha (1 - sqrt q)), q = 2 alpha^2 / (1 + sqrt(1 + 4 alpha^4)).
double tridiag_inverse_radius(double alpha);

struct TridiagBoundResult {
  double inverse_inf_norm = 0.0;
  double alpha = 0.0;  // |A^{-1}|_2 used for the bound
  double bound = 0.0;
  bool admissible = false;  // |off| <= 1 and alpha finite
  bool holds = false;
};
/// alpha <= 0 means: use alpha = |A^{-1}|_2.
TridiagBoundResult tridiag_inverse_bound_check(const DenseVector& diag, const DenseVector& off, double alpha = 0.0);

struct BoxGaussianResult {
  double lhs = 0.0;           // (beta/2 pi)^{N/2} box integral
  double rhs = 0.0;           // (1 - e^{-beta rho})^N / sqrt[A]
  double rho = 0.0;           // rho0^2 delta^2 / 2, rho0 = 1/|A^{-1/2}|_inf
  double rho_calibrated = 0.0;  // largest rho for which the inequality holds
  double quadrature_change = 0.0;
  bool feasible = false;
  bool inconclusive = false;
  bool holds = false;
};
/// Box |x|_inf <= delta; feasible when the total dimension is at most 4.
BoxGaussianResult box_gaussian_lower_bound_check(const BlockTridiagonal& a, double delta, double beta);

}  // namespace mather
