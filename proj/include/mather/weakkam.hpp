#pragma once

#include <memory>
#include <string>
#include <vector>

#include "mather/grid.hpp"
#include "mather/kernels.hpp"
#include "mather/lagrangian.hpp"
#include "mather/orbit.hpp"

namespace mather {

/// One-step cost between grid nodes: cost(a, b) = min_{|n|_inf <= R} L(x_a, x_b + n).
/// Ties go to the lowest translate.
struct ActionMatrix {
  kernels::RowMatrix cost;
  kernels::IndexMatrix translate;  // index into shifts of the minimizing lift
  std::vector<Vec> shifts;
  int radius = 0;
  TorusGrid grid;
  std::shared_ptr<const Lagrangian> lag;

  /// Lifted endpoint x_b + n of the optimal step from x_a.
  Vec lift(int a, int b) const { return grid.node(b) + shifts[translate(a, b)]; }
};

/// 2 + ceil(|omega|_inf): one-step minimizers have displacement near omega.
int default_action_radius(const DiscreteLagrangian& lag);

ActionMatrix action_matrix(const Lagrangian& lag, const TorusGrid& grid, int radius,
                           kernels::Exec exec = kernels::Exec::Parallel);
ActionMatrix action_matrix(const DiscreteLagrangian& lag, const TorusGrid& grid,
                           kernels::Exec exec = kernels::Exec::Parallel);

/// (T^- u)(x_i) = min_j u(x_j) + cost(j, i), without the critical constant.
GridFunction lax_oleinik_backward(const ActionMatrix& a, const GridFunction& u,
                                  kernels::Exec exec = kernels::Exec::Parallel);
/// (T^+ u)(x_i) = max_j u(x_j) - cost(i, j).
GridFunction lax_oleinik_forward(const ActionMatrix& a, const GridFunction& u,
                                 kernels::Exec exec = kernels::Exec::Parallel);

struct CriticalValue {
  double c = 0.0;
  int period = 1;  // cycle length of the normalized value iteration
  int iterations = 0;
  GridFunction profile;  // last normalized iterate (min 0)
};

/// Normalized min-plus power iteration u <- T^- u - min T^- u from u = 0.
/// c = -(mean shift over the detected cycle).
CriticalValue critical_value(const ActionMatrix& a, int max_iterations = 100000);

struct WeakKamPair {
  GridFunction u_minus;
  GridFunction u_plus;
  double c = 0.0;
  double residual_minus = 0.0;  // |T^- u_- + c - u_-|_inf
  double residual_plus = 0.0;   // |T^+ u_+ - c - u_+|_inf
  int period = 1;

  GridFunction gap() const { return GridFunction(u_minus.grid, u_minus.values - u_plus.values); }
};

/// u_- from the critical value iteration (min 0), u_+ from forward iterates
/// started at u_-, shifted so that min(u_- - u_+) = 0.
WeakKamPair weak_kam_pair(const ActionMatrix& a, int max_iterations = 100000);

struct MatherSet {
  std::vector<int> nodes;
  double tol = 0.0;
  double lipschitz = 0.0;  // empirical Lipschitz constant of u_- - u_+
};

/// Nodes where u_- - u_+ <= tol; tol < 0 means the default 10 h Lip.
MatherSet mather_indicator(const WeakKamPair& pair, double tol = -1.0);

struct GraphCheck {
  bool holds = false;
  double min_margin = 0.0;  // smallest value gap to a candidate more than h away
  int worst_node = -1;
};

/// At each Mather node the forward step maximizing u_+(y) - L(x, y) must beat
/// every candidate at lifted distance > h from it by a positive margin.
GraphCheck graph_property_check(const ActionMatrix& a, const WeakKamPair& pair, const MatherSet& set);

/// Cost matrix of the normalized lagrangian L + u_-(x) - u_-(y) + c on the grid (entries >= 0 up to rounding).
ActionMatrix normalized_action(const ActionMatrix& a, const WeakKamPair& pair);

/// h_k for k = 1..n by h_{k+1} = h_k (min-plus) h_1, with midpoint backpointers.
struct ValueTable {
  int n = 0;
  std::vector<kernels::RowMatrix> h;     // h[k-1] = h_k
  std::vector<kernels::IndexMatrix> back;  // back[k-1](x, z) = node before z on an optimal (k+1)-step path
  std::shared_ptr<const ActionMatrix> step;

  const kernels::RowMatrix& horizon(int k) const { return h.at(k - 1); }
};

ValueTable finite_action_table(const ActionMatrix& a, int n, kernels::Exec exec = kernels::Exec::Parallel);

struct PartitionPoint {
  int n = 0;
  double log_bound = 0.0;  // log of beta^d sum_{x,y} exp(-beta h_n(x,y)) h^{2d}
};

/// Measured on the normalized table for the listed horizons.
std::vector<PartitionPoint> partition_bound(const ActionMatrix& normalized, double beta, const std::vector<int>& horizons,
                                            kernels::Exec exec = kernels::Exec::Parallel);

struct MinimizerPath {
  Orbit path;
  double dp_action = 0.0;
  double action = 0.0;
  double residual = 0.0;  // Euler-Lagrange residual of the returned path
  bool refined = false;
  bool degenerate = false;  // Hessian singular or not positive definite
  std::string warning;
};

/// DP-backtracked n-step path from node x to node z (z lifted by the table's
/// translates); with refine, Newton on the interior Euler-Lagrange equations.
MinimizerPath minimizer_path(const ValueTable& table, int x, int z, bool refine);

/// Newton on the interior Euler-Lagrange equations with fixed endpoints, accepting
/// only positive definite steps that lower the action. The seed is returned (with a
/// warning) if the residual stalls above 1e-12 plus the rounding floor of the lifts or the action ends above reference_action.
MinimizerPath refine_minimizer(const Lagrangian& lag, const Orbit& seed, double reference_action);

/// u_-(g_0) + A(g) + n c - u_+(g_n), with u_+- interpolated.
double action_deficit(const WeakKamPair& pair, const Lagrangian& lag, const Orbit& path);

}  // namespace mather
