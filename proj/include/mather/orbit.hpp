#pragma once

#include <utility>
#include <vector>

#include "mather/lagrangian.hpp"

namespace mather {

/// Finite path of lifted points g_0..g_n. `is_orbit` is set when the twist
/// recurrence holds at every interior point to 1e-10.
struct Orbit {
  std::vector<Vec> points;
  bool is_orbit = false;

  int dim() const { return points.empty() ? 0 : static_cast<int>(points.front().size()); }
  /// Number of steps n (points.size() - 1).
  int steps() const { return static_cast<int>(points.size()) - 1; }
};

inline constexpr double kOrbitTolerance = 1e-10;

/// (x0, x1) -> (x1, x2) with x2 = 2 x1 - x0 - V'(x1).
std::pair<Vec, Vec> twist_step(const DiscreteLagrangian& lag, const Vec& x0, const Vec& x1);

/// Derivative of (x0, x1) -> (x1, x2): [[0, I], [-I, 2I - V''(x1)]].
PhaseMat twist_jacobian(const DiscreteLagrangian& lag, const Vec& x1);

/// n steps of the twist map from (x0, x1); result has n + 1 points.
Orbit iterate_twist(const DiscreteLagrangian& lag, const Vec& x0, const Vec& x1, int n);

/// Max over interior i of |d2 L(g_{i-1}, g_i) + d1 L(g_i, g_{i+1})|.
double euler_lagrange_residual(const Lagrangian& lag, const Orbit& path);
/// Max over interior i of |(g_{i+1} - g_i) - (g_i - g_{i-1}) + V'(g_i)|.
double twist_residual(const DiscreteLagrangian& lag, const Orbit& path);

/// Sum of L(g_k, g_{k+1}).
double action_of_path(const Lagrangian& lag, const Orbit& path);

/// Shift every point by the integer vector n.
Orbit translate(const Orbit& path, const Vec& n);

}  // namespace mather
