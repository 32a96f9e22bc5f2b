#pragma once

#include <vector>

#include "mather/potential.hpp"

namespace mather {

/// Position and velocity on the lift (continuous time), or (g_0, g_1) in discrete time.
struct PhasePoint {
  Vec x;
  Vec v;
};

/// xdd = sign * V'(x): Mechanical is xdd + V'(x) = 0, Inverted is xdd = +V'(x).
enum class FlowSign : int { Mechanical = -1, Inverted = +1 };

inline constexpr double kDefaultTimeStep = 1e-3;

/// One Stormer-Verlet (kick-drift-kick) step.
PhasePoint flow_step(const TrigPotential& potential, FlowSign sign, const PhasePoint& state, double dt);

/// Jacobi fields (columns of y, with derivatives dy) along one Verlet step whose
/// base positions are x_begin -> x_end. This is the exact linearization of
/// flow_step, so the Wronskian is conserved to rounding.
struct JacobiState {
  Mat y;
  Mat dy;
};
JacobiState jacobi_step(const TrigPotential& potential, FlowSign sign, const Vec& x_begin,
                        const Vec& x_end, const JacobiState& state, double dt);

/// Flow plus d Jacobi fields with y(0) = 0, y'(0) = I, over [0, t].
struct JacobiFlowResult {
  PhasePoint end;
  JacobiState jacobi;
  std::vector<Vec> positions;  // filled when record = true (steps + 1 samples)
  double dt = 0.0;
};
JacobiFlowResult integrate_jacobi(const TrigPotential& potential, FlowSign sign, const PhasePoint& start,
                                  double t, double dt = kDefaultTimeStep, bool record = false);

/// |v|^2 / 2 - sign * V(x), conserved by xdd = sign * V'(x).
double flow_energy(const TrigPotential& potential, FlowSign sign, const PhasePoint& state);

}  // namespace mather
