#include "mather/flow.hpp"

#include <cmath>

namespace mather {

namespace {
double sign_of(FlowSign s) { return static_cast<double>(static_cast<int>(s)); }
}  // namespace

PhasePoint flow_step(const TrigPotential& potential, FlowSign sign, const PhasePoint& state, double dt) {
  if (!(dt > 0.0)) throw InputError("flow_step needs dt > 0");
  const double s = sign_of(sign);
  const Vec v_half = state.v + 0.5 * dt * s * potential.gradient(state.x);
  const Vec x = state.x + dt * v_half;
  const Vec v = v_half + 0.5 * dt * s * potential.gradient(x);
  return {x, v};
}

JacobiState jacobi_step(const TrigPotential& potential, FlowSign sign, const Vec& x_begin,
                        const Vec& x_end, const JacobiState& state, double dt) {
  const double s = sign_of(sign);
  const Mat dy_half = state.dy + 0.5 * dt * s * potential.hessian(x_begin) * state.y;
  const Mat y = state.y + dt * dy_half;
  const Mat dy = dy_half + 0.5 * dt * s * potential.hessian(x_end) * y;
  return {y, dy};
}

JacobiFlowResult integrate_jacobi(const TrigPotential& potential, FlowSign sign, const PhasePoint& start,
                                  double t, double dt, bool record) {
  if (!(t > 0.0)) throw InputError("integration time must be positive");
  const int steps = std::max(1, static_cast<int>(std::ceil(t / dt - 1e-9)));
  const double h = t / steps;
  const int d = potential.dim();
  JacobiFlowResult r;
  r.dt = h;
  PhasePoint p = start;
  JacobiState j{Mat::Zero(d, d), Mat::Identity(d, d)};
  if (record) {
    r.positions.reserve(static_cast<std::size_t>(steps) + 1);
    r.positions.push_back(p.x);
  }
  for (int k = 0; k < steps; ++k) {
    const PhasePoint next = flow_step(potential, sign, p, h);
    j = jacobi_step(potential, sign, p.x, next.x, j, h);
    p = next;
    if (record) r.positions.push_back(p.x);
  }
  r.end = p;
  r.jacobi = j;
  return r;
}

double flow_energy(const TrigPotential& potential, FlowSign sign, const PhasePoint& state) {
  return 0.5 * state.v.squaredNorm() - sign_of(sign) * potential.value(state.x);
}

}  // namespace mather
