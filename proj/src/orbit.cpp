#include "mather/orbit.hpp"

#include <algorithm>

namespace mather {

std::pair<Vec, Vec> twist_step(const DiscreteLagrangian& lag, const Vec& x0, const Vec& x1) {
  Vec x2 = 2.0 * x1 - x0 - lag.potential().gradient(x1);
  return {x1, x2};
}

PhaseMat twist_jacobian(const DiscreteLagrangian& lag, const Vec& x1) {
  const int d = lag.dim();
  PhaseMat j = PhaseMat::Zero(2 * d, 2 * d);
  j.block(0, d, d, d) = Mat::Identity(d, d);
  j.block(d, 0, d, d) = -Mat::Identity(d, d);
  j.block(d, d, d, d) = 2.0 * Mat::Identity(d, d) - lag.potential().hessian(x1);
  return j;
}

Orbit iterate_twist(const DiscreteLagrangian& lag, const Vec& x0, const Vec& x1, int n) {
  Orbit o;
  o.points.reserve(static_cast<std::size_t>(n) + 1);
  o.points.push_back(x0);
  if (n >= 1) o.points.push_back(x1);
  for (int k = 2; k <= n; ++k) {
    auto [a, b] = twist_step(lag, o.points[k - 2], o.points[k - 1]);
    o.points.push_back(b);
  }
  o.is_orbit = twist_residual(lag, o) <= kOrbitTolerance;
  return o;
}

double euler_lagrange_residual(const Lagrangian& lag, const Orbit& path) {
  double r = 0.0;
  for (int i = 1; i + 1 < static_cast<int>(path.points.size()); ++i) {
    const Vec g = lag.d2(path.points[i - 1], path.points[i]) + lag.d1(path.points[i], path.points[i + 1]);
    r = std::max(r, g.lpNorm<Eigen::Infinity>());
  }
  return r;
}

double twist_residual(const DiscreteLagrangian& lag, const Orbit& path) {
  double r = 0.0;
  const auto& p = path.points;
  for (int i = 1; i + 1 < static_cast<int>(p.size()); ++i) {
    const Vec e = (p[i + 1] - p[i]) - (p[i] - p[i - 1]) + lag.potential().gradient(p[i]);
    r = std::max(r, e.lpNorm<Eigen::Infinity>());
  }
  return r;
}

double action_of_path(const Lagrangian& lag, const Orbit& path) {
  if (path.points.size() < 2) throw InputError("action_of_path needs at least two points");
  double a = 0.0;
  for (std::size_t k = 0; k + 1 < path.points.size(); ++k) a += lag.value(path.points[k], path.points[k + 1]);
  return a;
}

Orbit translate(const Orbit& path, const Vec& n) {
  Orbit o = path;
  for (auto& p : o.points) p += n;
  return o;
}

}  // namespace mather
