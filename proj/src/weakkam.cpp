#include "mather/weakkam.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include <Eigen/Cholesky>
#include <fmt/format.h>

#include "mather/hessian.hpp"

namespace mather {

using kernels::Exec;
using kernels::IndexMatrix;
using kernels::RowMatrix;

namespace {

constexpr double kFixedPointTol = 1e-8;
constexpr int kMaxPeriod = 64;

double inf_norm(const DenseVector& v) { return v.lpNorm<Eigen::Infinity>(); }

// Normalized iterates n_{k+1} = op(n_k) - s_{k+1} until n_k repeats with some period p <= 64.
struct Cycle {
  std::vector<DenseVector> states;  // one period, states[0] is the first repeated state
  std::vector<double> shifts;       // shifts[k] takes states[k] to states[k + 1] (cyclically)
  int iterations = 0;

  double drift() const {
    double s = 0.0;
    for (double x : shifts) s += x;
    return s / static_cast<double>(shifts.size());
  }
};

template <class Op>
Cycle find_cycle(Op&& op, DenseVector u, int max_iterations, const char* stage) {
  std::deque<DenseVector> states;
  std::deque<double> shifts;
  for (int it = 1; it <= max_iterations; ++it) {
    DenseVector v = op(u);
    const double s = v.minCoeff();
    v.array() -= s;
    const double tol = 1e-11 * std::max(1.0, inf_norm(v));
    for (int p = 1; p <= static_cast<int>(states.size()); ++p) {
      if (inf_norm(v - states[states.size() - p]) > tol) continue;
      Cycle c;
      c.iterations = it;
      c.states.assign(states.end() - p, states.end());
      c.shifts.assign(shifts.end() - p, shifts.end());
      c.shifts.push_back(s);
      c.shifts.erase(c.shifts.begin());
      return c;
    }
    states.push_back(v);
    shifts.push_back(s);
    if (static_cast<int>(states.size()) > kMaxPeriod) {
      states.pop_front();
      shifts.pop_front();
    }
    u = std::move(v);
  }
  throw NumericalError(stage, fmt::format("value iteration found no cycle of length <= {} in {} iterations",
                                          kMaxPeriod, max_iterations));
}

// Fixed point of op - drift built from one cycle: min (backward) or max (forward) over the
// unnormalized iterates states[0] + cumulative shifts - k drift.
DenseVector combine_cycle(const Cycle& c, bool take_min) {
  const double drift = c.drift();
  DenseVector out = c.states[0];
  double cumulative = 0.0;
  for (std::size_t k = 1; k < c.states.size(); ++k) {
    cumulative += c.shifts[k - 1] - drift;
    const DenseVector raw = c.states[k].array() + cumulative;
    if (take_min)
      out = out.cwiseMin(raw);
    else
      out = out.cwiseMax(raw);
  }
  return out;
}

double backward_residual(const ActionMatrix& a, const DenseVector& u, double c) {
  DenseVector t;
  kernels::minplus_columns(a.cost, u, t, nullptr);
  return inf_norm(t.array() + c - u.array());
}

double forward_residual(const ActionMatrix& a, const DenseVector& u, double c) {
  DenseVector t;
  kernels::maxplus_rows(a.cost, u, t, nullptr);
  return inf_norm(t.array() - c - u.array());
}

}  // namespace

int default_action_radius(const DiscreteLagrangian& lag) {
  return 2 + static_cast<int>(std::ceil(lag.omega().cwiseAbs().maxCoeff()));
}

ActionMatrix action_matrix(const Lagrangian& lag, const TorusGrid& grid, int radius, Exec exec) {
  if (lag.dim() != grid.dim()) throw InputError("lagrangian and grid dimensions differ");
  if (radius < 1) throw InputError("action radius must be at least 1");
  const int n = grid.size();
  ActionMatrix a{RowMatrix(n, n), IndexMatrix(n, n), lattice_translates(grid.dim(), radius), radius, grid,
                 lag.clone()};
  std::vector<Vec> nodes(n);
  for (int i = 0; i < n; ++i) nodes[i] = grid.node(i);
  const auto& shifts = a.shifts;
  auto& translate = a.translate;
  kernels::fill(
      a.cost,
      [&](int i, int j) {
        double best = std::numeric_limits<double>::infinity();
        int arg = 0;
        for (std::size_t s = 0; s < shifts.size(); ++s) {
          const double v = lag.value(nodes[i], nodes[j] + shifts[s]);
          if (v < best) best = v, arg = static_cast<int>(s);
        }
        translate(i, j) = arg;
        return best;
      },
      exec);
  return a;
}

ActionMatrix action_matrix(const DiscreteLagrangian& lag, const TorusGrid& grid, Exec exec) {
  return action_matrix(lag, grid, default_action_radius(lag), exec);
}

GridFunction lax_oleinik_backward(const ActionMatrix& a, const GridFunction& u, Exec exec) {
  GridFunction out(a.grid);
  kernels::minplus_columns(a.cost, u.values, out.values, nullptr, exec);
  return out;
}

GridFunction lax_oleinik_forward(const ActionMatrix& a, const GridFunction& u, Exec exec) {
  GridFunction out(a.grid);
  kernels::maxplus_rows(a.cost, u.values, out.values, nullptr, exec);
  return out;
}

CriticalValue critical_value(const ActionMatrix& a, int max_iterations) {
  auto op = [&](const DenseVector& u) {
    DenseVector t;
    kernels::minplus_columns(a.cost, u, t, nullptr);
    return t;
  };
  const Cycle cycle = find_cycle(op, DenseVector::Zero(a.grid.size()), max_iterations, "weakkam");
  CriticalValue cv{-cycle.drift(), static_cast<int>(cycle.states.size()), cycle.iterations,
                   GridFunction(a.grid, cycle.states.back())};
  return cv;
}

WeakKamPair weak_kam_pair(const ActionMatrix& a, int max_iterations) {
  auto backward = [&](const DenseVector& u) {
    DenseVector t;
    kernels::minplus_columns(a.cost, u, t, nullptr);
    return t;
  };
  const Cycle down = find_cycle(backward, DenseVector::Zero(a.grid.size()), max_iterations, "weakkam");
  const double c = -down.drift();
  DenseVector um = combine_cycle(down, true);
  um.array() -= um.minCoeff();

  auto forward = [&](const DenseVector& u) {
    DenseVector t;
    kernels::maxplus_rows(a.cost, u, t, nullptr);
    return DenseVector(t.array() - c);
  };
  const Cycle up = find_cycle(forward, um, max_iterations, "weakkam");
  DenseVector up_fixed = combine_cycle(up, false);
  // forward iterates keep their shifts; restore the level relative to u_-
  up_fixed.array() += (um - up_fixed).minCoeff();

  WeakKamPair pair{GridFunction(a.grid, um), GridFunction(a.grid, up_fixed), c, 0.0, 0.0,
                   std::max(static_cast<int>(down.states.size()), static_cast<int>(up.states.size()))};
  pair.residual_minus = backward_residual(a, um, c);
  pair.residual_plus = forward_residual(a, up_fixed, c);
  if (pair.residual_minus > kFixedPointTol || pair.residual_plus > kFixedPointTol)
    throw NumericalError("weakkam", fmt::format("fixed-point residuals {:.3g} / {:.3g} exceed {:.0e}",
                                                pair.residual_minus, pair.residual_plus, kFixedPointTol));
  return pair;
}

MatherSet mather_indicator(const WeakKamPair& pair, double tol) {
  const TorusGrid& g = pair.u_minus.grid;
  const DenseVector gap = pair.u_minus.values - pair.u_plus.values;
  const int m = g.per_dim();
  const double h = g.spacing();
  MatherSet set;
  for (int i = 0; i < g.size(); ++i) {
    const int i0 = i % m;
    const int i1 = i / m;
    const int right = (i0 + 1) % m + i1 * m;
    set.lipschitz = std::max(set.lipschitz, std::abs(gap[i] - gap[right]) / h);
    if (g.dim() == 2) {
      const int up = i0 + ((i1 + 1) % m) * m;
      set.lipschitz = std::max(set.lipschitz, std::abs(gap[i] - gap[up]) / h);
    }
  }
  set.tol = tol >= 0.0 ? tol : 10.0 * h * set.lipschitz;
  for (int i = 0; i < g.size(); ++i)
    if (gap[i] <= set.tol) set.nodes.push_back(i);
  if (set.nodes.empty())
    throw NumericalError("weakkam", fmt::format("empty Mather set at tolerance {:.3g}", set.tol));
  return set;
}

GraphCheck graph_property_check(const ActionMatrix& a, const WeakKamPair& pair, const MatherSet& set) {
  GraphCheck out;
  out.min_margin = std::numeric_limits<double>::infinity();
  const double h = a.grid.spacing();
  const int n = a.grid.size();
  for (int x : set.nodes) {
    int best = 0;
    double best_value = -std::numeric_limits<double>::infinity();
    for (int y = 0; y < n; ++y) {
      const double v = pair.u_plus[y] - a.cost(x, y);
      if (v > best_value) best_value = v, best = y;
    }
    const Vec best_lift = a.lift(x, best);
    for (int y = 0; y < n; ++y) {
      if ((a.lift(x, y) - best_lift).cwiseAbs().maxCoeff() <= h * (1.0 + 1e-9)) continue;
      const double margin = best_value - (pair.u_plus[y] - a.cost(x, y));
      if (margin < out.min_margin) {
        out.min_margin = margin;
        out.worst_node = x;
      }
    }
  }
  out.holds = out.min_margin > 0.0;
  return out;
}

ActionMatrix normalized_action(const ActionMatrix& a, const WeakKamPair& pair) {
  ActionMatrix out = a;
  const DenseVector& u = pair.u_minus.values;
  out.cost = (a.cost.colwise() + u).rowwise() - u.transpose();
  out.cost.array() += pair.c;
  out.lag = std::make_shared<NormalizedLagrangian>(*a.lag, pair.u_minus, pair.c);
  return out;
}

ValueTable finite_action_table(const ActionMatrix& a, int n, Exec exec) {
  if (n < 1) throw InputError("finite_action_table needs n >= 1");
  ValueTable t;
  t.n = n;
  t.step = std::make_shared<ActionMatrix>(a);
  t.h.reserve(n);
  t.h.push_back(a.cost);
  for (int k = 1; k < n; ++k) {
    RowMatrix next;
    IndexMatrix arg;
    kernels::minplus_product(t.h.back(), a.cost, next, arg, exec);
    t.h.push_back(std::move(next));
    t.back.push_back(std::move(arg));
  }
  return t;
}

std::vector<PartitionPoint> partition_bound(const ActionMatrix& normalized, double beta,
                                            const std::vector<int>& horizons, Exec exec) {
  if (!(beta > 0.0)) throw InputError("beta must be positive");
  std::vector<PartitionPoint> out;
  if (horizons.empty()) return out;
  const int last = *std::max_element(horizons.begin(), horizons.end());
  if (*std::min_element(horizons.begin(), horizons.end()) < 1) throw InputError("horizons must be >= 1");
  const int d = normalized.grid.dim();
  const double log_weight = d * std::log(beta) + 2.0 * std::log(normalized.grid.cell_volume());
  RowMatrix h = normalized.cost;
  IndexMatrix arg;
  for (int k = 1; k <= last; ++k) {
    if (k > 1) {
      RowMatrix next;
      kernels::minplus_product(h, normalized.cost, next, arg, exec);
      h = std::move(next);
    }
    if (std::find(horizons.begin(), horizons.end(), k) == horizons.end()) continue;
    const double hmin = h.minCoeff();
    const double sum = (-beta * (h.array() - hmin)).exp().sum();
    out.push_back({k, log_weight - beta * hmin + std::log(sum)});
  }
  return out;
}

namespace {

DenseVector el_gradient(const Lagrangian& lag, const Orbit& p) {
  const int d = p.dim();
  const int n = p.steps();
  DenseVector g(std::max(n - 1, 0) * d);
  for (int i = 1; i < n; ++i)
    g.segment((i - 1) * d, d) = lag.d2(p.points[i - 1], p.points[i]) + lag.d1(p.points[i], p.points[i + 1]);
  return g;
}

// Block Cholesky along the Schur recursion: every D_k must be positive definite.
bool positive_definite(const BlockTridiagonal& b) {
  Mat dk = b.diag[0];
  for (int k = 0; k < b.blocks(); ++k) {
    if (k > 0) {
      const Mat& c = b.off[k - 1];
      Eigen::LLT<Mat> prev(dk);
      dk = b.diag[k] - c.transpose() * prev.solve(c);
    }
    Eigen::LLT<Mat> llt(dk);
    if (llt.info() != Eigen::Success) return false;
  }
  return true;
}

}  // namespace

MinimizerPath minimizer_path(const ValueTable& table, int x, int z, bool refine) {
  const ActionMatrix& a = *table.step;
  const int n = table.n;
  const int size = a.grid.size();
  if (x < 0 || x >= size || z < 0 || z >= size) throw InputError("minimizer_path node out of range");
  std::vector<int> nodes(n + 1);
  nodes[n] = z;
  for (int k = n; k >= 2; --k) nodes[k - 1] = table.back[k - 2](x, nodes[k]);
  nodes[0] = x;

  MinimizerPath out;
  Vec lift = a.grid.node(x);
  out.path.points.push_back(lift);
  for (int k = 0; k < n; ++k) {
    lift += a.lift(nodes[k], nodes[k + 1]) - a.grid.node(nodes[k]);
    out.path.points.push_back(lift);
  }
  const Lagrangian& lag = *a.lag;
  out.dp_action = table.horizon(n)(x, z);
  out.action = action_of_path(lag, out.path);
  out.residual = n >= 2 ? inf_norm(el_gradient(lag, out.path)) : 0.0;
  if (!refine || n < 2) return out;
  return refine_minimizer(lag, out.path, out.dp_action);
}

MinimizerPath refine_minimizer(const Lagrangian& lag, const Orbit& seed, double reference_action) {
  const int n = seed.steps();
  if (n < 1) throw InputError("refine_minimizer needs a path with at least one step");
  MinimizerPath out;
  out.path = seed;
  out.dp_action = reference_action;
  out.action = action_of_path(lag, seed);
  out.residual = n >= 2 ? inf_norm(el_gradient(lag, seed)) : 0.0;
  if (n < 2) return out;

  const int d = lag.dim();
  Orbit p = out.path;
  double res = out.residual;
  double act = out.action;
  // rounding floor of the second differences grows with the size of the lifts
  double lift = 1.0;
  for (const auto& x : seed.points) lift = std::max(lift, x.lpNorm<Eigen::Infinity>());
  const double res_tol = 1e-12 + 16.0 * std::numeric_limits<double>::epsilon() * lift;
  for (int it = 0; it < 200 && res > res_tol; ++it) {
    const DenseVector g = el_gradient(lag, p);
    std::vector<Vec> rhs(n - 1);
    for (int i = 0; i < n - 1; ++i) rhs[i] = -g.segment(i * d, d);
    const BlockTridiagonal hess = assemble_hessian(lag, p);
    bool accepted = false;
    // plain Newton when the Hessian is positive definite; otherwise shift the diagonal
    // until it is, and accept only steps that lower the action
    double shift = 0.0;
    for (int attempt = 0; attempt < 40 && !accepted; ++attempt) {
      BlockTridiagonal shifted = hess;
      for (auto& b : shifted.diag) b += shift * Mat::Identity(d, d);
      const double next_shift = shift == 0.0 ? 1e-3 : 4.0 * shift;
      if (!positive_definite(shifted)) {
        shift = next_shift;
        continue;
      }
      const auto step = block_tridiagonal_solve(shifted, rhs);
      double slope = 0.0;
      for (int i = 0; i < n - 1; ++i) slope += g.segment(i * d, d).dot(step[i]);
      for (double t = 1.0; t > 1e-6; t *= 0.5) {
        Orbit trial = p;
        for (int i = 1; i < n; ++i) trial.points[i] += t * step[i - 1];
        const double r = inf_norm(el_gradient(lag, trial));
        const double ta = action_of_path(lag, trial);
        const bool descent = ta < act + 1e-4 * t * slope;
        if (descent || (shift == 0.0 && r < res)) {
          p = std::move(trial);
          res = r;
          act = ta;
          accepted = true;
          break;
        }
      }
      shift = next_shift;
    }
    if (!accepted) break;
  }
  if (res > res_tol) {
    out.warning = fmt::format("Newton refinement stalled at residual {:.3g}; kept the seed path", res);
    return out;
  }
  const double refined_action = action_of_path(lag, p);
  if (refined_action > out.dp_action + 1e-12 * std::max(1.0, std::abs(out.dp_action))) {
    out.warning = fmt::format("refined action {:.17g} exceeds reference action {:.17g}; kept the seed path",
                              refined_action, out.dp_action);
    return out;
  }
  if (!positive_definite(assemble_hessian(lag, p))) {
    out.degenerate = true;
    out.warning = "refined path is a critical point with a Hessian that is not positive definite";
  }
  out.path = std::move(p);
  out.path.is_orbit = true;
  out.action = refined_action;
  out.residual = res;
  out.refined = true;
  return out;
}

double action_deficit(const WeakKamPair& pair, const Lagrangian& lag, const Orbit& path) {
  if (path.points.size() < 2) throw InputError("action_deficit needs a path with at least one step");
  return pair.u_minus.interpolate(path.points.front()) + action_of_path(lag, path) + path.steps() * pair.c -
         pair.u_plus.interpolate(path.points.back());
}

}  // namespace mather
