#include "mather/semiclassics.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <fmt/format.h>

#include "mather/hessian.hpp"
#include "mather/weakkam.hpp"

namespace mather {

namespace {

constexpr const char* kStage = "semiclassics";

double smallest_eigenvalue(const DenseMatrix& m) {
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

}  // namespace

LaplaceTable laplace_validate(const Lagrangian& lag, const Vec& x, const Vec& y, int n,
                              const std::vector<double>& betas) {
  const int d = lag.dim();
  if (n < 2) throw InputError("laplace_validate needs N >= 2");
  if ((n - 1) * d > 2) throw InputError(fmt::format("laplace_validate: (N-1) d = {} exceeds 2", (n - 1) * d));
  if (betas.empty()) throw InputError("laplace_validate needs a nonempty beta list");
  if (x.size() != d || y.size() != d) throw InputError("laplace_validate endpoint dimension mismatch");

  Orbit seed;
  for (int k = 0; k <= n; ++k) seed.points.push_back(x + (y - x) * (static_cast<double>(k) / n));
  const MinimizerPath refined = refine_minimizer(lag, seed, action_of_path(lag, seed));
  if (!refined.refined) throw NumericalError(kStage, "minimizer refinement failed: " + refined.warning);
  if (refined.degenerate) throw NumericalError(kStage, "degenerate minimizer: " + refined.warning);

  LaplaceTable out;
  out.minimizer = refined.path;
  out.action = refined.action;
  const BlockTridiagonal hess = assemble_hessian(lag, out.minimizer);
  const LogDet det = block_determinant(hess);
  const double lambda_min = smallest_eigenvalue(hess.to_dense());
  if (det.conjugate_point || det.sign <= 0 || lambda_min <= 1e-8)
    throw NumericalError(kStage, fmt::format("degenerate minimizer (smallest Hessian eigenvalue {:.3g})", lambda_min));
  out.log_det = det.log_abs;

  const int dims = (n - 1) * d;
  DenseVector center(dims);
  for (int i = 1; i < n; ++i) center.segment((i - 1) * d, d) = out.minimizer.points[i];

  auto excess = [&](const DenseVector& z) {
    Orbit p = out.minimizer;
    for (int i = 1; i < n; ++i) p.points[i] = z.segment((i - 1) * d, d);
    return action_of_path(lag, p) - out.action;
  };

  using Rule = boost::math::quadrature::gauss_kronrod<double, 31>;
  constexpr unsigned kDepth = 20;
  constexpr double kTol = 1e-12;

  for (const double beta : betas) {
    if (!(beta > 0.0)) throw InputError("laplace_validate: beta must be positive");
    const double half = 12.0 / std::sqrt(beta * lambda_min);
    double worst = 0.0;
    double integral = 0.0;
    if (dims == 1) {
      double err = 0.0;
      auto f = [&](double u) {
        DenseVector z(1);
        z[0] = u;
        return std::exp(-beta * excess(z));
      };
      integral = Rule::integrate(f, center[0] - half, center[0] + half, kDepth, kTol, &err);
      worst = err / std::abs(integral);
    } else {
      auto outer = [&](double u) {
        auto inner = [&](double w) {
          DenseVector z(2);
          z << u, w;
          return std::exp(-beta * excess(z));
        };
        double err = 0.0;
        const double v = Rule::integrate(inner, center[1] - half, center[1] + half, kDepth, kTol, &err);
        if (v > 0.0) worst = std::max(worst, err / v);
        return v;
      };
      double err = 0.0;
      integral = Rule::integrate(outer, center[0] - half, center[0] + half, kDepth, kTol, &err);
      worst = std::max(worst, err / std::abs(integral));
    }
    if (!(integral > 0.0) || worst > 1e-9)
      throw NumericalError(kStage, fmt::format("quadrature did not converge at beta {} (relative error {:.3g})",
                                               beta, worst));
    LaplaceRow row;
    row.beta = beta;
    row.lhs = std::pow(beta / kTwoPi, 0.5 * dims) * integral;
    row.rhs = std::exp(-0.5 * out.log_det);
    row.rel_err = std::abs(row.lhs / row.rhs - 1.0);
    out.rows.push_back(row);
  }
  return out;
}

double continuous_monodromy_det(const TrigPotential& potential, const PhasePoint& start, double t, double dt) {
  if (!(t > 0.0)) throw InputError("continuous_monodromy_det needs t > 0");
  const JacobiFlowResult r = integrate_jacobi(potential, FlowSign::Mechanical, start, t, dt);
  return (r.jacobi.y / t).determinant();
}

Orbit discretized_orbit(const TrigPotential& potential, const PhasePoint& start, double t, int n) {
  if (!(t > 0.0)) throw InputError("discretized_orbit needs t > 0");
  if (n < 1) throw InputError("discretized_orbit needs N >= 1");
  const double tau = t / n;
  const DiscreteLagrangian lag(potential.scaled(tau * tau), zeros(potential.dim()));
  const Vec x1 = start.x + tau * start.v - 0.5 * tau * tau * potential.gradient(start.x);
  return iterate_twist(lag, start.x, x1, n);
}

double discretized_hessian_det(const TrigPotential& potential, const PhasePoint& start, double t, int n) {
  if (n < 8 || !is_power_of_two(n)) throw InputError(fmt::format("discretized_hessian_det: N = {} is not a power of two >= 8", n));
  const double tau = t / n;
  const DiscreteLagrangian lag(potential.scaled(tau * tau), zeros(potential.dim()));
  const Monodromy m = monodromy_map(lag, discretized_orbit(potential, start, t, n));
  if (m.det.conjugate_point) return 0.0;
  return m.det.sign * std::exp(m.det.log_abs - potential.dim() * std::log(static_cast<double>(n)));
}

std::vector<DetConvergenceRow> detconv_table(const TrigPotential& potential, const PhasePoint& start, double t,
                                             const std::vector<int>& ns, double reference_dt) {
  const double reference = continuous_monodromy_det(potential, start, t, reference_dt);
  std::vector<DetConvergenceRow> rows;
  for (const int n : ns) {
    DetConvergenceRow r;
    r.n = n;
    r.discrete = discretized_hessian_det(potential, start, t, n);
    r.continuous = reference;
    r.error = std::abs(r.discrete - reference);
    rows.push_back(r);
  }
  return rows;
}

Vec Trajectory::position(double s) const {
  const int steps = static_cast<int>(samples.size()) - 1;
  s = std::clamp(s, 0.0, t);
  const int k = std::min(static_cast<int>(s / dt), steps - 1);
  const double u = (s - k * dt) / dt;
  const PhasePoint& a = samples[k];
  const PhasePoint& b = samples[k + 1];
  const double u2 = u * u;
  const double u3 = u2 * u;
  return (2 * u3 - 3 * u2 + 1) * a.x + (u3 - 2 * u2 + u) * dt * a.v + (-2 * u3 + 3 * u2) * b.x +
         (u3 - u2) * dt * b.v;
}

Trajectory integrate_trajectory(const TrigPotential& potential, const PhasePoint& start, double t, double dt) {
  if (!(t > 0.0) || !(dt > 0.0)) throw InputError("integrate_trajectory needs t > 0 and dt > 0");
  const int steps = std::max(1, static_cast<int>(std::ceil(t / dt - 1e-9)));
  Trajectory out;
  out.t = t;
  out.dt = t / steps;
  out.samples.reserve(steps + 1);
  out.samples.push_back(start);
  for (int k = 0; k < steps; ++k)
    out.samples.push_back(flow_step(potential, FlowSign::Mechanical, out.samples.back(), out.dt));
  return out;
}

FredholmOperator fredholm_operator(const TrigPotential& potential, const Trajectory& gamma, int modes) {
  if (modes < 8) throw InputError("fredholm_operator needs K >= 8");
  if (gamma.samples.size() < 2) throw InputError("fredholm_operator needs a trajectory");
  const int d = potential.dim();
  const double t = gamma.t;

  // C_j^{ab} = int V''_ab(gamma_s) cos(j pi s / t) ds, j = 0..2K, by composite
  // Gauss-Legendre with at most half a period of the top frequency per panel
  using Rule = boost::math::quadrature::gauss<double, 8>;
  const int panels = 2 * modes + 64;
  const double hw = 0.5 * t / panels;
  std::vector<double> nodes, weights;
  for (int p = 0; p < panels; ++p) {
    const double mid = (2 * p + 1) * hw;
    for (std::size_t i = 0; i < Rule::abscissa().size(); ++i) {
      nodes.push_back(mid + hw * Rule::abscissa()[i]);
      weights.push_back(hw * Rule::weights()[i]);
      nodes.push_back(mid - hw * Rule::abscissa()[i]);
      weights.push_back(hw * Rule::weights()[i]);
    }
  }
  std::vector<Mat> curvature;
  curvature.reserve(nodes.size());
  for (const double s : nodes) curvature.push_back(potential.hessian(gamma.position(s)));

  const int top = 2 * modes;
  std::vector<Mat> c(top + 1, Mat::Zero(d, d));
  for (int j = 0; j <= top; ++j) {
    Mat acc = Mat::Zero(d, d);
    for (std::size_t q = 0; q < nodes.size(); ++q)
      acc += (weights[q] * std::cos(j * kPi * nodes[q] / t)) * curvature[q];
    c[j] = acc;
  }

  FredholmOperator f;
  f.t = t;
  f.modes = modes;
  f.d = d;
  f.matrix = DenseMatrix::Zero(modes * d, modes * d);
  for (int k = 1; k <= modes; ++k) {
    for (int l = 1; l <= modes; ++l) {
      const Mat block = (-t / (kPi * kPi * k * l)) * (c[std::abs(k - l)] - c[k + l]);
      f.matrix.block((k - 1) * d, (l - 1) * d, d, d) = block;
    }
  }
  f.matrix = 0.5 * (f.matrix + f.matrix.transpose()).eval();
  return f;
}

FredholmDet fredholm_det(const TrigPotential& potential, const Trajectory& gamma, int modes) {
  const FredholmOperator f = fredholm_operator(potential, gamma, modes);
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(f.matrix, Eigen::EigenvaluesOnly);
  FredholmDet out;
  out.min_eigenvalue = es.eigenvalues()(0);
  int sign = 1;
  double log_abs = 0.0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    const double factor = 1.0 + es.eigenvalues()(i);
    if (factor <= 0.0) {
      ++out.negative_modes;
      sign = -sign;
    }
    if (factor == 0.0) {
      out.conjugate_passed = true;
      out.value = 0.0;
      return out;
    }
    log_abs += std::log(std::abs(factor));
  }
  out.conjugate_passed = out.negative_modes > 0;
  out.value = sign * std::exp(log_abs);
  return out;
}

double fredholm_limit(const TrigPotential& potential, const Trajectory& gamma, int modes) {
  return 2.0 * fredholm_det(potential, gamma, 2 * modes).value - fredholm_det(potential, gamma, modes).value;
}

int minimum_grid_size(double hbar) {
  if (!(hbar > 0.0)) throw InputError("hbar must be positive");
  return static_cast<int>(std::ceil(8.0 / hbar - 1e-9));
}

SchrodingerResult schrodinger_ground(const TrigPotential& potential, double hbar, const TorusGrid& grid) {
  const int d = grid.dim();
  if (!(hbar > 0.0)) throw InputError("schrodinger_ground needs hbar > 0");
  if (d != potential.dim()) throw InputError("schrodinger_ground: grid and potential dimensions differ");
  if (d > 2) throw InputError("schrodinger_ground supports d = 1, 2");
  const int m = grid.per_dim();
  const double h = grid.spacing();
  if (hbar / h < 8.0 - 1e-9)
    throw InputError(fmt::format("resolution guard: hbar/h = {:.4g} < 8 (need m >= {})", hbar / h,
                                 minimum_grid_size(hbar)));

  const int size = grid.size();
  DenseVector v(size);
  for (int i = 0; i < size; ++i) v[i] = potential.value(grid.node(i));
  const double kinetic = 0.5 * hbar * hbar / (h * h);

  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(static_cast<std::size_t>(size) * (2 * d + 1));
  for (int i = 0; i < size; ++i) {
    entries.emplace_back(i, i, v[i] + 2.0 * d * kinetic);
    int stride = 1;
    for (int a = 0; a < d; ++a) {
      const int coord = (i / stride) % m;
      const int up = i + ((coord + 1) % m - coord) * stride;
      const int down = i + ((coord + m - 1) % m - coord) * stride;
      entries.emplace_back(i, up, -kinetic);
      entries.emplace_back(i, down, -kinetic);
      stride *= m;
    }
  }
  Eigen::SparseMatrix<double> ham(size, size);
  ham.setFromTriplets(entries.begin(), entries.end());

  const double shift = v.minCoeff() - 0.05 * hbar;
  Eigen::SparseMatrix<double> shifted = ham;
  for (int i = 0; i < size; ++i) shifted.coeffRef(i, i) -= shift;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(shifted);
  if (solver.info() != Eigen::Success) throw NumericalError(kStage, "factorization of H - sigma failed");

  SchrodingerResult out{hbar, m, 0.0, GridFunction(grid), 0.0, 0};
  DenseVector psi = DenseVector::Ones(size);
  psi /= psi.norm();
  constexpr int kMaxIterations = 20000;
  for (int it = 1; it <= kMaxIterations; ++it) {
    psi = solver.solve(psi);
    if (solver.info() != Eigen::Success) throw NumericalError(kStage, "inverse iteration solve failed");
    psi /= psi.norm();
    const DenseVector hpsi = ham * psi;
    out.energy = psi.dot(hpsi);
    out.residual = (hpsi - out.energy * psi).cwiseAbs().maxCoeff() / psi.cwiseAbs().maxCoeff();
    out.iterations = it;
    if (out.residual <= 1e-10) break;
  }
  if (out.residual > 1e-9)
    throw NumericalError(kStage, fmt::format("inverse iteration stalled at residual {:.3g}", out.residual));
  if (psi.sum() < 0.0) psi = -psi;
  if (psi.minCoeff() <= 0.0) throw NumericalError(kStage, "ground state is not strictly positive");
  psi /= std::sqrt(grid.cell_volume());
  out.psi = GridFunction(grid, psi);
  return out;
}

ConcentrationResult concentration_experiment(const TrigPotential& potential, const std::vector<Well>& wells,
                                             const std::vector<double>& hbars, int min_grid) {
  if (wells.empty()) throw InputError("concentration_experiment needs at least one well");
  if (hbars.empty()) throw InputError("concentration_experiment needs a nonempty hbar list");
  const int d = potential.dim();
  const int count = static_cast<int>(wells.size());

  ConcentrationResult out;
  std::vector<double> flattest(count);
  for (int w = 0; w < count; ++w) {
    const Vec& c = wells[w].center;
    if (c.size() != d) throw InputError("well center dimension mismatch");
    if (potential.gradient(c).cwiseAbs().maxCoeff() > 1e-6)
      throw InputError(fmt::format("well {} center is not a critical point of V", w));
    Eigen::SelfAdjointEigenSolver<Mat> es(potential.hessian(c), Eigen::EigenvaluesOnly);
    if (es.eigenvalues()(0) <= 1e-8) throw InputError(fmt::format("well {} is not a nondegenerate minimum", w));
    flattest[w] = es.eigenvalues()(0);
    out.lyapunov_sums.push_back(es.eigenvalues().cwiseSqrt().sum());
  }
  out.selected_well = static_cast<int>(std::min_element(out.lyapunov_sums.begin(), out.lyapunov_sums.end()) -
                                       out.lyapunov_sums.begin());

  const int sweeps = static_cast<int>(hbars.size());
  std::vector<std::vector<double>> radii(sweeps, std::vector<double>(count));
  for (int s = 0; s < sweeps; ++s) {
    if (!(hbars[s] > 0.0)) throw InputError("hbar must be positive");
    for (int w = 0; w < count; ++w) {
      if (wells[w].radius > 0.0) {
        radii[s][w] = wells[w].radius;
        continue;
      }
      double r = 3.0 * std::sqrt(hbars[s] / std::sqrt(flattest[w]));
      for (int o = 0; o < count; ++o)
        if (o != w) r = std::min(r, 0.5 * torus_distance(wells[w].center, wells[o].center));
      radii[s][w] = r;
    }
    for (int a = 0; a < count; ++a)
      for (int b = a + 1; b < count; ++b)
        if (torus_distance(wells[a].center, wells[b].center) < radii[s][a] + radii[s][b])
          throw InputError(fmt::format("wells {} and {} overlap at hbar {}", a, b, hbars[s]));
  }

  std::vector<std::vector<double>> masses(sweeps, std::vector<double>(count, 0.0));
  out.energies.assign(sweeps, 0.0);
  std::vector<std::exception_ptr> failures(sweeps);
#pragma omp parallel for schedule(dynamic)
  for (int s = 0; s < sweeps; ++s) {
    try {
      int m = std::max(min_grid, minimum_grid_size(hbars[s]));
      m = (m + 7) / 8 * 8;
      const TorusGrid grid(d, m);
      const SchrodingerResult g = schrodinger_ground(potential, hbars[s], grid);
      out.energies[s] = g.energy;
      for (int i = 0; i < grid.size(); ++i) {
        const Vec node = grid.node(i);
        const double weight = g.psi[i] * g.psi[i] * grid.cell_volume();
        for (int w = 0; w < count; ++w)
          if (torus_distance(node, wells[w].center) < radii[s][w]) masses[s][w] += weight;
      }
    } catch (...) {
      failures[s] = std::current_exception();
    }
  }
  for (const auto& f : failures)
    if (f) std::rethrow_exception(f);

  for (int s = 0; s < sweeps; ++s) {
    double total = 0.0;
    for (int w = 0; w < count; ++w) {
      out.rows.push_back({hbars[s], w, radii[s][w], masses[s][w]});
      total += masses[s][w];
    }
    if (total > 1.0 + 1e-10) throw NumericalError(kStage, fmt::format("well masses sum to {:.17g} > 1", total));
  }
  return out;
}

}  // namespace mather
