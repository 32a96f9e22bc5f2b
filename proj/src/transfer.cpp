#include "mather/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "mather/random.hpp"

namespace mather {

namespace {

double inf_norm(const DenseVector& v) { return v.lpNorm<Eigen::Infinity>(); }

struct PowerResult {
  DenseVector v;
  double rho = 0.0;
  double residual = 0.0;
  int iterations = 0;
};

template <class Apply>
PowerResult power_iterate(Apply apply, Eigen::Index n, const EigenOptions& opt, const char* stage) {
  DenseVector v = DenseVector::Ones(n);
  DenseVector y;
  double prev_rho = 0.0;
  double prev_res = 1.0;
  double rate = 0.0;
  for (int it = 1; it <= opt.max_iterations; ++it) {
    apply(v, y);
    const double rho = v.dot(y) / v.dot(v);
    const double res = inf_norm(y - rho * v) / (rho * inf_norm(v));
    if (it > 1 && prev_res > 0.0) rate = res / prev_res;
    if (res <= opt.residual_tol && std::abs(rho - prev_rho) <= opt.increment_tol * rho) return {v, rho, res, it};
    prev_rho = rho;
    prev_res = res;
    v = y / inf_norm(y);
  }
  throw NumericalError(stage, fmt::format("power iteration did not converge in {} iterations; residual {:.3g}, "
                                          "estimated second/first eigenvalue ratio {:.6f}",
                                          opt.max_iterations, prev_res, rate));
}

void require_positive(const DenseVector& v, const char* what) {
  if (!(v.minCoeff() > 0.0)) throw NumericalError("transfer", fmt::format("{} is not strictly positive", what));
}

}  // namespace

int minimal_radius(double beta) { return static_cast<int>(std::ceil(1.0 + 6.0 / std::sqrt(beta))); }

int default_radius(const DiscreteLagrangian& lag, double beta) {
  return minimal_radius(beta) +
         static_cast<int>(std::ceil(lag.omega().lpNorm<Eigen::Infinity>() + lag.potential().gradient_bound()));
}

int default_grid_size(double beta) { return std::max(128, static_cast<int>(std::ceil(8.0 * std::sqrt(beta)))); }

PeriodizedKernel build_kernel(const Lagrangian& lag, const TorusGrid& grid, double beta, int radius,
                              kernels::Exec exec) {
  if (!(beta > 0.0)) throw InputError("beta must be positive");
  if (grid.dim() != lag.dim()) throw InputError("grid and lagrangian dimensions differ");
  if (radius < minimal_radius(beta))
    throw InputError(fmt::format("lattice radius {} below the Gaussian tail bound {} for beta = {}", radius,
                                 minimal_radius(beta), beta));

  const int n = grid.size();
  const auto shifts = lattice_translates(grid.dim(), radius);
  std::vector<Vec> nodes(n);
  for (int i = 0; i < n; ++i) nodes[i] = grid.node(i);
  const double log_cell = std::log(grid.cell_volume());

  PeriodizedKernel k{kernels::RowMatrix(n, n), 0.0, beta, radius, grid, lag.clone()};
  // log K_ij as a log-sum-exp over translates.
  kernels::fill(
      k.scaled,
      [&](int i, int j) {
        thread_local std::vector<double> buf;
        buf.resize(shifts.size());
        double lmin = std::numeric_limits<double>::infinity();
        for (std::size_t s = 0; s < shifts.size(); ++s) {
          buf[s] = lag.value(nodes[i], nodes[j] + shifts[s]);
          lmin = std::min(lmin, buf[s]);
        }
        double sum = 0.0;
        for (std::size_t s = 0; s < shifts.size(); ++s) sum += std::exp(-beta * (buf[s] - lmin));
        return log_cell - beta * lmin + std::log(sum);
      },
      exec);
  k.log_scale = k.scaled.maxCoeff();
  k.scaled = (k.scaled.array() - k.log_scale).exp().matrix();
  if (!(k.scaled.minCoeff() > 0.0))
    throw NumericalError("transfer", "kernel entries underflow; beta too large for this potential/grid");
  return k;
}

PeriodizedKernel build_kernel(const DiscreteLagrangian& lag, const TorusGrid& grid, double beta,
                              kernels::Exec exec) {
  if (!(beta > 0.0)) throw InputError("beta must be positive");
  return build_kernel(static_cast<const Lagrangian&>(lag), grid, beta, default_radius(lag, beta), exec);
}

TransferSpectrum principal_eigenpair(const PeriodizedKernel& kernel, const EigenOptions& opt) {
  const auto& k = kernel.scaled;
  const auto right = power_iterate([&](const DenseVector& v, DenseVector& y) { kernels::matvec(k, v, y, opt.exec); },
                                   k.rows(), opt, "transfer");
  const auto left = power_iterate(
      [&](const DenseVector& v, DenseVector& y) { kernels::left_matvec(k, v, y, opt.exec); }, k.rows(), opt,
      "transfer");
  require_positive(right.v, "psi");
  require_positive(left.v, "psi*");
  if (std::abs(right.rho - left.rho) > 1e-9 * right.rho)
    throw NumericalError("transfer", fmt::format("Perron roots of K and K^T disagree: {:.17g} vs {:.17g}",
                                                 right.rho, left.rho));
  TransferSpectrum s{0.0, 0.0, 0.0, 0.0, GridFunction(kernel.grid, right.v / inf_norm(right.v)),
                     GridFunction(kernel.grid, left.v / inf_norm(left.v)), right.residual, left.residual,
                     right.iterations + left.iterations};
  s.log_rho = std::log(right.rho) + kernel.log_scale;
  s.rho = std::exp(s.log_rho);
  s.rho_left = std::exp(std::log(left.rho) + kernel.log_scale);
  s.lambda = -s.log_rho;
  return s;
}

GridFunction gibbs_marginal(const TransferSpectrum& spectrum) {
  DenseVector w = spectrum.psi.values.cwiseProduct(spectrum.psi_star.values) * spectrum.psi.grid.cell_volume();
  w /= w.sum();
  return GridFunction(spectrum.psi.grid, w);
}

MarkovChain markov_kernel(const TransferSpectrum& spectrum, const PeriodizedKernel& kernel) {
  const int n = kernel.grid.size();
  const double rho_scaled = std::exp(spectrum.log_rho - kernel.log_scale);
  const DenseVector& psi = spectrum.psi.values;
  MarkovChain c{kernels::RowMatrix(n, n), kernel.grid, 0.0};
  kernels::fill(c.p, [&](int i, int j) { return kernel.scaled(i, j) * psi[j] / (rho_scaled * psi[i]); });
  for (int i = 0; i < n; ++i) c.max_row_error = std::max(c.max_row_error, std::abs(c.p.row(i).sum() - 1.0));
  return c;
}

double stationarity_residual(const MarkovChain& chain, const GridFunction& mu) {
  DenseVector next;
  kernels::left_matvec(chain.p, mu.values, next);
  return (next - mu.values).lpNorm<1>();
}

GridFunction stationary_distribution(const MarkovChain& chain, double tol, int max_iterations) {
  const Eigen::Index n = chain.p.rows();
  DenseVector mu = DenseVector::Constant(n, 1.0 / static_cast<double>(n));
  DenseVector next;
  for (int it = 0; it < max_iterations; ++it) {
    kernels::left_matvec(chain.p, mu, next);
    next /= next.sum();
    const double change = (next - mu).lpNorm<1>();
    mu.swap(next);
    if (change <= tol) return GridFunction(chain.grid, mu);
  }
  throw NumericalError("transfer", "stationary distribution did not converge");
}

MarkovChain mix_uniform(const MarkovChain& chain, double eps) {
  MarkovChain out = chain;
  out.p = (1.0 - eps) * chain.p.array() + eps / static_cast<double>(chain.p.cols());
  return out;
}

ChainSample sample_chain(const MarkovChain& chain, const PeriodizedKernel& kernel, const GridFunction& start,
                         int n_steps, std::uint64_t seed) {
  if (n_steps < 0) throw InputError("n_steps must be nonnegative");
  const int n = chain.grid.size();
  const int d = chain.grid.dim();
  const auto shifts = lattice_translates(d, kernel.radius);
  Rng rng(seed);

  auto draw = [&rng](const std::vector<double>& cdf) {
    const double u = rng.uniform() * cdf.back();
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    return static_cast<int>(std::min<std::ptrdiff_t>(it - cdf.begin(), static_cast<std::ptrdiff_t>(cdf.size()) - 1));
  };
  auto cumulative = [](auto&& weights, int count) {
    std::vector<double> cdf(count);
    double s = 0.0;
    for (int j = 0; j < count; ++j) cdf[j] = (s += weights(j));
    return cdf;
  };

  std::vector<std::vector<double>> row_cdf(n);
  const auto start_cdf = cumulative([&](int j) { return start.values[j]; }, n);

  ChainSample out;
  out.nodes.reserve(static_cast<std::size_t>(n_steps) + 1);
  out.path.points.reserve(static_cast<std::size_t>(n_steps) + 1);
  int i = draw(start_cdf);
  Vec lift = chain.grid.node(i);
  out.nodes.push_back(i);
  out.path.points.push_back(lift);
  std::vector<double> w(shifts.size());
  for (int step = 0; step < n_steps; ++step) {
    if (row_cdf[i].empty()) row_cdf[i] = cumulative([&](int j) { return chain.p(i, j); }, n);
    const int j = draw(row_cdf[i]);
    const Vec xi = chain.grid.node(i);
    const Vec xj = chain.grid.node(j);
    double lmin = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < shifts.size(); ++s) {
      w[s] = kernel.lag->value(xi, xj + shifts[s]);
      lmin = std::min(lmin, w[s]);
    }
    const auto shift_cdf = cumulative(
        [&](int s) { return std::exp(-kernel.beta * (w[s] - lmin)); }, static_cast<int>(shifts.size()));
    const int s = draw(shift_cdf);
    lift += xj + shifts[s] - xi;
    i = j;
    out.nodes.push_back(i);
    out.path.points.push_back(lift);
  }
  return out;
}

double free_energy(const PeriodizedKernel& kernel, const MarkovChain& chain, const GridFunction& mu) {
  const int n = chain.grid.size();
  double f = 0.0;
  for (int i = 0; i < n; ++i) {
    double row = 0.0;
    for (int j = 0; j < n; ++j) {
      const double p = chain.p(i, j);
      if (p > 0.0) row += p * (std::log(p) - kernel.log_entry(i, j));
    }
    f += mu.values[i] * row;
  }
  return f / kernel.beta;
}

ViscousPair viscous_solutions(const TransferSpectrum& spectrum, double beta) {
  if (!(beta > 0.0)) throw InputError("beta must be positive");
  auto potential = [beta](const GridFunction& psi) {
    DenseVector u = -psi.values.array().log() / beta;
    u.array() -= u.minCoeff();
    return GridFunction(psi.grid, u);
  };
  return {potential(spectrum.psi_star), potential(spectrum.psi)};
}

double mass_near(const GridFunction& mu, const Vec& x, double r) {
  double m = 0.0;
  for (int i = 0; i < mu.grid.size(); ++i)
    if (torus_distance(mu.grid.node(i), x) <= r + 1e-12) m += mu.values[i];
  return m;
}

}  // namespace mather
