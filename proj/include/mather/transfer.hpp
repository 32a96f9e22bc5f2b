#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <vector>

#include "mather/grid.hpp"
#include "mather/kernels.hpp"
#include "mather/lagrangian.hpp"
#include "mather/orbit.hpp"

namespace mather {

/// K_ij = h^d sum_{|n|_inf <= R} exp(-beta L(x_i, x_j + n)), stored as
/// K = scaled * exp(log_scale) so that large beta does not overflow.
struct PeriodizedKernel {
  kernels::RowMatrix scaled;
  double log_scale = 0.0;
  double beta = 0.0;
  int radius = 0;
  TorusGrid grid;
  std::shared_ptr<const Lagrangian> lag;

  double log_entry(int i, int j) const { return std::log(scaled(i, j)) + log_scale; }
};

/// Smallest admissible lattice radius for the Gaussian tail: ceil(1 + 6/sqrt(beta)).
int minimal_radius(double beta);
/// minimal_radius plus a drift margin ceil(|omega| + max|V'|).
int default_radius(const DiscreteLagrangian& lag, double beta);
/// max(128, 8 sqrt(beta)) nodes per dimension.
int default_grid_size(double beta);

PeriodizedKernel build_kernel(const Lagrangian& lag, const TorusGrid& grid, double beta, int radius,
                              kernels::Exec exec = kernels::Exec::Parallel);
PeriodizedKernel build_kernel(const DiscreteLagrangian& lag, const TorusGrid& grid, double beta,
                              kernels::Exec exec = kernels::Exec::Parallel);

struct EigenOptions {
  double residual_tol = 1e-10;
  double increment_tol = 1e-12;
  int max_iterations = 100000;
  kernels::Exec exec = kernels::Exec::Parallel;
};

struct TransferSpectrum {
  double rho = 0.0;  // Perron root of K
  double log_rho = 0.0;
  double lambda = 0.0;  // -log rho
  double rho_left = 0.0;  // Perron root found from K^T
  GridFunction psi;
  GridFunction psi_star;
  double residual = 0.0;  // |K psi - rho psi|_inf / (rho |psi|_inf)
  double residual_star = 0.0;
  int iterations = 0;
};

/// Power iteration on K (psi) and on K^T, the kernel of the reversed lagrangian (psi*).
TransferSpectrum principal_eigenpair(const PeriodizedKernel& kernel, const EigenOptions& opt = {});

/// mu_i proportional to psi_i psi*_i h^d, summing to one.
GridFunction gibbs_marginal(const TransferSpectrum& spectrum);

struct MarkovChain {
  kernels::RowMatrix p;
  TorusGrid grid;
  double max_row_error = 0.0;  // max_i |sum_j P_ij - 1|
};

/// Doob transform P_ij = K_ij psi_j / (rho psi_i).
MarkovChain markov_kernel(const TransferSpectrum& spectrum, const PeriodizedKernel& kernel);

/// |mu P - mu|_1
double stationarity_residual(const MarkovChain& chain, const GridFunction& mu);
/// Left Perron vector of P by power iteration.
GridFunction stationary_distribution(const MarkovChain& chain, double tol = 1e-14, int max_iterations = 200000);
/// (1 - eps) P + eps/N, still row-stochastic with positive entries.
MarkovChain mix_uniform(const MarkovChain& chain, double eps);

struct ChainSample {
  std::vector<int> nodes;
  Orbit path;  // lifted positions, path.points[k] = node(nodes[k]) + integer shift
};

/// Start node drawn from `start`, next node from row P_i, then the lattice
/// translate with weight exp(-beta L(x_i, x_j + n)).
ChainSample sample_chain(const MarkovChain& chain, const PeriodizedKernel& kernel, const GridFunction& start,
                         int n_steps, std::uint64_t seed);

/// sum_i mu_i sum_j P_ij [-(1/beta) log(K_ij/h^d) + (1/beta) log(P_ij/h^d)];
/// equals -(log rho)/beta for the Doob chain and its stationary law.
double free_energy(const PeriodizedKernel& kernel, const MarkovChain& chain, const GridFunction& mu);

struct ViscousPair {
  GridFunction u_beta;  // -(1/beta) log psi*, min 0
  GridFunction v_beta;  // -(1/beta) log psi, min 0
};
ViscousPair viscous_solutions(const TransferSpectrum& spectrum, double beta);

/// Mass of mu within sup-distance r of x (mod 1).
double mass_near(const GridFunction& mu, const Vec& x, double r);

}  // namespace mather
