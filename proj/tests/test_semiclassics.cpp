#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "mather/hessian.hpp"
#include "mather/semiclassics.hpp"
#include "mather/transfer.hpp"
#include "oracles.hpp"

using namespace mather;
using oracle::vec;

namespace {

// V = a cos 2 pi x (+ a cos 2 pi y), so V''(0) = q I and x = 0 is an equilibrium
TrigPotential constant_curvature(double q, int d = 1) {
  const double a = -q / (4.0 * kPi * kPi);
  if (d == 1) return cosine_potential(a);
  return TrigPotential(2, {{{1, 0}, a, 0.0}, {{0, 1}, a, 0.0}});
}

double sinc_det(double q, double t) {
  if (q > 0) return std::sin(std::sqrt(q) * t) / (std::sqrt(q) * t);
  if (q < 0) return std::sinh(std::sqrt(-q) * t) / (std::sqrt(-q) * t);
  return 1.0;
}

PhasePoint at_rest(int d) { return {zeros(d), zeros(d)}; }

TrigPotential smooth_potential() {
  return TrigPotential(1, {{{1, 0}, 0.03, -0.02}, {{2, 0}, 0.01, 0.015}});
}

TrigPotential smooth_potential_2d() {
  return TrigPotential(2, {{{1, 0}, 0.03, -0.01}, {{0, 1}, -0.02, 0.02}, {{1, 1}, 0.01, 0.0}});
}

// dense periodic -hbar^2/2 second difference + V, smallest eigenpair
std::pair<double, Eigen::VectorXd> dense_ground(const TrigPotential& v, double hbar, int m) {
  const double h = 1.0 / m;
  const double k = 0.5 * hbar * hbar / (h * h);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, m);
  for (int i = 0; i < m; ++i) {
    a(i, i) = 2 * k + v.value(vec(i * h));
    a(i, (i + 1) % m) -= k;
    a(i, (i + m - 1) % m) -= k;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  Eigen::VectorXd psi = es.eigenvectors().col(0);
  if (psi.sum() < 0) psi = -psi;
  return {es.eigenvalues()(0), psi / std::sqrt(h)};
}

// a1 cos 2 pi x + a2 cos 4 pi x - a1 cos 6 pi x shifted by 1/2: odd modes flip sign
TrigPotential half_shift(const TrigPotential& v) {
  auto modes = v.modes();
  for (auto& m : modes)
    if (m.k[0] % 2 != 0) {
      m.a = -m.a;
      m.b = -m.b;
    }
  return TrigPotential(1, modes);
}

}  // namespace

TEST_CASE("continuous determinant: free and constant curvature closed forms") {
  std::mt19937_64 g(11);
  for (int d = 1; d <= 2; ++d) {
    const PhasePoint s{oracle::random_point(g, d), oracle::random_point(g, d)};
    CHECK(std::abs(continuous_monodromy_det(TrigPotential::zero(d), s, 1.7) - 1.0) < 1e-12);
  }
  for (double q : {2.0, -3.0, 5.0})
    for (double t : {0.7, 1.5}) {
      CHECK(std::abs(continuous_monodromy_det(constant_curvature(q), at_rest(1), t, 1e-4) - sinc_det(q, t)) < 1e-7);
      CHECK(std::abs(continuous_monodromy_det(constant_curvature(q, 2), at_rest(2), t, 1e-4) -
                     std::pow(sinc_det(q, t), 2)) < 1e-7);
    }
  const double q = 4.0;
  CHECK(std::abs(continuous_monodromy_det(constant_curvature(q), at_rest(1), kPi / std::sqrt(q), 1e-4)) < 1e-7);
}

TEST_CASE("discretized determinant: exact when free, second order otherwise") {
  std::mt19937_64 g(12);
  for (int d = 1; d <= 2; ++d) {
    const PhasePoint s{oracle::random_point(g, d), oracle::random_point(g, d)};
    for (int n : {8, 64, 1024}) CHECK(std::abs(discretized_hessian_det(TrigPotential::zero(d), s, 1.3, n) - 1.0) < 1e-14 * n);
  }
  CHECK_THROWS_AS(discretized_hessian_det(TrigPotential::zero(1), at_rest(1), 1.0, 48), InputError);
  CHECK_THROWS_AS(discretized_hessian_det(TrigPotential::zero(1), at_rest(1), 1.0, 4), InputError);

  for (double q : {3.0, -2.0}) {
    double prev = 1e300;
    for (int n : {64, 128, 256}) {
      const double err = std::abs(discretized_hessian_det(constant_curvature(q), at_rest(1), 1.2, n) - sinc_det(q, 1.2));
      CHECK(err <= 0.5 * prev);
      prev = err;
    }
    CHECK(prev < 1e-4);
  }

  // generic orbits against a fine continuous reference
  const PhasePoint s1{vec(0.1), vec(0.8)};
  const double ref1 = continuous_monodromy_det(smooth_potential(), s1, 2.0, 1e-5);
  double prev = 1e300;
  for (int n : {64, 128, 256, 512, 1024}) {
    const double err = std::abs(discretized_hessian_det(smooth_potential(), s1, 2.0, n) - ref1);
    CHECK(err <= 0.5 * prev);
    prev = err;
  }
  CHECK(prev < 1e-5);
  const PhasePoint s2{vec(0.2, -0.3), vec(0.5, 0.4)};
  const double ref2 = continuous_monodromy_det(smooth_potential_2d(), s2, 1.5, 1e-5);
  CHECK(std::abs(discretized_hessian_det(smooth_potential_2d(), s2, 1.5, 256) - ref2) <=
        0.5 * std::abs(discretized_hessian_det(smooth_potential_2d(), s2, 1.5, 128) - ref2));
}

TEST_CASE("discretized determinant equals the prefactor times the scaled action Hessian") {
  const PhasePoint s{vec(0.1), vec(0.8)};
  const int n = 64;
  const double tau = 2.0 / n;
  const Orbit gamma = discretized_orbit(smooth_potential(), s, 2.0, n);
  REQUIRE(gamma.is_orbit);
  const DiscreteLagrangian lag(smooth_potential().scaled(tau * tau), 0.0);
  const LogDet h = block_determinant(assemble_hessian(lag, gamma));
  const LogDet p = monodromy_prefactor(lag, gamma);
  const double via_hessian = p.sign * h.sign * std::exp(p.log_abs + h.log_abs - std::log(n));
  CHECK(std::abs(via_hessian - discretized_hessian_det(smooth_potential(), s, 2.0, n)) < 1e-10);
}

TEST_CASE("fredholm determinant: sine basis product formula") {
  const Trajectory free = integrate_trajectory(TrigPotential::zero(1), {vec(0.3), vec(0.4)}, 1.0);
  const FredholmDet f0 = fredholm_det(TrigPotential::zero(1), free, 16);
  CHECK(f0.value == 1.0);
  CHECK(f0.negative_modes == 0);
  CHECK_THROWS_AS(fredholm_det(TrigPotential::zero(1), free, 4), InputError);

  for (double q : {2.0, -5.0})
    for (double t : {1.0, 1.8}) {
      const int k = 64;
      double product = 1.0;
      for (int j = 1; j <= k; ++j) product *= 1.0 - q * t * t / (j * kPi * j * kPi);
      const Trajectory gamma = integrate_trajectory(constant_curvature(q), at_rest(1), t);
      CHECK(std::abs(fredholm_det(constant_curvature(q), gamma, k).value - product) < 1e-10 * std::abs(product));
      // 2D: the square
      const Trajectory gamma2 = integrate_trajectory(constant_curvature(q, 2), at_rest(2), t);
      CHECK(std::abs(fredholm_det(constant_curvature(q, 2), gamma2, k).value - product * product) <
            1e-10 * product * product);
      // the extrapolated tail leaves ~ q t^2 / (4 K^2)
      const double raw = std::abs(fredholm_det(constant_curvature(q), gamma, 512).value - sinc_det(q, t));
      const double limit = std::abs(fredholm_limit(constant_curvature(q), gamma, 256) - sinc_det(q, t));
      CHECK(limit < 0.1 * raw);
      CHECK(limit < 1e-3);
    }

  const FredholmOperator op = fredholm_operator(smooth_potential(), integrate_trajectory(smooth_potential(), {vec(0.1), vec(0.8)}, 2.0), 32);
  CHECK((op.matrix - op.matrix.transpose()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("fredholm determinant converges in K for smooth curvature") {
  const Trajectory gamma = integrate_trajectory(smooth_potential(), {vec(0.1), vec(0.8)}, 2.0);
  const double d256 = fredholm_det(smooth_potential(), gamma, 256).value;
  const double d512 = fredholm_det(smooth_potential(), gamma, 512).value;
  CHECK(std::abs(d512 - d256) < 1e-4);
}

TEST_CASE("three determinants agree on smooth orbits") {
  struct Case {
    TrigPotential v;
    PhasePoint s;
    double t;
  };
  const std::vector<Case> cases = {
      {smooth_potential(), {vec(0.1), vec(0.8)}, 2.0},
      {smooth_potential(), {vec(-0.4), vec(0.2)}, 1.0},
      {cosine_potential(0.05, -0.02), {vec(0.25), vec(-0.6)}, 2.0},
      {smooth_potential_2d(), {vec(0.2, -0.3), vec(0.5, 0.4)}, 1.5},
  };
  for (const auto& c : cases) {
    const double cont = continuous_monodromy_det(c.v, c.s, c.t, 1e-4);
    const double disc = discretized_hessian_det(c.v, c.s, c.t, 1024);
    const double fred = fredholm_limit(c.v, integrate_trajectory(c.v, c.s, c.t, 1e-4), 256);
    CHECK(std::abs(cont - disc) < 1e-3);
    CHECK(std::abs(cont - fred) < 1e-3);
    CHECK(std::abs(disc - fred) < 1e-3);
  }
}

TEST_CASE("fredholm sign flips exactly where the Jacobi determinant crosses zero") {
  const double t = 1.0;
  int flips_fred = 0, flips_cont = 0;
  int last_fred = 1, last_cont = 1;
  for (int i = 0; i <= 40; ++i) {
    const double q = kPi * kPi * (0.8 + 0.01 * i + 0.005);
    const TrigPotential v = constant_curvature(q);
    const FredholmDet f = fredholm_det(v, integrate_trajectory(v, at_rest(1), t), 64);
    const double c = continuous_monodromy_det(v, at_rest(1), t);
    const int sf = f.value > 0 ? 1 : -1;
    const int sc = c > 0 ? 1 : -1;
    CHECK(sf == sc);
    CHECK(f.conjugate_passed == (q > kPi * kPi));
    flips_fred += sf != last_fred;
    flips_cont += sc != last_cont;
    last_fred = sf;
    last_cont = sc;
  }
  CHECK(flips_fred == 1);
  CHECK(flips_cont == 1);
}

TEST_CASE("laplace: gaussian cases are exact") {
  SUBCASE("free, x = y, N = 2") {
    const DiscreteLagrangian lag(TrigPotential::zero(1), 0.0);
    const LaplaceTable t = laplace_validate(lag, vec(0.3), vec(0.3), 2, {1.0, 10.0, 100.0, 1000.0, 1e4});
    for (const auto& r : t.rows) {
      CHECK(std::abs(r.rhs - std::sqrt(0.5)) < 1e-14);
      CHECK(r.rel_err <= 1e-8);
    }
  }
  SUBCASE("free with rotation number, N = 3 and d = 2") {
    const DiscreteLagrangian lag1(TrigPotential::zero(1), 0.4);
    for (const auto& r : laplace_validate(lag1, vec(0.1), vec(1.3), 3, {5.0, 50.0, 500.0}).rows) CHECK(r.rel_err <= 1e-8);
    const DiscreteLagrangian lag2(TrigPotential::zero(2), vec(0.2, -0.1));
    for (const auto& r : laplace_validate(lag2, vec(0.1, 0.2), vec(0.7, -0.4), 2, {5.0, 50.0, 500.0}).rows)
      CHECK(r.rel_err <= 1e-8);
  }
}

TEST_CASE("laplace: small potential, error decreasing in beta") {
  const DiscreteLagrangian lag(cosine_potential(0.01), 0.0);
  const Vec x = vec(0.1), y = vec(0.35);
  const LaplaceTable t = laplace_validate(lag, x, y, 2, {100.0, 200.0, 400.0});

  // the middle point by bisection on the Euler-Lagrange equation, A'' by differences
  auto f = [&](double u) { return lag.value(x, vec(u)) + lag.value(vec(u), y); };
  auto df = [&](double u) { return oracle::central_diff(f, u, 1e-5); };
  double lo = 0.0, hi = 0.5;
  for (int i = 0; i < 80; ++i) (df(0.5 * (lo + hi)) > 0 ? hi : lo) = 0.5 * (lo + hi);
  const double mid = 0.5 * (lo + hi);
  const double curv = (f(mid + 1e-4) - 2 * f(mid) + f(mid - 1e-4)) / 1e-8;
  CHECK(std::abs(t.minimizer.points[1][0] - mid) < 1e-8);
  CHECK(std::abs(t.action - f(mid)) < 1e-12);
  CHECK(std::abs(std::exp(-0.5 * t.log_det) - 1.0 / std::sqrt(curv)) < 1e-6);

  for (const auto& r : t.rows) {
    // left side by a plain midpoint sum on a wide window
    const int cells = 200000;
    const double a = mid - 1.0, b = mid + 1.0, h = (b - a) / cells;
    double sum = 0.0;
    for (int i = 0; i < cells; ++i) sum += std::exp(-r.beta * (f(a + (i + 0.5) * h) - f(mid)));
    CHECK(std::abs(r.lhs - std::sqrt(r.beta / kTwoPi) * sum * h) < 1e-9);
  }
  CHECK(t.rows[0].rel_err <= 0.05);
  CHECK(t.rows[1].rel_err < t.rows[0].rel_err);
  CHECK(t.rows[2].rel_err < t.rows[1].rel_err);

  const DiscreteLagrangian lag3(cosine_potential(0.02, 0.01), 0.1);
  const LaplaceTable t3 = laplace_validate(lag3, vec(0.0), vec(0.5), 3, {50.0, 100.0, 200.0, 400.0});
  for (std::size_t i = 1; i < t3.rows.size(); ++i) CHECK(t3.rows[i].rel_err < t3.rows[i - 1].rel_err);
}

TEST_CASE("laplace: input checks") {
  const DiscreteLagrangian lag(TrigPotential::zero(2), 0.0);
  CHECK_THROWS_AS(laplace_validate(lag, vec(0, 0), vec(0, 0), 3, {10.0}), InputError);
  CHECK_THROWS_AS(laplace_validate(lag, vec(0, 0), vec(0, 0), 2, {}), InputError);
}

TEST_CASE("schrodinger: free particle and the resolution guard") {
  const SchrodingerResult r = schrodinger_ground(TrigPotential::zero(1), 0.1, TorusGrid(1, 80));
  CHECK(std::abs(r.energy) < 1e-10);
  CHECK((r.psi.values.array() - 1.0).abs().maxCoeff() < 1e-8);
  CHECK_THROWS_AS(schrodinger_ground(TrigPotential::zero(1), 0.1, TorusGrid(1, 79)), InputError);
  CHECK(minimum_grid_size(0.01) == 800);
}

TEST_CASE("schrodinger: dense eigensolve, invariants, shift linearity") {
  const TrigPotential v = two_maxima_potential().negated();
  for (double hbar : {0.1, 0.05}) {
    const int m = minimum_grid_size(hbar);
    const SchrodingerResult r = schrodinger_ground(v, hbar, TorusGrid(1, m));
    const auto [e, psi] = dense_ground(v, hbar, m);
    CHECK(std::abs(r.energy - e) < 1e-10);
    CHECK((r.psi.values - psi).cwiseAbs().maxCoeff() < 1e-7);
    CHECK(r.psi.values.minCoeff() > 0.0);
    CHECK(std::abs(r.psi.values.squaredNorm() / m - 1.0) < 1e-10);
    CHECK(r.residual <= 1e-9);
    // even potential: psi(x_i) = psi(x_{m-i})
    double asym = 0.0;
    for (int i = 1; i < m; ++i) asym = std::max(asym, std::abs(r.psi[i] - r.psi[m - i]));
    CHECK(asym < 1e-8);

    // a k = 0 mode adds a constant: energy moves by exactly that, psi is unchanged
    auto modes = v.modes();
    modes.push_back({{0, 0}, 0.3, 0.0});
    const SchrodingerResult up = schrodinger_ground(TrigPotential(1, modes), hbar, TorusGrid(1, m));
    CHECK(std::abs(up.energy - r.energy - 0.3) < 1e-10);
    CHECK((up.psi.values - r.psi.values).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("schrodinger: separable 2D spectrum is the sum of 1D spectra") {
  const double hbar = 0.2;
  const int m = minimum_grid_size(hbar);
  const TrigPotential vx = cosine_potential(0.05);
  const TrigPotential vy = cosine_potential(-0.03, 0.02);
  const TrigPotential v2(2, {{{1, 0}, 0.05, 0.0}, {{0, 1}, -0.03, 0.0}, {{0, 2}, 0.02, 0.0}});
  const double e = schrodinger_ground(v2, hbar, TorusGrid(2, m)).energy;
  const double ex = schrodinger_ground(vx, hbar, TorusGrid(1, m)).energy;
  const double ey = schrodinger_ground(vy, hbar, TorusGrid(1, m)).energy;
  CHECK(std::abs(e - ex - ey) < 1e-10);
}

TEST_CASE("schrodinger: harmonic energy with O(hbar^2) error") {
  // a cos 2 pi x: minimum at 1/2 with V'' = 4 pi^2 a = 16, depth 2a well above hbar sqrt(w) / 2
  const double w = 16.0;
  const double a = w / (4.0 * kPi * kPi);
  const TrigPotential v = cosine_potential(a);
  std::vector<double> errs;
  for (double hbar : {0.05, 0.02}) {
    const SchrodingerResult r = schrodinger_ground(v, hbar, TorusGrid(1, minimum_grid_size(hbar)));
    errs.push_back(r.energy - (-a + 0.5 * hbar * std::sqrt(w)));
    // first order in the quartic term: -(2 pi)^2 w u^4 / 24 with <u^4> = 3 hbar^2 / (4 w)
    CHECK(errs.back() / (hbar * hbar) == doctest::Approx(-kPi * kPi / 8.0).epsilon(0.15));
  }
  const double ratio = errs[0] / errs[1];
  CHECK(ratio > 0.8 * 6.25);
  CHECK(ratio < 1.2 * 6.25);
}

TEST_CASE("concentration: flat well wins, symmetric wells split evenly, relabeling swaps") {
  const TrigPotential v = two_maxima_potential().negated();
  const std::vector<Well> wells = {{vec(0.0)}, {vec(0.5)}};
  const std::vector<double> hbars = {0.04, 0.02, 0.01};
  const ConcentrationResult r = concentration_experiment(v, wells, hbars);
  CHECK(r.selected_well == 0);
  CHECK(std::abs(r.lyapunov_sums[0] - 1.0) < 1e-12);
  CHECK(std::abs(r.lyapunov_sums[1] - 2.0) < 1e-12);
  REQUIRE(r.rows.size() == 6);
  for (std::size_t s = 1; s < hbars.size(); ++s) CHECK(r.rows[2 * s].mass > r.rows[2 * (s - 1)].mass);
  CHECK(r.rows[4].mass >= 0.99);
  // 3 sqrt(hbar) = 0.3 for the flat well, capped at half the distance between centers
  CHECK(std::abs(r.rows[4].radius - 0.25) < 1e-12);
  CHECK(std::abs(r.rows[5].radius - 3.0 * std::sqrt(0.01 / 2.0)) < 1e-12);
  const double depth = v.value(vec(0.0));
  CHECK(std::abs(r.energies[2] - (depth + 0.5 * 0.01)) < 0.1 * 0.5 * 0.01);

  const ConcentrationResult swapped = concentration_experiment(half_shift(v), wells, hbars);
  CHECK(swapped.selected_well == 1);
  for (std::size_t s = 0; s < hbars.size(); ++s) {
    CHECK(std::abs(swapped.rows[2 * s + 1].mass - r.rows[2 * s].mass) < 1e-8);
    CHECK(std::abs(swapped.rows[2 * s].mass - r.rows[2 * s + 1].mass) < 1e-8);
  }

  // -a cos 4 pi x: equal wells at 0 and 1/2
  const ConcentrationResult even = concentration_experiment(cosine_potential(0.0, -0.02), wells, {0.05, 0.02});
  for (std::size_t i = 0; i < even.rows.size(); i += 2) {
    CHECK(std::abs(even.rows[i].mass - even.rows[i + 1].mass) < 1e-6);
    CHECK(std::abs(even.rows[i].mass - 0.5) < 0.01);
  }
}

TEST_CASE("concentration: input checks") {
  const TrigPotential v = two_maxima_potential().negated();
  CHECK_THROWS_AS(concentration_experiment(v, {{vec(0.0), 0.3}, {vec(0.5), 0.3}}, {0.02}), InputError);
  CHECK_THROWS_AS(concentration_experiment(v, {{vec(0.2)}}, {0.02}), InputError);
  CHECK_THROWS_AS(concentration_experiment(two_maxima_potential(), {{vec(0.0)}}, {0.02}), InputError);
}

TEST_CASE("gibbs and semiclassical sides select the same curvature") {
  const TrigPotential v = two_maxima_potential();
  const DiscreteLagrangian lag(v, 0.0);
  const double beta = 200.0;
  const TorusGrid grid(1, default_grid_size(beta));
  const TransferSpectrum spec = principal_eigenpair(build_kernel(lag, grid, beta));
  const GridFunction mu = gibbs_marginal(spec);
  const double near_flat = mass_near(mu, vec(0.0), 0.1);
  const double near_sharp = mass_near(mu, vec(0.5), 0.1);
  const ConcentrationResult q = concentration_experiment(v.negated(), {{vec(0.0)}, {vec(0.5)}}, {0.01});
  CHECK(near_flat > near_sharp);
  CHECK(q.rows[0].mass > q.rows[1].mass);
  // the site carrying the Gibbs mass has the curvature of the selected well
  CHECK(q.selected_well == 0);
  CHECK(std::abs(v.hessian(vec(0.0))(0, 0)) == doctest::Approx(q.lyapunov_sums[q.selected_well] * q.lyapunov_sums[q.selected_well]));
}
