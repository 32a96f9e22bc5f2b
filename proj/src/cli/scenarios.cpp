#include "mather/cli/scenarios.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <optional>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include "mather/hessian.hpp"
#include "mather/random.hpp"
#include "mather/semiclassics.hpp"
#include "mather/transfer.hpp"
#include "mather/weakkam.hpp"

namespace mather::cli {

using nlohmann::json;

namespace {

class Scenario {
 public:
  Scenario(std::string name, const ExperimentConfig& cfg) : cfg(cfg) { result.name = std::move(name); }

  template <class F>
  void stage(const std::string& sub, F&& body) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      body();
    } catch (const NumericalError& e) {
      throw NumericalError(result.name + "." + sub, e.what());
    }
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
    result.stage_seconds.emplace_back(sub, dt.count());
  }

  // value <= bound
  void at_most(const std::string& crit, const std::string& name, double value, double bound, std::string detail = {}) {
    result.assertions.push_back({crit, name, value, bound, value <= bound, std::move(detail)});
  }
  void at_least(const std::string& crit, const std::string& name, double value, double bound, std::string detail = {}) {
    result.assertions.push_back({crit, name, value, bound, value >= bound, std::move(detail)});
  }
  // successive ratio err[k+1]/err[k] must stay below 1
  void decreasing(const std::string& crit, const std::string& name, const std::vector<double>& v) {
    double worst = 0.0;
    for (std::size_t k = 1; k < v.size(); ++k) worst = std::max(worst, v[k] / v[k - 1]);
    result.assertions.push_back({crit, name, worst, 1.0, v.size() >= 2 && worst < 1.0, "max ratio of successive values"});
  }
  void increasing(const std::string& crit, const std::string& name, const std::vector<double>& v) {
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k < v.size(); ++k) worst = std::min(worst, v[k] - v[k - 1]);
    result.assertions.push_back({crit, name, worst, 0.0, v.size() >= 2 && worst > 0.0, "min successive increment"});
  }

  void add(OutputFile f) { result.files.push_back(std::move(f)); }

  const ExperimentConfig& cfg;
  ScenarioResult result;
};

double tol(const ExperimentConfig& cfg, const char* key) { return cfg.tolerance(key); }

std::vector<double> as_vector(const Vec& v) { return {v.data(), v.data() + v.size()}; }

void push_coords(std::vector<CsvTable::Cell>& row, const Vec& x) {
  for (int a = 0; a < x.size(); ++a) row.emplace_back(x[a]);
}

// |a/b - 1| from sign/log pairs
double log_rel_diff(int sa, double la, int sb, double lb) {
  if (sa != sb) return 1.0 + std::exp(lb - la);
  return std::abs(std::expm1(lb - la));
}

Vec random_vec(Rng& rng, int d, double lo, double hi) {
  Vec v(d);
  for (int i = 0; i < d; ++i) v[i] = rng.uniform(lo, hi);
  return v;
}

TrigPotential random_potential(Rng& rng, int d, int modes, double amp) {
  std::vector<FourierMode> m;
  for (int i = 0; i < modes; ++i) {
    FourierMode f;
    f.k = {rng.index(5) - 2, d == 2 ? rng.index(5) - 2 : 0};
    if (f.k[0] == 0 && f.k[1] == 0) f.k[0] = 1;
    f.a = rng.uniform(-amp, amp);
    f.b = rng.uniform(-amp, amp);
    m.push_back(f);
  }
  return TrigPotential(d, m);
}

BlockTridiagonal random_spd(Rng& rng, int d, int blocks) {
  BlockTridiagonal b{d, {}, {}};
  for (int k = 0; k < blocks; ++k) {
    Mat m(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) m(i, j) = rng.uniform(-1.0, 1.0);
    b.diag.push_back(m * m.transpose() + (2.0 * d + 0.5) * Mat::Identity(d, d));
    if (k + 1 < blocks) {
      Mat c(d, d);
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) c(i, j) = rng.uniform(-1.0, 1.0);
      b.off.push_back(c);
    }
  }
  return b;
}

// ---------------------------------------------------------------- flat

void flat(Scenario& s) {
  const auto& c = s.cfg.flat;
  json out;

  s.stage("determinant", [&] {
    double worst = 0.0;
    json rows = json::array();
    for (int d = 1; d <= 2; ++d) {
      const DiscreteLagrangian lag(TrigPotential::zero(d), zeros(d));
      Orbit path;
      const Vec v = Vec::Constant(d, 0.37);
      for (int k = 0; k <= c.det_n; ++k) path.points.push_back(Vec::Constant(d, 0.1) + k * v);
      const LogDet h = block_determinant(assemble_hessian(lag, path));
      const Monodromy m = monodromy_map(lag, path);
      const double expect = d * std::log(static_cast<double>(c.det_n));
      const double eh = log_rel_diff(h.sign, h.log_abs, 1, expect);
      const double em = log_rel_diff(m.det.sign, m.det.log_abs, 1, expect);
      worst = std::max({worst, eh, em});
      rows.push_back({{"d", d}, {"n", c.det_n}, {"det_hessian", h.value()}, {"det_map", m.det.value()},
                      {"expected", std::pow(c.det_n, d)}, {"rel_err_hessian", eh}, {"rel_err_map", em}});
    }
    out["determinant"] = rows;
    s.at_most("C2", "V=0 Hessian and monodromy determinant = n^d (relative)", worst, tol(s.cfg, "flat_det"));
  });

  s.stage("perron_root", [&] {
    double worst = 0.0, worst_uniform = 0.0;
    json rows = json::array();
    const TorusGrid grid(1, c.m);
    for (double w : c.omegas) {
      const DiscreteLagrangian lag(TrigPotential::zero(1), w);
      const auto spec = principal_eigenpair(build_kernel(lag, grid, c.beta, c.radius));
      const double expect = 0.5 * std::log(kTwoPi / c.beta) + 0.5 * c.beta * w * w;
      const double err = std::abs(std::expm1(spec.log_rho - expect));
      const auto mu = gibbs_marginal(spec);
      const double uniform = (mu.values * c.m - DenseVector::Ones(c.m)).cwiseAbs().maxCoeff();
      worst = std::max(worst, err);
      worst_uniform = std::max(worst_uniform, uniform);
      rows.push_back({{"omega", w}, {"rho", spec.rho}, {"expected", std::exp(expect)}, {"rel_err", err},
                      {"marginal_uniform_err", uniform}, {"residual", spec.residual}});
    }
    out["perron_root"] = {{"beta", c.beta}, {"m", c.m}, {"radius", c.radius}, {"rows", rows}};
    s.at_most("C2", fmt::format("rho = sqrt(2 pi/beta) exp(beta w^2/2) at m={}, R={}", c.m, c.radius), worst,
              tol(s.cfg, "flat_rho"));
    s.at_most("C2", "V=0 Gibbs marginal is uniform", worst_uniform, tol(s.cfg, "flat_rho"));
  });

  s.stage("critical_value", [&] {
    double worst = 0.0;
    json rows = json::array();
    const TorusGrid grid(1, c.critical_m);
    for (double w : c.omegas) {
      const DiscreteLagrangian lag(TrigPotential::zero(1), w);
      const auto cv = critical_value(action_matrix(lag, grid));
      const double err = std::abs(cv.c - 0.5 * w * w);
      worst = std::max(worst, err);
      rows.push_back({{"omega", w}, {"c", cv.c}, {"expected", 0.5 * w * w}, {"abs_err", err}, {"period", cv.period}});
    }
    out["critical_value"] = {{"m", c.critical_m}, {"rows", rows}};
    s.at_most("C2", "c(w) = w^2/2", worst, tol(s.cfg, "flat_critical"));
  });

  s.stage("lyapunov", [&] {
    double worst = 0.0;
    json rows = json::array();
    for (int d = 1; d <= 2; ++d) {
      const DiscreteLagrangian lag(TrigPotential::zero(d), zeros(d));
      const Vec x0 = Vec::Constant(d, 0.1);
      const auto spec = lyapunov_exponents(lag, PhasePoint{x0, x0 + Vec::Constant(d, 0.3)},
                                           static_cast<int>(c.lyapunov_steps));
      double m = 0.0;
      for (double e : spec.full) m = std::max(m, std::abs(e));
      worst = std::max(worst, m);
      rows.push_back({{"d", d}, {"steps", spec.steps}, {"exponents", spec.full}, {"max_abs", m}});
    }
    out["lyapunov"] = rows;
    s.at_most("C2", fmt::format("V=0 Lyapunov exponents vanish after {} steps", c.lyapunov_steps), worst,
              tol(s.cfg, "flat_lyapunov"));
  });

  s.add(json_file("flat.json", out));
}

// ---------------------------------------------------------------- transfer

void transfer(Scenario& s) {
  const auto& c = s.cfg.transfer;
  const int d = c.potential.dim();
  const DiscreteLagrangian lag(c.potential, c.omega);
  const TorusGrid grid(d, c.m);
  CsvTable marginal("marginal.csv", d), viscous("viscous.csv", d);
  json spectra = json::array();
  std::vector<double> flat_mass;
  double worst_stationary = 0.0;

  for (double beta : c.betas) {
    s.stage(fmt::format("beta={}", beta), [&] {
      const int r = c.radius > 0 ? c.radius : default_radius(lag, beta);
      const auto kernel = build_kernel(lag, grid, beta, r);
      const auto spec = principal_eigenpair(kernel);
      const auto mu = gibbs_marginal(spec);
      const auto vs = viscous_solutions(spec, beta);
      const auto chain = markov_kernel(spec, kernel);
      const double stat = stationarity_residual(chain, mu);
      worst_stationary = std::max(worst_stationary, stat);
      for (int i = 0; i < grid.size(); ++i) {
        std::vector<CsvTable::Cell> row = {beta};
        push_coords(row, grid.node(i));
        auto row2 = row;
        row.emplace_back(mu[i]);
        marginal.add(row);
        row2.emplace_back(vs.u_beta[i]);
        row2.emplace_back(vs.v_beta[i]);
        viscous.add(row2);
      }
      json masses = json::array();
      for (const auto& site : c.sites) masses.push_back(mass_near(mu, site, c.site_radius));
      flat_mass.push_back(mass_near(mu, c.sites[c.flat_site], c.site_radius));
      spectra.push_back({{"beta", beta},
                         {"m", c.m},
                         {"radius", r},
                         {"rho", spec.rho},
                         {"log_rho", spec.log_rho},
                         {"lambda", spec.lambda},
                         {"rho_left", spec.rho_left},
                         {"residual", spec.residual},
                         {"residual_star", spec.residual_star},
                         {"iterations", spec.iterations},
                         {"stationarity", stat},
                         {"markov_row_error", chain.max_row_error},
                         {"site_masses", masses}});
    });
  }
  s.increasing("C5", "flat-maximum mass increasing in beta", flat_mass);
  s.at_least("C5", fmt::format("flat-maximum mass at beta={}", c.betas.back()), flat_mass.back(),
             tol(s.cfg, "gibbs_mass"), fmt::format("radius {} around site {}", c.site_radius, c.flat_site));
  s.at_most("C9", "stationarity |mu P - mu|_1", worst_stationary, tol(s.cfg, "stationarity"));

  json gauge;
  s.stage("gauge", [&] {
    Rng rng(s.cfg.seed);
    const TorusGrid g(d, c.gauge_m);
    GridFunction u(g);
    for (int i = 0; i < g.size(); ++i) u.values[i] = rng.uniform(-c.gauge_amplitude, c.gauge_amplitude);
    const auto norm = normalize_lagrangian(lag, u, c.gauge_c);
    const int r = default_radius(lag, c.gauge_beta);
    const auto s0 = principal_eigenpair(build_kernel(lag, g, c.gauge_beta, r));
    const auto s1 = principal_eigenpair(build_kernel(norm, g, c.gauge_beta, r));
    const double diff = (gibbs_marginal(s0).values - gibbs_marginal(s1).values).cwiseAbs().maxCoeff();
    const double shift = std::abs((s1.log_rho - s0.log_rho) + c.gauge_beta * c.gauge_c);
    gauge = {{"beta", c.gauge_beta}, {"m", c.gauge_m}, {"c", c.gauge_c}, {"marginal_diff", diff}, {"log_rho_shift_err", shift}};
    s.at_most("C9", "Gibbs marginal gauge invariance", diff, tol(s.cfg, "gauge"));
    s.at_most("C9", "log rho shifts by -beta c under the gauge change", shift, tol(s.cfg, "gauge"));
  });

  s.add(marginal.file());
  s.add(viscous.file());
  s.add(json_file("spectrum.json", {{"betas", spectra}, {"gauge", gauge}}));
}

// ---------------------------------------------------------------- weakkam

void weakkam(Scenario& s) {
  const auto& c = s.cfg.weakkam;
  const int d = c.potential.dim();
  const DiscreteLagrangian lag(c.potential, c.omega);
  const TorusGrid grid(d, c.m);
  std::shared_ptr<ActionMatrix> am;
  std::optional<WeakKamPair> kam;
  json critical;

  s.stage("weak_kam_pair", [&] {
    am = std::make_shared<ActionMatrix>(action_matrix(lag, grid));
    kam.emplace(weak_kam_pair(*am));
  });
  const WeakKamPair& pair = *kam;
  {
    s.at_most("C4", "fixed-point residual of T^- u_- + c = u_-", pair.residual_minus, tol(s.cfg, "weakkam_residual"));
    s.at_most("C4", "fixed-point residual of T^+ u_+ - c = u_+", pair.residual_plus, tol(s.cfg, "weakkam_residual"));
  }

  s.stage("mather_set", [&] {
    const auto set = mather_indicator(pair, c.mather_tol);
    const auto graph = graph_property_check(*am, pair, set);
    CsvTable ukam("ukam.csv", d), mather("mather.csv", d);
    const auto gap = pair.gap();
    for (int i = 0; i < grid.size(); ++i) {
      std::vector<CsvTable::Cell> row;
      push_coords(row, grid.node(i));
      row.emplace_back(pair.u_minus[i]);
      row.emplace_back(pair.u_plus[i]);
      row.emplace_back(gap[i]);
      ukam.add(row);
    }
    for (int node : set.nodes) {
      std::vector<CsvTable::Cell> row = {static_cast<long long>(node)};
      push_coords(row, grid.node(node));
      mather.add(row);
    }
    s.add(ukam.file());
    s.add(mather.file());
    critical = {{"c", pair.c},
                {"residual_minus", pair.residual_minus},
                {"residual_plus", pair.residual_plus},
                {"period", pair.period},
                {"m", c.m},
                {"omega", as_vector(c.omega)},
                {"mather_nodes", set.nodes.size()},
                {"mather_tol", set.tol},
                {"gap_lipschitz", set.lipschitz},
                {"graph_property", graph.holds},
                {"graph_margin", graph.min_margin}};
  });

  s.stage("partition_bound", [&] {
    std::vector<int> horizons;
    for (int k = 1; k <= c.horizon; ++k) horizons.push_back(k);
    json rows = json::array();
    for (const auto& p : partition_bound(normalized_action(*am, pair), c.betas.back(), horizons))
      rows.push_back({{"n", p.n}, {"log_bound", p.log_bound}});
    critical["partition_bound"] = {{"beta", c.betas.back()}, {"rows", rows}};
  });

  CsvTable conv("convergence.csv"), ubeta("ubeta.csv", d);
  std::vector<double> errs_c, errs_u;
  for (double beta : c.betas) {
    s.stage(fmt::format("beta={}", beta), [&] {
      const auto spec = principal_eigenpair(build_kernel(lag, grid, beta));
      const auto vs = viscous_solutions(spec, beta);
      const double err_c = std::abs(spec.log_rho / beta - pair.c);
      const double err_u = (vs.u_beta.values - pair.u_minus.values).cwiseAbs().maxCoeff();
      errs_c.push_back(err_c);
      errs_u.push_back(err_u);
      conv.add({beta, err_c, err_u});
      for (int i = 0; i < grid.size(); ++i) {
        std::vector<CsvTable::Cell> row = {beta};
        push_coords(row, grid.node(i));
        row.emplace_back(vs.u_beta[i]);
        ubeta.add(row);
      }
    });
  }
  s.decreasing("C4", "|log(rho)/beta - c| decreasing in beta", errs_c);
  s.at_most("C4", fmt::format("|log(rho)/beta - c| at beta={}", c.betas.back()), errs_c.back(),
            tol(s.cfg, "weakkam_critical"));
  s.decreasing("C4", "sup|u_beta - u_-| decreasing in beta", errs_u);
  s.add(conv.file());
  s.add(ubeta.file());
  s.add(json_file("critical.json", critical));
}

// ---------------------------------------------------------------- identity

void identity(Scenario& s) {
  const auto& c = s.cfg.identity;
  CsvTable table("identity.csv");
  double worst = 0.0;
  s.stage("trials", [&] {
    Rng rng(s.cfg.seed);
    for (int t = 0; t < c.trials; ++t) {
      const int d = 1 + t % 2;
      const int n = c.n_min + rng.index(c.n_max - c.n_min + 1);
      const DiscreteLagrangian lag(random_potential(rng, d, c.modes, c.amplitude), random_vec(rng, d, -0.5, 0.5));
      const Vec x0 = random_vec(rng, d, 0.0, 1.0);
      const Orbit orbit = iterate_twist(lag, x0, x0 + random_vec(rng, d, -0.5, 0.5), n);
      const Monodromy m = monodromy_map(lag, orbit);
      const LogDet h = block_determinant(assemble_hessian(lag, orbit));
      const LogDet p = monodromy_prefactor(lag, orbit);
      const int sign = h.sign * p.sign;
      const double log_prod = h.log_abs + p.log_abs;
      const double rel = h.conjugate_point ? 1.0 : log_rel_diff(m.det.sign, m.det.log_abs, sign, log_prod);
      worst = std::max(worst, rel);
      table.add({static_cast<long long>(n), m.det.value(), sign * std::exp(log_prod), rel});
    }
  });
  s.at_most("C1", fmt::format("det(Y_1 -> Y_n) = prefactor * det(Hessian) over {} systems", c.trials), worst,
            tol(s.cfg, "identity_rel_err"));
  s.add(table.file());
}

// ---------------------------------------------------------------- thouless

void thouless(Scenario& s) {
  const auto& c = s.cfg.thouless;
  json out;
  s.stage("fixed_point", [&] {
    const DiscreteLagrangian hyper(cosine_potential(1.0 / (4.0 * kPi * kPi)), 0.0);
    Orbit path;
    for (int k = 0; k < c.fixed_n + 2; ++k) path.points.push_back(zeros(1));
    const auto t = thouless_limit(hyper, path);
    const double target = std::log((3.0 + std::sqrt(5.0)) / 2.0);
    const double err = std::abs(t.value - target);
    out["fixed_point"] = {{"n", t.n}, {"value", t.value}, {"target", target}, {"abs_err", err}};
    s.at_most("C3", fmt::format("(1/n) log det at the V''=-1 fixed point, n={}", t.n), err, tol(s.cfg, "thouless_fixed"));
  });

  s.stage("minimizer", [&] {
    const DiscreteLagrangian lag(c.potential, 0.0);
    Orbit line;
    for (int k = 0; k <= c.n + 1; ++k) line.points.push_back(Vec::Constant(1, c.start + c.rotation * k));
    const auto refined = refine_minimizer(lag, line, action_of_path(lag, line));
    if (!refined.refined) throw NumericalError("refine", refined.warning);
    const auto t = thouless_limit(lag, refined.path);
    const auto ly = lyapunov_exponents(lag, refined.path, c.sample_every);
    CsvTable table("thouless.csv");
    for (std::size_t i = 0; i < ly.history.size(); ++i) {
      const int k = static_cast<int>(i + 1) * c.sample_every;
      table.add({static_cast<long long>(k), t.running[k - 1], ly.history[i]});
    }
    s.add(table.file());
    const double err = std::abs(t.value - ly.positive_sum());
    out["orbit"] = {{"n", t.n},
                    {"rotation", c.rotation},
                    {"euler_lagrange_residual", refined.residual},
                    {"thouless", t.value},
                    {"lyapunov_sum", ly.positive_sum()},
                    {"abs_err", err},
                    {"conjugate_point", t.conjugate_point}};
    s.at_most("C3", fmt::format("Thouless value vs QR Lyapunov sum on an n={} minimizer", t.n), err,
              tol(s.cfg, "thouless_orbit"));
  });
  s.add(json_file("thouless.json", out));
}

// ---------------------------------------------------------------- laplace

void laplace(Scenario& s) {
  const auto& c = s.cfg.laplace;
  s.stage("quadrature", [&] {
    const DiscreteLagrangian lag(c.potential, c.omega);
    const auto table = laplace_validate(lag, c.x, c.y, c.n, c.betas);
    CsvTable csv("laplace.csv");
    std::vector<double> errs;
    for (const auto& r : table.rows) {
      csv.add({r.beta, r.lhs, r.rhs, r.rel_err});
      errs.push_back(r.rel_err);
    }
    s.add(csv.file());
    s.at_most("Laplace", fmt::format("relative error at beta={}", table.rows.front().beta), errs.front(),
              tol(s.cfg, "laplace_error"));
    s.decreasing("Laplace", "relative error strictly decreasing in beta", errs);
  });
}

// ---------------------------------------------------------------- detconv

void detconv(Scenario& s) {
  const auto& c = s.cfg.detconv;
  const int d = c.potential.dim();
  const PhasePoint start{c.x, c.v};
  json out;

  s.stage("closed_form", [&] {
    // V = a cos 2 pi x at rest in x = 0 has constant V'' = q
    const TrigPotential v = cosine_potential(-c.q / (4.0 * kPi * kPi));
    const double got = continuous_monodromy_det(v, {zeros(1), zeros(1)}, c.q_time, c.reference_dt);
    const double rq = std::sqrt(std::abs(c.q)) * c.q_time;
    const double expect = c.q > 0 ? std::sin(rq) / rq : c.q < 0 ? std::sinh(rq) / rq : 1.0;
    const double err = std::abs(got - expect);
    out["closed_form"] = {{"q", c.q}, {"t", c.q_time}, {"det", got}, {"expected", expect}, {"abs_err", err}};
    s.at_most("C7", "constant-curvature Jacobi determinant = sin(sqrt(q) t)/(sqrt(q) t)", err, tol(s.cfg, "closed_form"));
  });

  double continuous = 0.0;
  s.stage("discretized", [&] {
    const auto rows = detconv_table(c.potential, start, c.t, c.ns, c.reference_dt);
    CsvTable csv("detconv.csv");
    std::vector<double> errs;
    for (const auto& r : rows) {
      csv.add({static_cast<long long>(r.n), r.discrete, r.continuous, r.error});
      errs.push_back(r.error);
    }
    continuous = rows.front().continuous;
    s.add(csv.file());
    s.decreasing("C7", "|discretized - continuous| decreasing as N doubles", errs);
  });

  s.stage("fredholm", [&] {
    const Trajectory gamma = integrate_trajectory(c.potential, start, c.t, c.reference_dt);
    const auto fk = fredholm_det(c.potential, gamma, c.modes);
    const auto f2k = fredholm_det(c.potential, gamma, 2 * c.modes);
    const double limit = 2.0 * f2k.value - fk.value;
    const double change = std::abs(f2k.value - fk.value);
    const double agree = std::abs(limit - continuous);
    out["fredholm"] = {{"dim", d},
                       {"t", c.t},
                       {"K", c.modes},
                       {"det_K", fk.value},
                       {"det_2K", f2k.value},
                       {"change", change},
                       {"limit", limit},
                       {"continuous", continuous},
                       {"abs_err", agree},
                       {"negative_modes", f2k.negative_modes},
                       {"conjugate_passed", f2k.conjugate_passed}};
    s.at_most("C7", fmt::format("Fredholm change from K={} to {}", c.modes, 2 * c.modes), change,
              tol(s.cfg, "fredholm_change"));
    s.at_most("C7", "Fredholm limit vs continuous monodromy", agree, tol(s.cfg, "fredholm_agreement"));
  });
  s.add(json_file("fredholm.json", out));
}

// ---------------------------------------------------------------- ground / concentrate

struct Minimum {
  Vec x;
  double value = 0.0;
  double zero_point = 0.0;  // sum of sqrt of the Hessian eigenvalues
};

// Global minima of V (within 1e-9) found from the local minima of a sample grid, polished by Newton.
std::vector<Minimum> global_minima(const TrigPotential& v) {
  const int d = v.dim();
  const int m = d == 1 ? 1024 : 128;
  const TorusGrid g(d, m);
  std::vector<Minimum> found;
  for (int i = 0; i < g.size(); ++i) {
    const Vec x = g.node(i);
    const double vx = v.value(x);
    bool local = true;
    for (const Vec& n : lattice_translates(d, 1)) {
      if (n.isZero()) continue;
      if (v.value(x + n / m) < vx) local = false;
    }
    if (!local) continue;
    Vec p = x;
    for (int it = 0; it < 50; ++it) {
      const Vec step = v.hessian(p).ldlt().solve(v.gradient(p));
      p -= step;
      if (step.lpNorm<Eigen::Infinity>() < 1e-15) break;
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(v.hessian(p));
    if (es.eigenvalues().minCoeff() <= 0.0) continue;
    p = wrap(p);
    bool dup = false;
    for (const auto& f : found) dup |= torus_distance(f.x, p) < 1e-6;
    if (!dup) found.push_back({p, v.value(p), es.eigenvalues().cwiseSqrt().sum()});
  }
  if (found.empty()) throw NumericalError("minima", "no nondegenerate minimum found");
  double lo = found.front().value;
  for (const auto& f : found) lo = std::min(lo, f.value);
  std::vector<Minimum> out;
  for (const auto& f : found)
    if (f.value <= lo + 1e-9) out.push_back(f);
  return out;
}

int grid_for(double hbar, int m) {
  const int need = std::max(m, minimum_grid_size(hbar));
  return (need + 7) / 8 * 8;
}

void ground(Scenario& s) {
  const auto& c = s.cfg.ground;
  const int d = c.potential.dim();
  std::vector<Minimum> minima;
  s.stage("minima", [&] { minima = global_minima(c.potential); });
  const Minimum* flat = &minima.front();
  for (const auto& m : minima)
    if (m.zero_point < flat->zero_point) flat = &m;

  json rows = json::array();
  double worst_res = 0.0;
  for (double hbar : c.hbars) {
    s.stage(fmt::format("hbar={}", hbar), [&] {
      const int m = grid_for(hbar, c.m);
      const auto r = schrodinger_ground(c.potential, hbar, TorusGrid(d, m));
      const double zero_point = 0.5 * hbar * flat->zero_point;
      const double harmonic = flat->value + zero_point;
      const double rel = std::abs(r.energy - harmonic) / zero_point;
      worst_res = std::max(worst_res, r.residual);
      rows.push_back({{"hbar", hbar},
                      {"E0", r.energy},
                      {"m", m},
                      {"residual", r.residual},
                      {"iterations", r.iterations},
                      {"harmonic", harmonic},
                      {"zero_point", zero_point},
                      {"rel_err_zero_point", rel}});
      if (hbar == *std::min_element(c.hbars.begin(), c.hbars.end()))
        s.at_most("C6", fmt::format("|E0 - (min V + hbar sqrt(V'')/2)| over the zero-point term at hbar={}", hbar), rel,
                  tol(s.cfg, "ground_energy"));
    });
  }
  s.at_most("C6", "eigen residual", worst_res, tol(s.cfg, "ground_residual"));
  s.add(json_file("ground.json", {{"min_V", flat->value},
                                  {"flat_min", as_vector(flat->x)},
                                  {"flat_zero_point_sum", flat->zero_point},
                                  {"global_minima", minima.size()},
                                  {"rows", rows}}));
}

void concentrate(Scenario& s) {
  const auto& c = s.cfg.concentrate;
  s.stage("wells", [&] {
    const auto r = concentration_experiment(c.potential, c.wells, c.hbars, c.m);
    CsvTable csv("wells.csv");
    for (const auto& w : r.rows) csv.add({w.hbar, static_cast<long long>(w.well), w.mass});
    s.add(csv.file());
    const double hmin = *std::min_element(c.hbars.begin(), c.hbars.end());
    double mass = 0.0;
    for (const auto& w : r.rows)
      if (w.hbar == hmin && w.well == r.selected_well) mass = w.mass;
    s.at_least("C6", fmt::format("flat-well mass at hbar={}", hmin), mass, tol(s.cfg, "ground_mass"),
               fmt::format("well {} (smallest Lyapunov sum)", r.selected_well));
  });
}

// ---------------------------------------------------------------- properties

void properties(Scenario& s) {
  const auto& c = s.cfg.properties;
  Rng rng(s.cfg.seed);
  json out;

  s.stage("schur", [&] {
    double worst = 0.0, worst_split = -std::numeric_limits<double>::infinity();
    for (int t = 0; t < c.schur_trials; ++t) {
      const auto m = random_spd(rng, 2, 3);
      const DenseMatrix dense = m.to_dense();
      const DenseMatrix a = dense.topLeftCorner(2, 2);
      const DenseMatrix cc = dense.bottomLeftCorner(4, 2);
      const DenseMatrix b = dense.bottomRightCorner(4, 4);
      const double whole = block_determinant(m).log_abs;
      const double split = block_determinant(m.principal(0, 1)).log_abs + block_determinant(m.principal(1, 2)).log_abs;
      const double schur = std::log(a.determinant()) + std::log((b - cc * a.inverse() * cc.transpose()).determinant());
      worst = std::max(worst, std::abs(std::expm1(whole - schur)));
      worst_split = std::max(worst_split, whole - split);
    }
    out["schur"] = {{"trials", c.schur_trials}, {"max_rel_err", worst}, {"max_log_excess", worst_split}};
    s.at_most("C8", fmt::format("Schur complement identity, {} SPD trials", c.schur_trials), worst, tol(s.cfg, "schur"));
    s.at_most("C8", "[M] <= [A][B] (log excess)", worst_split, tol(s.cfg, "schur"));
  });

  s.stage("subadditivity", [&] {
    int checked = 0, unrefined = 0;
    double worst = std::numeric_limits<double>::infinity();
    for (int pot = 0; checked < c.minimizers; ++pot) {
      const int d = 1 + pot % 2;
      const TorusGrid g(d, d == 1 ? 48 : 10);
      const DiscreteLagrangian lag(random_potential(rng, d, 3, 0.01), random_vec(rng, d, -0.4, 0.4));
      const int n = 6 + pot % 3;
      const auto table = finite_action_table(action_matrix(lag, g), n);
      for (int trial = 0; trial < 10 && checked < c.minimizers; ++trial) {
        const int x = rng.index(g.size()), z = rng.index(g.size());
        const int split = 1 + rng.index(n - 2);
        const auto p = minimizer_path(table, x, z, true);
        ++checked;
        if (!p.refined) {
          ++unrefined;
          continue;
        }
        worst = std::min(worst, subadditivity_check(lag, p.path, split).slack);
      }
    }
    out["subadditivity"] = {{"minimizers", checked}, {"unrefined", unrefined}, {"min_slack", worst}};
    s.at_least("C8", fmt::format("subadditivity slack on {} minimizers", checked), worst,
               -tol(s.cfg, "subadditivity_slack"));
    s.at_most("C8", "minimizers that failed Newton refinement", unrefined, 0.0);
  });

  s.stage("tridiagonal", [&] {
    int violations = 0, inadmissible = 0;
    double worst_ratio = 0.0;
    for (int t = 0; t < c.tridiag_trials; ++t) {
      const int n = 2 + rng.index(59);
      DenseVector dg(n), od(n - 1);
      for (int i = 0; i < n; ++i) dg[i] = (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(2.2, 6.0);
      for (int i = 0; i < n - 1; ++i) od[i] = rng.uniform(-1.0, 1.0);
      const auto r = tridiag_inverse_bound_check(dg, od);
      if (!r.admissible) {
        ++inadmissible;
        continue;
      }
      violations += !r.holds;
      worst_ratio = std::max(worst_ratio, r.inverse_inf_norm / r.bound);
    }
    out["tridiagonal"] = {{"trials", c.tridiag_trials}, {"inadmissible", inadmissible}, {"violations", violations},
                          {"max_norm_over_bound", worst_ratio}};
    s.at_most("C8", fmt::format("tridiagonal inverse bound violations in {} trials", c.tridiag_trials), violations, 0.0);
    s.at_most("C8", "inadmissible tridiagonal draws", inadmissible, 0.0);
  });

  s.stage("box_gaussian", [&] {
    int cases = 0, failures = 0;
    json rows = json::array();
    for (int t = 0; t < c.box_trials; ++t) {
      const auto a = random_spd(rng, 1, 1 + t % 3);
      for (double beta : {0.5, 5.0, 50.0}) {
        const auto r = box_gaussian_lower_bound_check(a, 0.25, beta);
        if (!r.feasible) continue;
        ++cases;
        failures += r.inconclusive || !r.holds;
        rows.push_back({{"blocks", a.blocks()}, {"beta", beta}, {"lhs", r.lhs}, {"rhs", r.rhs}, {"holds", r.holds},
                        {"inconclusive", r.inconclusive}});
      }
    }
    out["box_gaussian"] = {{"cases", cases}, {"failures", failures}, {"rows", rows}};
    s.at_most("C8", fmt::format("box Gaussian lower bound failures in {} feasible cases", cases), failures, 0.0);
  });
  s.add(json_file("properties.json", out));
}

}  // namespace

ScenarioResult run_scenario(const std::string& name, const ExperimentConfig& cfg) {
  Scenario s(name, cfg);
  if (name == "flat") flat(s);
  else if (name == "transfer") transfer(s);
  else if (name == "weakkam") weakkam(s);
  else if (name == "identity") identity(s);
  else if (name == "thouless") thouless(s);
  else if (name == "laplace") laplace(s);
  else if (name == "detconv") detconv(s);
  else if (name == "ground") ground(s);
  else if (name == "concentrate") concentrate(s);
  else if (name == "properties") properties(s);
  else throw ConfigError("unknown scenario " + name);
  return std::move(s.result);
}

PlotContext plot_context(const ExperimentConfig& cfg) {
  PlotContext ctx;
  ctx.sites = cfg.transfer.sites;
  ctx.site_radius = cfg.transfer.site_radius;
  return ctx;
}

}  // namespace mather::cli
