#include "mather/cli/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <fmt/format.h>

namespace mather::cli {

using nlohmann::json;

namespace {

const std::map<std::string, std::vector<std::string>>& section_keys() {
  static const std::map<std::string, std::vector<std::string>> keys = {
      {"flat", {"beta", "m", "radius", "det_n", "omegas", "critical_m", "lyapunov_steps"}},
      {"transfer",
       {"potential", "omega", "betas", "m", "radius", "sites", "site_radius", "flat_site", "gauge_beta", "gauge_m",
        "gauge_amplitude", "gauge_c"}},
      {"weakkam", {"potential", "omega", "m", "horizon", "betas", "mather_tol"}},
      {"identity", {"trials", "n_min", "n_max", "amplitude", "modes"}},
      {"thouless", {"fixed_n", "n", "potential", "rotation", "start", "sample_every"}},
      {"laplace", {"potential", "omega", "x", "y", "n", "betas"}},
      {"detconv", {"potential", "x", "v", "t", "ns", "modes", "reference_dt", "q", "q_time"}},
      {"ground", {"potential", "hbars", "m"}},
      {"concentrate", {"potential", "wells", "hbars", "m"}},
      {"properties", {"schur_trials", "minimizers", "tridiag_trials", "box_trials"}},
  };
  return keys;
}

// Reads one section, records every value used (defaults included) and rejects unknown keys.
class SectionReader {
 public:
  SectionReader(std::string name, json src, std::filesystem::path base)
      : name_(std::move(name)), src_(std::move(src)), base_(std::move(base)) {
    if (!src_.is_object()) throw ConfigError(fmt::format("section '{}' must be an object", name_));
    const auto& allowed = section_keys().at(name_);
    for (const auto& [key, value] : src_.items())
      if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
        throw ConfigError(fmt::format("unknown key '{}' in section '{}'", key, name_));
  }

  double number(const char* key, double fallback, bool positive = false) {
    const double v = has(key) ? as_number(src_[key], key) : fallback;
    if (positive && !(v > 0.0)) fail(key, "must be positive");
    effective_[key] = v;
    return v;
  }

  long integer(const char* key, long fallback, long lo, long hi) {
    long v = fallback;
    if (has(key)) {
      const json& j = src_[key];
      if (!j.is_number_integer()) fail(key, "must be an integer");
      v = j.get<long>();
    }
    if (v < lo || v > hi) fail(key, fmt::format("must lie in [{}, {}]", lo, hi));
    effective_[key] = v;
    return v;
  }

  std::vector<double> numbers(const char* key, std::vector<double> fallback, bool positive = true) {
    std::vector<double> v = std::move(fallback);
    if (has(key)) {
      const json& j = src_[key];
      if (!j.is_array()) fail(key, "must be a list of numbers");
      v.clear();
      for (const auto& e : j) v.push_back(as_number(e, key));
    }
    if (v.empty()) fail(key, "must be nonempty");
    if (positive)
      for (double x : v)
        if (!(x > 0.0)) fail(key, "entries must be positive");
    effective_[key] = v;
    return v;
  }

  std::vector<int> integers(const char* key, std::vector<int> fallback) {
    std::vector<int> v = std::move(fallback);
    if (has(key)) {
      const json& j = src_[key];
      if (!j.is_array()) fail(key, "must be a list of integers");
      v.clear();
      for (const auto& e : j) {
        if (!e.is_number_integer()) fail(key, "entries must be integers");
        v.push_back(e.get<int>());
      }
    }
    if (v.empty()) fail(key, "must be nonempty");
    effective_[key] = v;
    return v;
  }

  Vec vec(const char* key, const Vec& fallback, int d) {
    Vec v = fallback;
    if (has(key)) v = parse_vec(src_[key], key, d);
    if (v.size() != d) fail(key, fmt::format("must have {} components", d));
    effective_[key] = std::vector<double>(v.data(), v.data() + v.size());
    return v;
  }

  std::vector<Vec> vecs(const char* key, const std::vector<Vec>& fallback, int d) {
    std::vector<Vec> v = fallback;
    if (has(key)) {
      const json& j = src_[key];
      if (!j.is_array()) fail(key, "must be a list of points");
      v.clear();
      for (const auto& e : j) v.push_back(parse_vec(e, key, d));
    }
    if (v.empty()) fail(key, "must be nonempty");
    json out = json::array();
    for (const auto& p : v) out.push_back(std::vector<double>(p.data(), p.data() + p.size()));
    effective_[key] = out;
    return v;
  }

  TrigPotential potential(const char* key, const TrigPotential& fallback) {
    if (!has(key)) {
      effective_[key] = fallback.to_json();
      return fallback;
    }
    const json& j = src_[key];
    try {
      if (j.is_string()) {
        std::filesystem::path p = j.get<std::string>();
        if (p.is_relative()) p = base_ / p;
        if (!std::filesystem::is_regular_file(p)) fail(key, fmt::format("potential file '{}' does not exist", p.string()));
        TrigPotential v = TrigPotential::load(p.string());
        effective_[key] = j;
        effective_["potential_resolved"] = v.to_json();
        return v;
      }
      if (j.is_object()) {
        TrigPotential v = TrigPotential::from_json(j);
        effective_[key] = v.to_json();
        return v;
      }
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      fail(key, e.what());
    }
    fail(key, "must be a file path or an inline potential object");
  }

  std::vector<Well> wells(const char* key, const std::vector<Well>& fallback, int d) {
    std::vector<Well> v = fallback;
    if (has(key)) {
      const json& j = src_[key];
      if (!j.is_array()) fail(key, "must be a list of {\"center\": ..., \"radius\": ...}");
      v.clear();
      for (const auto& e : j) {
        if (!e.is_object() || !e.contains("center")) fail(key, "each well needs a center");
        for (const auto& [k, val] : e.items())
          if (k != "center" && k != "radius") fail(key, fmt::format("unknown well key '{}'", k));
        Well w;
        w.center = parse_vec(e["center"], key, d);
        if (e.contains("radius")) w.radius = as_number(e["radius"], key);
        v.push_back(w);
      }
    }
    if (v.empty()) fail(key, "must be nonempty");
    json out = json::array();
    for (const auto& w : v)
      out.push_back({{"center", std::vector<double>(w.center.data(), w.center.data() + w.center.size())},
                     {"radius", w.radius}});
    effective_[key] = out;
    return v;
  }

  json effective() const { return effective_; }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    throw ConfigError(fmt::format("{}.{}: {}", name_, key, what));
  }

 private:
  bool has(const char* key) const { return src_.contains(key); }

  double as_number(const json& j, const std::string& key) const {
    if (!j.is_number()) fail(key, "must be a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) fail(key, "must be finite");
    return v;
  }

  Vec parse_vec(const json& j, const std::string& key, int d) const {
    Vec v(d);
    if (j.is_number() && d == 1) {
      v[0] = as_number(j, key);
      return v;
    }
    if (!j.is_array() || static_cast<int>(j.size()) != d) fail(key, fmt::format("must be a {}-vector", d));
    for (int i = 0; i < d; ++i) v[i] = as_number(j[i], key);
    return v;
  }

  std::string name_;
  json src_;
  std::filesystem::path base_;
  json effective_ = json::object();
};

Vec scalar(double a) { return Vec::Constant(1, a); }

TrigPotential detconv_default_potential() {
  return TrigPotential(1, {{{1, 0}, 0.03, -0.02}, {{2, 0}, 0.01, 0.015}});
}

bool power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

}  // namespace

const Tolerances& default_tolerances() {
  static const Tolerances tol = {
      {"identity_rel_err", 1e-9},     {"flat_det", 1e-10},          {"flat_rho", 1e-6},
      {"flat_critical", 1e-8},        {"flat_lyapunov", 1e-6},      {"thouless_fixed", 1e-3},
      {"thouless_orbit", 5e-3},       {"weakkam_residual", 1e-8},   {"weakkam_critical", 0.05},
      {"gibbs_mass", 0.99},           {"stationarity", 1e-8},       {"gauge", 1e-8},
      {"eigen_residual", 1e-10},      {"ground_mass", 0.99},        {"ground_energy", 0.1},
      {"ground_residual", 1e-9},      {"closed_form", 1e-6},        {"fredholm_change", 1e-4},
      {"fredholm_agreement", 1e-3},   {"schur", 1e-10},             {"subadditivity_slack", 1e-9},
      {"laplace_error", 0.05},
  };
  return tol;
}

double ExperimentConfig::tolerance(const std::string& key) const {
  const auto it = tol.find(key);
  if (it == tol.end()) throw std::logic_error("unknown tolerance " + key);
  return it->second;
}

std::vector<std::string> resolve_scenario(const std::string& name, const std::string& sub) {
  const auto& all = scenario_names();
  if (name == "all") {
    if (!sub.empty()) throw ConfigError("scenario 'all' takes no sub-command");
    return all;
  }
  if (name == "semiclassics") {
    static const std::set<std::string> subs = {"laplace", "detconv", "ground", "concentrate"};
    if (!subs.count(sub)) throw ConfigError("semiclassics needs one of: laplace, detconv, ground, concentrate");
    return {sub};
  }
  if (!sub.empty()) throw ConfigError(fmt::format("scenario '{}' takes no sub-command", name));
  if (name == "hessian-identity") return {"identity"};
  if (std::find(all.begin(), all.end(), name) == all.end())
    throw ConfigError(fmt::format("unknown scenario '{}'", name));
  return {name};
}

ExperimentConfig load_config(const std::filesystem::path& file, const std::vector<std::string>& scenarios,
                             const Overrides& overrides) {
  std::ifstream in(file);
  if (!in) throw ConfigError(fmt::format("cannot open config file '{}'", file.string()));
  json root;
  try {
    root = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(fmt::format("config '{}' is not valid JSON: {}", file.string(), e.what()));
  }
  return parse_config(root, file.parent_path(), scenarios, overrides);
}

ExperimentConfig parse_config(const json& input, const std::filesystem::path& base,
                              const std::vector<std::string>& scenarios, const Overrides& overrides) {
  if (!input.is_object()) throw ConfigError("config must be a JSON object");
  json root = input;
  for (const auto& [key, value] : root.items())
    if (key != "seed" && key != "output" && key != "tolerances" && !section_keys().count(key))
      throw ConfigError(fmt::format("unknown top-level key '{}'", key));

  ExperimentConfig cfg;
  cfg.scenarios = scenarios;
  if (scenarios.empty()) throw ConfigError("no scenario selected");

  if (overrides.seed) {
    cfg.seed = *overrides.seed;
  } else {
    if (!root.contains("seed")) throw ConfigError("seed must be given explicitly (config \"seed\" or --seed)");
    const json& js = root["seed"];
    if (!js.is_number_integer() || (!js.is_number_unsigned() && js.get<long long>() < 0))
      throw ConfigError("seed must be a nonnegative integer");
    cfg.seed = root["seed"].get<std::uint64_t>();
  }
  if (overrides.output) {
    cfg.output = *overrides.output;
  } else if (root.contains("output")) {
    if (!root["output"].is_string()) throw ConfigError("output must be a string");
    cfg.output = root["output"].get<std::string>();
    if (cfg.output.is_relative()) cfg.output = base / cfg.output;
  } else {
    cfg.output = "results";
  }

  cfg.tol = default_tolerances();
  if (root.contains("tolerances")) {
    if (!root["tolerances"].is_object()) throw ConfigError("tolerances must be an object");
    for (const auto& [key, value] : root["tolerances"].items()) {
      if (!cfg.tol.count(key)) throw ConfigError(fmt::format("unknown tolerance '{}'", key));
      if (!value.is_number() || !(value.get<double>() > 0.0))
        throw ConfigError(fmt::format("tolerance '{}' must be a positive number", key));
      cfg.tol[key] = value.get<double>();
    }
  }

  // command-line values go into every selected section that knows the key
  for (const auto& [key, value] : overrides.section_values) {
    bool used = false;
    for (const auto& s : scenarios) {
      const auto& keys = section_keys().at(s);
      if (std::find(keys.begin(), keys.end(), key) == keys.end()) continue;
      if (!root.contains(s)) root[s] = json::object();
      root[s][key] = value;
      used = true;
    }
    if (!used) throw ConfigError(fmt::format("option for '{}' does not apply to the selected scenario", key));
  }

  cfg.effective = {{"seed", cfg.seed}, {"output", cfg.output.string()}, {"tolerances", cfg.tol}};
  json scen = json::array();
  for (const auto& s : scenarios) scen.push_back(s);
  cfg.effective["scenarios"] = scen;

  auto section = [&](const std::string& name) {
    return SectionReader(name, root.contains(name) ? root[name] : json::object(), base);
  };
  auto selected = [&](const std::string& name) {
    return std::find(scenarios.begin(), scenarios.end(), name) != scenarios.end();
  };

  if (selected("flat")) {
    auto r = section("flat");
    auto& c = cfg.flat;
    c.beta = r.number("beta", c.beta, true);
    c.m = static_cast<int>(r.integer("m", c.m, 8, 4096));
    c.radius = static_cast<int>(r.integer("radius", c.radius, 1, 64));
    c.det_n = static_cast<int>(r.integer("det_n", c.det_n, 2, 100000));
    c.omegas = r.numbers("omegas", c.omegas, false);
    c.critical_m = static_cast<int>(r.integer("critical_m", c.critical_m, 4, 1024));
    c.lyapunov_steps = r.integer("lyapunov_steps", c.lyapunov_steps, 100, 2000000000L);
    cfg.effective["flat"] = r.effective();
  }
  if (selected("transfer")) {
    auto r = section("transfer");
    auto& c = cfg.transfer;
    c.potential = r.potential("potential", two_maxima_potential());
    const int d = c.potential.dim();
    c.omega = r.vec("omega", zeros(d), d);
    c.betas = r.numbers("betas", c.betas);
    c.m = static_cast<int>(r.integer("m", c.m, 8, d == 1 ? 4096 : 64));
    c.radius = static_cast<int>(r.integer("radius", c.radius, 0, 64));
    c.sites = r.vecs("sites", d == 1 ? std::vector<Vec>{scalar(0.0), scalar(0.5)} : std::vector<Vec>{zeros(2)}, d);
    c.site_radius = r.number("site_radius", c.site_radius, true);
    c.flat_site = static_cast<int>(r.integer("flat_site", c.flat_site, 0, static_cast<long>(c.sites.size()) - 1));
    c.gauge_beta = r.number("gauge_beta", c.gauge_beta, true);
    c.gauge_m = static_cast<int>(r.integer("gauge_m", c.gauge_m, 8, d == 1 ? 4096 : 64));
    c.gauge_amplitude = r.number("gauge_amplitude", c.gauge_amplitude);
    c.gauge_c = r.number("gauge_c", c.gauge_c);
    cfg.effective["transfer"] = r.effective();
  }
  if (selected("weakkam")) {
    auto r = section("weakkam");
    auto& c = cfg.weakkam;
    c.potential = r.potential("potential", cosine_potential(0.05, 0.02));
    const int d = c.potential.dim();
    c.omega = r.vec("omega", scalar(0.1), d);
    c.m = static_cast<int>(r.integer("m", c.m, 4, d == 1 ? 2048 : 32));
    c.horizon = static_cast<int>(r.integer("horizon", c.horizon, 1, 1000));
    c.betas = r.numbers("betas", c.betas);
    c.mather_tol = r.number("mather_tol", c.mather_tol, true);
    cfg.effective["weakkam"] = r.effective();
  }
  if (selected("identity")) {
    auto r = section("identity");
    auto& c = cfg.identity;
    c.trials = static_cast<int>(r.integer("trials", c.trials, 1, 1000000));
    c.n_min = static_cast<int>(r.integer("n_min", c.n_min, 3, 100000));
    c.n_max = static_cast<int>(r.integer("n_max", c.n_max, c.n_min, 100000));
    c.amplitude = r.number("amplitude", c.amplitude, true);
    c.modes = static_cast<int>(r.integer("modes", c.modes, 1, 64));
    cfg.effective["identity"] = r.effective();
  }
  if (selected("thouless")) {
    auto r = section("thouless");
    auto& c = cfg.thouless;
    c.fixed_n = static_cast<int>(r.integer("fixed_n", c.fixed_n, 2, 10000000));
    c.n = static_cast<int>(r.integer("n", c.n, 100, 10000000));
    c.potential = r.potential("potential", cosine_potential(0.004, 0.002));
    if (c.potential.dim() != 1) r.fail("potential", "the rotation orbit is one-dimensional");
    c.rotation = r.number("rotation", (std::sqrt(5.0) - 1.0) / 2.0);
    c.start = r.number("start", c.start);
    c.sample_every = static_cast<int>(r.integer("sample_every", c.sample_every, 1, c.n));
    cfg.effective["thouless"] = r.effective();
  }
  if (selected("laplace")) {
    auto r = section("laplace");
    auto& c = cfg.laplace;
    c.potential = r.potential("potential", cosine_potential(0.01));
    const int d = c.potential.dim();
    c.omega = r.vec("omega", zeros(d), d);
    c.x = r.vec("x", d == 1 ? scalar(0.1) : zeros(2), d);
    c.y = r.vec("y", d == 1 ? scalar(0.35) : Vec::Constant(2, 0.25), d);
    c.n = static_cast<int>(r.integer("n", c.n, 2, 3));
    if ((c.n - 1) * d > 2) r.fail("n", "(N-1) d must be at most 2 for tensor quadrature");
    c.betas = r.numbers("betas", c.betas);
    cfg.effective["laplace"] = r.effective();
  }
  if (selected("detconv")) {
    auto r = section("detconv");
    auto& c = cfg.detconv;
    c.potential = r.potential("potential", detconv_default_potential());
    const int d = c.potential.dim();
    c.x = r.vec("x", d == 1 ? scalar(0.1) : zeros(2), d);
    c.v = r.vec("v", d == 1 ? scalar(0.8) : Vec::Constant(2, 0.5), d);
    c.t = r.number("t", c.t, true);
    c.ns = r.integers("ns", c.ns);
    for (int n : c.ns)
      if (n < 8 || !power_of_two(n)) r.fail("ns", "entries must be powers of two >= 8");
    if (!std::is_sorted(c.ns.begin(), c.ns.end()) || std::adjacent_find(c.ns.begin(), c.ns.end()) != c.ns.end())
      r.fail("ns", "must be strictly increasing");
    c.modes = static_cast<int>(r.integer("modes", c.modes, 8, 4096));
    c.reference_dt = r.number("reference_dt", c.reference_dt, true);
    c.q = r.number("q", c.q);
    c.q_time = r.number("q_time", c.q_time, true);
    cfg.effective["detconv"] = r.effective();
  }
  if (selected("ground")) {
    auto r = section("ground");
    auto& c = cfg.ground;
    c.potential = r.potential("potential", two_maxima_potential().negated());
    c.hbars = r.numbers("hbars", c.hbars);
    c.m = static_cast<int>(r.integer("m", c.m, 0, 1 << 20));
    const int d = c.potential.dim();
    for (double hb : c.hbars) {
      const long need = minimum_grid_size(hb);
      if (c.m > 0 && c.m < need) r.fail("m", fmt::format("resolution guard: hbar {} needs m >= {}", hb, need));
      if (d == 2 && std::max<long>(c.m, need) > 512) r.fail("hbars", fmt::format("hbar {} needs a 2D grid above 512^2", hb));
    }
    cfg.effective["ground"] = r.effective();
  }
  if (selected("concentrate")) {
    auto r = section("concentrate");
    auto& c = cfg.concentrate;
    c.potential = r.potential("potential", two_maxima_potential().negated());
    const int d = c.potential.dim();
    c.wells = r.wells("wells", d == 1 ? std::vector<Well>{{scalar(0.0), 0.0}, {scalar(0.5), 0.0}} : std::vector<Well>{},
                      d);
    c.hbars = r.numbers("hbars", c.hbars);
    c.m = static_cast<int>(r.integer("m", c.m, 0, 1 << 20));
    for (double hb : c.hbars)
      if (d == 2 && std::max<long>(c.m, minimum_grid_size(hb)) > 512)
        r.fail("hbars", fmt::format("hbar {} needs a 2D grid above 512^2", hb));
    cfg.effective["concentrate"] = r.effective();
  }
  if (selected("properties")) {
    auto r = section("properties");
    auto& c = cfg.properties;
    c.schur_trials = static_cast<int>(r.integer("schur_trials", c.schur_trials, 1, 1000000));
    c.minimizers = static_cast<int>(r.integer("minimizers", c.minimizers, 1, 100000));
    c.tridiag_trials = static_cast<int>(r.integer("tridiag_trials", c.tridiag_trials, 1, 100000));
    c.box_trials = static_cast<int>(r.integer("box_trials", c.box_trials, 1, 10000));
    cfg.effective["properties"] = r.effective();
  }
  return cfg;
}

}  // namespace mather::cli
