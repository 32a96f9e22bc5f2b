#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mather/potential.hpp"
#include "mather/semiclassics.hpp"
#include "mather/types.hpp"

namespace mather::cli {

/// Malformed or inconsistent configuration; maps to exit code 2.
class ConfigError : public InputError {
 public:
  using InputError::InputError;
};

inline const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names = {"flat",   "transfer", "weakkam", "identity",    "thouless", "laplace",
                                                 "detconv", "ground",  "concentrate", "properties"};
  return names;
}

struct FlatConfig {
  double beta = 50.0;
  int m = 256;
  int radius = 4;
  int det_n = 64;
  std::vector<double> omegas = {0.0, 0.1, 0.25, 0.5};
  int critical_m = 40;
  long lyapunov_steps = 50000000;
};

struct TransferConfig {
  TrigPotential potential;
  Vec omega;
  std::vector<double> betas = {50.0, 100.0, 200.0, 400.0};
  int m = 512;
  int radius = 0;  // 0: default_radius
  std::vector<Vec> sites;
  double site_radius = 0.1;
  int flat_site = 0;
  double gauge_beta = 50.0;
  int gauge_m = 64;
  double gauge_amplitude = 0.05;
  double gauge_c = 0.3;
};

struct WeakKamConfig {
  TrigPotential potential;
  Vec omega;
  int m = 128;
  int horizon = 8;
  std::vector<double> betas = {25.0, 50.0, 100.0, 200.0};
  double mather_tol = 1e-8;
};

struct IdentityConfig {
  int trials = 200;
  int n_min = 3;
  int n_max = 64;
  double amplitude = 0.2;
  int modes = 3;
};

struct ThoulessConfig {
  int fixed_n = 200;
  int n = 10000;
  TrigPotential potential;
  double rotation = 0.0;
  double start = 0.1;
  int sample_every = 100;
};

struct LaplaceConfig {
  TrigPotential potential;
  Vec omega;
  Vec x;
  Vec y;
  int n = 2;
  std::vector<double> betas = {100.0, 200.0, 400.0};
};

struct DetconvConfig {
  TrigPotential potential;
  Vec x;
  Vec v;
  double t = 2.0;
  std::vector<int> ns = {64, 128, 256, 512, 1024};
  int modes = 256;
  double reference_dt = 1e-5;
  double q = 3.0;      // constant-curvature closed-form check
  double q_time = 1.2;
};

struct GroundConfig {
  TrigPotential potential;
  std::vector<double> hbars = {0.04, 0.02, 0.01};
  int m = 0;  // 0: minimum_grid_size(hbar)
};

struct ConcentrateConfig {
  TrigPotential potential;
  std::vector<Well> wells;
  std::vector<double> hbars = {0.04, 0.02, 0.01};
  int m = 0;
};

struct PropertiesConfig {
  int schur_trials = 500;
  int minimizers = 100;
  int tridiag_trials = 200;
  int box_trials = 12;
};

/// Named pass/fail thresholds; every key may be overridden under "tolerances".
using Tolerances = std::map<std::string, double>;
const Tolerances& default_tolerances();

struct ExperimentConfig {
  std::vector<std::string> scenarios;  // expanded: "all" lists every scenario
  std::uint64_t seed = 0;
  std::filesystem::path output;
  Tolerances tol;

  FlatConfig flat;
  TransferConfig transfer;
  WeakKamConfig weakkam;
  IdentityConfig identity;
  ThoulessConfig thouless;
  LaplaceConfig laplace;
  DetconvConfig detconv;
  GroundConfig ground;
  ConcentrateConfig concentrate;
  PropertiesConfig properties;

  nlohmann::json effective;  // every value used, defaults included

  double tolerance(const std::string& key) const;
};

/// Command-line values that replace config entries.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output;
  std::map<std::string, nlohmann::json> section_values;  // key -> value, applied to every selected section that has the key
};

/// Canonical scenario name for CLI spellings ("hessian-identity", "semiclassics ground", ...).
std::vector<std::string> resolve_scenario(const std::string& name, const std::string& sub);

/// Reads and validates the config; relative paths resolve against the config file's directory.
ExperimentConfig load_config(const std::filesystem::path& file, const std::vector<std::string>& scenarios,
                             const Overrides& overrides);
ExperimentConfig parse_config(const nlohmann::json& root, const std::filesystem::path& base,
                              const std::vector<std::string>& scenarios, const Overrides& overrides);

}  // namespace mather::cli
