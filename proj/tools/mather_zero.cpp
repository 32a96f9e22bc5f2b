#include <filesystem>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "mather/cli/config.hpp"
#include "mather/cli/runner.hpp"

using namespace mather;
using namespace mather::cli;

int main(int argc, char** argv) {
  CLI::App app{"Gibbs, weak-KAM and semiclassical experiments on the torus"};
  app.set_version_flag("--version", std::string(code_version()));

  std::string scenario, sub, config;
  std::optional<std::string> out, potential;
  std::optional<std::uint64_t> seed;
  std::optional<std::vector<double>> omega, betas, hbars;
  std::optional<long> m, horizon, trials, n_max, n;

  app.add_option("scenario", scenario,
                 "flat, transfer, weakkam, identity (hessian-identity), thouless, laplace, detconv, ground, "
                 "concentrate, properties, all, or semiclassics <laplace|detconv|ground|concentrate>")
      ->required();
  app.add_option("sub", sub, "sub-command of semiclassics");
  app.add_option("--config", config, "JSON config file")->required();
  app.add_option("--out", out, "output directory (replaces config \"output\")");
  app.add_option("--seed", seed, "random seed (replaces config \"seed\")");
  app.add_option("--potential", potential, "potential JSON file for every selected scenario that takes one");
  app.add_option("--omega", omega, "rotation vector omega")->expected(1, 2);
  app.add_option("--beta-list", betas, "inverse temperatures")->expected(1, -1);
  app.add_option("--hbar-list", hbars, "Planck constants")->expected(1, -1);
  app.add_option("--m", m, "grid nodes per dimension");
  app.add_option("--horizon", horizon, "finite-horizon length");
  app.add_option("--trials", trials, "random trials (identity)");
  app.add_option("--n-max", n_max, "largest orbit length (identity)");
  app.add_option("--n", n, "orbit length or number of points");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  ExperimentConfig cfg;
  try {
    Overrides ov;
    ov.seed = seed;
    ov.output = out;
    if (potential) ov.section_values["potential"] = std::filesystem::absolute(*potential).string();
    if (omega) ov.section_values["omega"] = *omega;
    if (betas) ov.section_values["betas"] = *betas;
    if (hbars) ov.section_values["hbars"] = *hbars;
    if (m) ov.section_values["m"] = *m;
    if (horizon) ov.section_values["horizon"] = *horizon;
    if (trials) ov.section_values["trials"] = *trials;
    if (n_max) ov.section_values["n_max"] = *n_max;
    if (n) ov.section_values["n"] = *n;
    cfg = load_config(config, resolve_scenario(scenario, sub), ov);
  } catch (const InputError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    return run(cfg, std::cout).exit_code;
  } catch (const InputError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
}
