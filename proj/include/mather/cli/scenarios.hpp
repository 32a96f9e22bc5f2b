#pragma once

#include <string>
#include <vector>

#include "mather/cli/config.hpp"
#include "mather/cli/output.hpp"

namespace mather::cli {

struct Assertion {
  std::string criterion;  // C1..C9 or "Laplace"
  std::string name;
  double value = 0.0;
  double bound = 0.0;
  bool passed = false;
  std::string detail;
};

struct ScenarioResult {
  std::string name;
  std::vector<OutputFile> files;
  std::vector<Assertion> assertions;
  std::vector<std::pair<std::string, double>> stage_seconds;  // sub-stages, in order
};

ScenarioResult run_scenario(const std::string& name, const ExperimentConfig& cfg);

/// Sites and radius used for the concentration plot table.
PlotContext plot_context(const ExperimentConfig& cfg);

}  // namespace mather::cli
