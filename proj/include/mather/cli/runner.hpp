#pragma once

#include <ostream>
#include <string>

#include <nlohmann/json.hpp>

#include "mather/cli/config.hpp"
#include "mather/cli/scenarios.hpp"

namespace mather::cli {

enum ExitCode : int { kExitOk = 0, kExitAssertion = 1, kExitConfig = 2, kExitNumerical = 3 };

struct RunOutcome {
  int exit_code = kExitOk;
  nlohmann::json manifest;
  std::vector<Assertion> assertions;
  std::string failed_stage;  // set on exit 3
};

const char* code_version();

/// Creates the output directory, writes manifest.json before the first stage and
/// finalizes it after the last. Input errors raised while running remove every
/// file this run created (exit 2). The report goes to `log`.
RunOutcome run(const ExperimentConfig& cfg, std::ostream& log);

}  // namespace mather::cli
