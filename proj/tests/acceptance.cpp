// Runs every scenario from one config and prints one verdict per criterion.
// usage: acceptance <config.json> <work dir>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "mather/cli/config.hpp"
#include "mather/cli/runner.hpp"

using namespace mather;
using namespace mather::cli;
namespace fs = std::filesystem;

namespace {

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream b;
  b << in.rdbuf();
  return b.str();
}

std::vector<std::string> csv_files(const fs::path& dir) {
  std::vector<std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".csv") out.push_back(fs::relative(e.path(), dir).string());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 3) {
    std::cerr << "usage: acceptance <config.json> <work dir>\n";
    return 2;
  }
  const fs::path work = argv[2];
  fs::remove_all(work / "run1");
  fs::remove_all(work / "run2");

  std::vector<Assertion> all;
  std::ostringstream log;
  try {
    Overrides first;
    first.output = (work / "run1").string();
    const auto cfg = load_config(argv[1], scenario_names(), first);
    const auto outcome = run(cfg, log);
    if (outcome.exit_code == kExitNumerical || outcome.exit_code == kExitConfig) {
      std::cout << log.str();
      std::cout << fmt::format("[FAIL] run stopped with exit code {} {}\n", outcome.exit_code, outcome.failed_stage);
      return 1;
    }
    all = outcome.assertions;

    // rerun everything that writes CSV with the same config and seed
    Overrides second;
    second.output = (work / "run2").string();
    std::vector<std::string> again;
    for (const auto& s : scenario_names())
      if (s != "flat" && s != "properties") again.push_back(s);
    std::ostringstream log2;
    const auto rerun = run(load_config(argv[1], again, second), log2);
    const auto files = csv_files(work / "run2");
    int differing = 0;
    std::string which;
    for (const auto& f : files)
      if (!fs::exists(work / "run1" / f) || read_text(work / "run1" / f) != read_text(work / "run2" / f)) {
        ++differing;
        which += " " + f;
      }
    all.push_back({"C9", fmt::format("rerun byte-identical CSV outputs ({} files)", files.size()),
                   static_cast<double>(differing), 0.0,
                   rerun.exit_code == kExitOk && differing == 0 && !files.empty(), which});
  } catch (const std::exception& e) {
    std::cout << log.str();
    std::cout << "[FAIL] acceptance run aborted: " << e.what() << "\n";
    return 1;
  }

  const std::vector<std::pair<std::string, std::string>> criteria = {
      {"C1", "determinant identity"},
      {"C2", "flat baselines"},
      {"C3", "Thouless limit"},
      {"C4", "weak-KAM consistency"},
      {"C5", "Gibbs concentration"},
      {"C6", "semiclassical selection"},
      {"C7", "continuous determinant convergence"},
      {"C8", "property kit"},
      {"C9", "stationarity, gauge, reruns"},
      {"Laplace", "Laplace asymptotics"},
  };
  bool ok = true;
  for (const auto& [id, title] : criteria) {
    int n = 0;
    bool pass = true;
    std::string lines;
    for (const auto& a : all)
      if (a.criterion == id) {
        ++n;
        pass &= a.passed;
        lines += fmt::format("    {} {}: {:.6g} (bound {:.6g}){}\n", a.passed ? "ok  " : "FAIL", a.name, a.value, a.bound,
                             a.detail.empty() ? "" : " " + a.detail);
      }
    pass &= n > 0;
    ok &= pass;
    std::cout << fmt::format("[{}] {} {}\n{}", pass ? "PASS" : "FAIL", id, title, lines);
  }
  std::cout << (ok ? "all criteria passed\n" : "some criteria failed\n");
  return ok ? 0 : 1;
}
