#include "mather/cli/runner.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <set>

#include <fmt/format.h>

#ifndef MATHER_CODE_VERSION
#define MATHER_CODE_VERSION "unknown"
#endif

namespace mather::cli {

using nlohmann::json;
namespace fs = std::filesystem;

const char* code_version() { return MATHER_CODE_VERSION; }

namespace {

// Files and directories created by this run, for cleanup on input errors.
class OutputDir {
 public:
  explicit OutputDir(fs::path root) : root_(std::move(root)) {
    if (!fs::exists(root_)) {
      fs::create_directories(root_);
      created_root_ = true;
    } else if (!fs::is_directory(root_)) {
      throw ConfigError(fmt::format("output path '{}' is not a directory", root_.string()));
    }
  }

  void write(const OutputFile& f) {
    const fs::path p = root_ / f.name;
    if (!fs::exists(p.parent_path())) {
      fs::create_directories(p.parent_path());
      dirs_.insert(p.parent_path());
    }
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out.write(f.content.data(), static_cast<std::streamsize>(f.content.size()));
    if (!out) throw std::runtime_error("cannot write " + p.string());
    if (std::find(names_.begin(), names_.end(), f.name) == names_.end()) names_.push_back(f.name);
    checksum_[f.name] = sha256_hex(f.content);
  }

  void discard() {
    std::error_code ec;
    if (created_root_) {
      fs::remove_all(root_, ec);
      return;
    }
    for (const auto& n : names_) fs::remove(root_ / n, ec);
    for (const auto& d : dirs_) fs::remove(d, ec);
  }

  const fs::path& root() const { return root_; }
  const std::vector<std::string>& names() const { return names_; }
  const std::map<std::string, std::string>& checksums() const { return checksum_; }

 private:
  fs::path root_;
  bool created_root_ = false;
  std::vector<std::string> names_;
  std::set<fs::path> dirs_;
  std::map<std::string, std::string> checksum_;
};

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json assertion_json(const Assertion& a) {
  return {{"criterion", a.criterion}, {"name", a.name}, {"value", a.value},
          {"bound", a.bound},         {"passed", a.passed}, {"detail", a.detail}};
}

void report(std::ostream& log, const Assertion& a) {
  log << fmt::format("[{}] {} {}: {:.6g} (bound {:.6g}){}\n", a.passed ? "PASS" : "FAIL", a.criterion, a.name, a.value,
                     a.bound, a.detail.empty() ? "" : " - " + a.detail);
}

}  // namespace

RunOutcome run(const ExperimentConfig& cfg, std::ostream& log) {
  RunOutcome outcome;
  OutputDir dir(cfg.output);
  json manifest = {{"status", "running"},
                   {"code_version", code_version()},
                   {"started", utc_now()},
                   {"config", cfg.effective},
                   {"stages", json::array()},
                   {"outputs", json::object()}};
  auto write_manifest = [&] { dir.write(json_file("manifest.json", manifest)); };
  write_manifest();

  auto finish = [&](const std::string& status) {
    json outputs = json::object();
    for (const auto& [name, sum] : dir.checksums())
      if (name != "manifest.json") outputs[name] = {{"sha256", sum}};
    manifest["outputs"] = outputs;
    manifest["status"] = status;
    manifest["finished"] = utc_now();
    json as = json::array();
    for (const auto& a : outcome.assertions) as.push_back(assertion_json(a));
    manifest["assertions"] = as;
    write_manifest();
    outcome.manifest = manifest;
  };

  auto timed = [&](const std::string& stage, auto&& body) {
    const auto t0 = std::chrono::steady_clock::now();
    body();
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
    manifest["stages"].push_back({{"stage", stage}, {"seconds", dt.count()}});
  };

  std::string current = "setup";
  try {
    for (const auto& name : cfg.scenarios) {
      current = name;
      log << fmt::format("== {}\n", name);
      ScenarioResult r;
      timed(name, [&] { r = run_scenario(name, cfg); });
      auto& stage_json = manifest["stages"].back();
      json subs = json::array();
      for (const auto& [sub, sec] : r.stage_seconds) subs.push_back({{"stage", sub}, {"seconds", sec}});
      stage_json["sub_stages"] = subs;
      for (const auto& f : r.files) dir.write(f);
      for (const auto& a : r.assertions) {
        report(log, a);
        outcome.assertions.push_back(a);
      }
      write_manifest();
    }

    current = "plots";
    timed("plots", [&] {
      for (const auto& name : dir.names())
        if (find_schema(name)) {
          if (const std::string why = schema_violation(dir.root(), name); !why.empty())
            throw SchemaError(fmt::format("schema mismatch in {}: {}", name, why));
        }
      for (const auto& f : emit_plot_data(dir.root(), plot_context(cfg))) {
        dir.write(f);
        if (const std::string why = schema_violation(dir.root(), f.name); !why.empty())
          throw SchemaError(fmt::format("schema mismatch in {}: {}", f.name, why));
      }
      dir.write(generated_readme(dir.names()));
    });
  } catch (const InputError& e) {
    dir.discard();
    log << fmt::format("input error in {}: {}\n", current, e.what());
    outcome.exit_code = kExitConfig;
    return outcome;
  } catch (const NumericalError& e) {
    outcome.failed_stage = e.stage();
    manifest["failed_stage"] = e.stage();
    manifest["error"] = e.what();
    finish("numerical_failure");
    log << fmt::format("numerical failure in stage {}: {}\n", e.stage(), e.what());
    outcome.exit_code = kExitNumerical;
    return outcome;
  } catch (const SchemaError& e) {
    outcome.failed_stage = "plots";
    manifest["failed_stage"] = "plots";
    manifest["error"] = e.what();
    finish("schema_error");
    log << fmt::format("numerical failure in stage plots: {}\n", e.what());
    outcome.exit_code = kExitNumerical;
    return outcome;
  }

  const auto failed = std::count_if(outcome.assertions.begin(), outcome.assertions.end(),
                                    [](const Assertion& a) { return !a.passed; });
  finish(failed ? "assertion_failure" : "passed");
  log << fmt::format("{} of {} assertions passed; outputs in {}\n", outcome.assertions.size() - failed,
                     outcome.assertions.size(), dir.root().string());
  if (failed) {
    log << "failed:\n";
    for (const auto& a : outcome.assertions)
      if (!a.passed) report(log, a);
  }
  outcome.exit_code = failed ? kExitAssertion : kExitOk;
  return outcome;
}

}  // namespace mather::cli
