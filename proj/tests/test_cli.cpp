#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "mather/cli/config.hpp"
#include "mather/cli/output.hpp"
#include "mather/cli/runner.hpp"

using namespace mather;
using namespace mather::cli;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / fmt::format("mather_cli_{}_{}", name, ::getpid());
  fs::remove_all(p);
  return p;
}

void write_text(const fs::path& p, const std::string& s) {
  fs::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << s;
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream b;
  b << in.rdbuf();
  return b.str();
}

int run_binary(const std::string& args) {
  const int status = std::system(fmt::format("\"{}\" {} >/dev/null 2>&1", MATHER_ZERO_BIN, args).c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

ExperimentConfig parse(const json& j, const std::vector<std::string>& scen, const Overrides& ov = {}) {
  return parse_config(j, fs::temp_directory_path(), scen, ov);
}

}  // namespace

TEST_CASE("numbers round-trip with 17 significant digits") {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0}) CHECK(std::stod(format_number(v)) == v);
  CHECK(format_number(0.1) == "0.10000000000000001");
}

TEST_CASE("CSV writer: CRLF, schema header, quoting, round trip") {
  CsvTable t("identity.csv");
  t.add({3LL, 1.5, 2.25, 1e-17});
  CHECK_THROWS(t.add({1LL, 2.0}));
  const auto f = t.file();
  CHECK(f.content == "n,det_map,det_hess,rel_err\r\n3,1.5,2.25,1.0000000000000001e-17\r\n");
  const auto back = parse_csv(f.content, "identity.csv");
  CHECK(back.header.size() == 4);
  CHECK(back.number(0, back.column("det_hess")) == 2.25);

  const auto q = parse_csv("a,b\r\n\"x,\"\"y\",2\r\n", "q.csv");
  CHECK(q.rows[0][0] == "x,\"y");
  CHECK_THROWS_AS(parse_csv("a,b\n1,2\n", "lf.csv"), SchemaError);
  CHECK_THROWS_AS(parse_csv("a,b\r\n1,2", "tail.csv"), SchemaError);
  CHECK_THROWS_AS(CsvTable("undeclared.csv"), std::logic_error);

  CsvTable two("marginal.csv", 2);
  CHECK(two.columns() == 4);
  CHECK(two.file().content == "beta,x,y,mu\r\n");
}

TEST_CASE("SHA-256 known answers") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("schema validation names the offending file") {
  const fs::path dir = scratch("schema");
  write_text(dir / "detconv.csv", "N,disc,continuous,error\r\n64,1,1,0.1\r\n");
  CHECK(schema_violation(dir, "detconv.csv").find("header") != std::string::npos);
  try {
    emit_plot_data(dir, {});
    FAIL("no error");
  } catch (const SchemaError& e) {
    CHECK(std::string(e.what()).find("detconv.csv") != std::string::npos);
  }

  write_text(dir / "detconv.csv", "N,disc,continuous,err\r\n64,1,1,0.1\r\n128,1,1,0.2\r\n");
  CHECK(schema_violation(dir, "detconv.csv").empty());
  try {
    emit_plot_data(dir, {});
    FAIL("no error");
  } catch (const SchemaError& e) {
    CHECK(std::string(e.what()).find("plots/detconv.csv") != std::string::npos);
  }

  write_text(dir / "detconv.csv", "N,disc,continuous,err\r\n64,1,1,0.1\r\n128,1,1,zero\r\n");
  CHECK(schema_violation(dir, "detconv.csv").find("not a number") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("plot tables derived from result files") {
  const fs::path dir = scratch("plots");
  write_text(dir / "detconv.csv", "N,disc,continuous,err\r\n64,0.9,1,0.1\r\n128,0.99,1,0.01\r\n");
  write_text(dir / "thouless.csv", "n,running_avg,lyapunov_sum\r\n1,0.5,0.3\r\n2,0.4,0.35\r\n");
  write_text(dir / "marginal.csv", "beta,x,mu\r\n10,0,0.5\r\n10,0.5,0.5\r\n20,0,0.75\r\n20,0.5,0.25\r\n");
  PlotContext ctx;
  ctx.sites = {Vec::Constant(1, 0.0), Vec::Constant(1, 0.5)};
  ctx.site_radius = 0.1;
  std::map<std::string, std::string> got;
  for (const auto& f : emit_plot_data(dir, ctx)) got[f.name] = f.content;
  CHECK(got.at("plots/detconv.csv") == "N,value,reference,abs_err\r\n64,0.90000000000000002,1,0.10000000000000001\r\n"
                                       "128,0.98999999999999999,1,0.01\r\n");
  CHECK(got.at("plots/thouless.csv") == "n,avg,target\r\n1,0.5,0.34999999999999998\r\n2,0.40000000000000002,0.34999999999999998\r\n");
  const auto conc = parse_csv(got.at("plots/concentration_vs_beta.csv"), "c");
  REQUIRE(conc.rows.size() == 4);
  CHECK(conc.number(2, 2) == 0.75);
  CHECK(conc.number(3, 2) == 0.25);

  const auto readme = generated_readme({"detconv.csv", "plots/thouless.csv", "manifest.json"}).content;
  CHECK(readme.find("Columns: N, disc, continuous, err") != std::string::npos);
  CHECK(readme.find("Columns: n, avg, target") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("config: defaults, overrides and rejections") {
  const auto cfg = parse({{"seed", 5}}, {"identity", "laplace"});
  CHECK(cfg.seed == 5);
  CHECK(cfg.identity.trials == 200);
  CHECK(cfg.effective["identity"]["n_max"] == 64);
  CHECK(cfg.effective["laplace"].contains("potential"));
  CHECK_FALSE(cfg.effective.contains("flat"));

  Overrides ov;
  ov.seed = 9;
  ov.section_values["trials"] = 7;
  const auto o = parse({{"seed", 5}}, {"identity"}, ov);
  CHECK(o.seed == 9);
  CHECK(o.identity.trials == 7);

  ov.section_values["betas"] = json::array({1.0});
  CHECK_THROWS_AS(parse({{"seed", 5}}, {"identity"}, ov), ConfigError);

  CHECK_THROWS_AS(parse(json::object(), {"flat"}), ConfigError);
  CHECK_THROWS_AS(parse({{"seed", 1}, {"bogus", 1}}, {"flat"}), ConfigError);
  CHECK_THROWS_AS(parse({{"seed", 1}, {"flat", {{"betta", 3}}}}, {"flat"}), ConfigError);
  CHECK_THROWS_AS(parse({{"seed", 1}, {"transfer", {{"betas", json::array()}}}}, {"transfer"}), ConfigError);
  CHECK_THROWS_AS(parse({{"seed", 1}, {"transfer", {{"potential", "missing.json"}}}}, {"transfer"}), ConfigError);
  CHECK_THROWS_AS(parse({{"seed", 1}, {"detconv", {{"ns", {64, 96}}}}}, {"detconv"}), ConfigError);
  CHECK_THROWS_AS(parse({{"seed", 1}, {"ground", {{"m", 100}}}}, {"ground"}), ConfigError);
  CHECK_THROWS_AS(parse({{"seed", 1}, {"tolerances", {{"nope", 1.0}}}}, {"flat"}), ConfigError);

  CHECK(resolve_scenario("semiclassics", "detconv") == std::vector<std::string>{"detconv"});
  CHECK(resolve_scenario("hessian-identity", "") == std::vector<std::string>{"identity"});
  CHECK(resolve_scenario("all", "").size() == scenario_names().size());
  CHECK_THROWS_AS(resolve_scenario("semiclassics", ""), ConfigError);
  CHECK_THROWS_AS(resolve_scenario("flat", "x"), ConfigError);
  CHECK_THROWS_AS(resolve_scenario("nothing", ""), ConfigError);
}

TEST_CASE("binary: config errors exit 2 and leave no outputs") {
  const fs::path dir = scratch("bin_err");
  write_text(dir / "cfg.json", R"({"seed": 1, "transfer": {"potential": "absent.json"}})");
  CHECK(run_binary(fmt::format("transfer --config {} --out {}", (dir / "cfg.json").string(), (dir / "out").string())) == 2);
  CHECK_FALSE(fs::exists(dir / "out"));

  write_text(dir / "broken.json", "{\"seed\": 1,");
  CHECK(run_binary(fmt::format("identity --config {} --out {}", (dir / "broken.json").string(), (dir / "out").string())) == 2);
  CHECK(run_binary(fmt::format("identity --config {} --out {}", (dir / "absent.json").string(), (dir / "out").string())) == 2);
  CHECK_FALSE(fs::exists(dir / "out"));
  fs::remove_all(dir);
}

TEST_CASE("binary: assertion failure exits 1, reruns are byte identical") {
  const fs::path dir = scratch("bin_run");
  write_text(dir / "cfg.json", R"({"seed": 3, "identity": {"trials": 20, "n_max": 20}})");
  const std::string cfg = (dir / "cfg.json").string();
  REQUIRE(run_binary(fmt::format("hessian-identity --config {} --out {}", cfg, (dir / "a").string())) == 0);
  REQUIRE(run_binary(fmt::format("identity --config {} --out {}", cfg, (dir / "b").string())) == 0);
  CHECK(read_text(dir / "a" / "identity.csv") == read_text(dir / "b" / "identity.csv"));
  CHECK(read_text(dir / "a" / "README.md") == read_text(dir / "b" / "README.md"));
  REQUIRE(run_binary(fmt::format("identity --config {} --seed 4 --out {}", cfg, (dir / "c").string())) == 0);
  CHECK(read_text(dir / "a" / "identity.csv") != read_text(dir / "c" / "identity.csv"));

  const json m = json::parse(read_text(dir / "a" / "manifest.json"));
  CHECK(m["status"] == "passed");
  CHECK(m["outputs"]["identity.csv"]["sha256"] == sha256_hex(read_text(dir / "a" / "identity.csv")));
  CHECK(m["config"]["identity"]["trials"] == 20);
  CHECK(m["stages"][0]["stage"] == "identity");

  write_text(dir / "strict.json", R"({"seed": 3, "identity": {"trials": 20}, "tolerances": {"identity_rel_err": 1e-300}})");
  CHECK(run_binary(fmt::format("identity --config {} --out {}", (dir / "strict.json").string(), (dir / "d").string())) == 1);
  CHECK(json::parse(read_text(dir / "d" / "manifest.json"))["status"] == "assertion_failure");
  fs::remove_all(dir);
}

TEST_CASE("binary: numerical failure exits 3 and names the stage") {
  const fs::path dir = scratch("bin_num");
  // the straight-line seed sits on a maximum of -V; Newton cannot lower its action
  write_text(dir / "cfg.json", R"({"seed": 3, "laplace": {"potential": {"d": 1, "modes": [{"k": [1], "a": -0.3}]},
                                   "x": 0.0, "y": 0.5, "n": 2, "betas": [10]}})");
  const int code = run_binary(fmt::format("laplace --config {} --out {}", (dir / "cfg.json").string(), (dir / "o").string()));
  CHECK(code == 3);
  const json m = json::parse(read_text(dir / "o" / "manifest.json"));
  CHECK(m["status"] == "numerical_failure");
  CHECK(m["failed_stage"].get<std::string>().rfind("laplace.", 0) == 0);
  fs::remove_all(dir);
}
