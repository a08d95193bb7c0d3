#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "bridgesolve/commands.hpp"
#include "bridgesolve/config.hpp"
#include "bridgesolve/errors.hpp"

using namespace bridgesolve;
namespace fs = std::filesystem;

namespace {

const char* kBase = R"({
  "schedule": {"kind": "VP", "T": 1.0, "t_min": 0.0001},
  "model": {
    "prior": {"kind": "gmm", "weights": [0.4, 0.6], "means": [[-1.0, 0.0], [1.0, 0.5]], "vars": [[0.05, 0.1], [0.1, 0.05]]},
    "endpoint": {"source": "fixed", "value": [0.2, -0.3]}
  },
  "solver": {"kind": "DBMSolver", "order": 2, "nfe_budget": 6},
  "run": {"seed": 5, "batch": 6, "record_timing": false}
})";

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("bridgesolve_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_config(const fs::path& dir, const std::string& text) {
  const fs::path path = dir / "config.json";
  std::ofstream(path) << text;
  return path;
}

int run(const std::vector<std::string>& args) {
  std::vector<const char*> argv{"bridgesolve"};
  for (const std::string& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string replace(std::string text, const std::string& from, const std::string& to) {
  text.replace(text.find(from), from.size(), to);
  return text;
}

}  // namespace

TEST_CASE("config errors exit with status 2") {
  const fs::path dir = scratch("errors");
  CHECK(run({"sample", "--config", (dir / "missing.json").string()}) == kExitConfig);
  CHECK(run({"sample", "--config", write_config(dir, "{ not json").string()}) == kExitConfig);
  CHECK(run({"sample", "--config", write_config(dir, replace(kBase, "\"batch\"", "\"bogus\": 1, \"batch\"")).string()}) ==
        kExitConfig);
  CHECK(run({"frobnicate", "--config", write_config(dir, kBase).string()}) == kExitConfig);
  CHECK(run({"sample", "--config", write_config(dir, replace(kBase, "\"order\": 2", "\"order\": 3")).string(), "--out",
             (dir / "o").string()}) == kExitConfig);
}

TEST_CASE("unreachable budgets name the nearest reachable ones") {
  const std::string text = replace(replace(kBase, "\"DBMSolver\"", "\"HybridHeun\""), "\"nfe_budget\": 6", "\"nfe_budget\": 18");
  try {
    ExperimentConfig::from_json_text(text);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string what = e.what();
    CHECK(what.find("17") != std::string::npos);
    CHECK(what.find("20") != std::string::npos);
  }
}

TEST_CASE("config round trip") {
  const ExperimentConfig a = ExperimentConfig::from_json_text(kBase);
  const ExperimentConfig b = ExperimentConfig::from_json_text(a.to_json_text());
  CHECK(a.to_json_text() == b.to_json_text());
  CHECK(a.resolve_steps(SolverKind::DBMSolver, 2, 20) == 11);
}

TEST_CASE("sample writes one row per trajectory with a constant NFE") {
  const fs::path dir = scratch("sample");
  REQUIRE(run({"sample", "--config", write_config(dir, kBase).string(), "--out", (dir / "o").string()}) == kExitOk);
  std::ifstream in(dir / "o" / "samples.csv");
  std::string line;
  std::getline(in, line);
  CHECK(line.rfind("trajectory,total_nfe", 0) == 0);
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    CHECK(line.find(",6,") != std::string::npos);
  }
  CHECK(rows == 6);
  CHECK(fs::exists(dir / "o" / "run_0.json"));
  CHECK(fs::exists(dir / "o" / "config_resolved.json"));
}

TEST_CASE("seed changes the samples and identical runs are byte-identical") {
  const fs::path dir = scratch("seed");
  const std::string cfg = write_config(dir, kBase).string();
  REQUIRE(run({"sample", "--config", cfg, "--out", (dir / "a").string()}) == kExitOk);
  REQUIRE(run({"sample", "--config", cfg, "--out", (dir / "b").string()}) == kExitOk);
  REQUIRE(run({"sample", "--config", cfg, "--out", (dir / "c").string(), "--seed", "6"}) == kExitOk);
  CHECK(slurp(dir / "a" / "samples.csv") == slurp(dir / "b" / "samples.csv"));
  CHECK(slurp(dir / "a" / "run_3.json") == slurp(dir / "b" / "run_3.json"));
  CHECK(slurp(dir / "a" / "samples.csv") != slurp(dir / "c" / "samples.csv"));
}

TEST_CASE("sampled endpoints give one endpoint per trajectory") {
  const std::string text = replace(kBase, R"("endpoint": {"source": "fixed", "value": [0.2, -0.3]})",
                                   R"("endpoint": {"source": "sampled", "distribution": {"kind": "gaussian", "mean": [0.0, 0.0], "var": [1.0, 1.0]}})");
  const ExperimentConfig c = ExperimentConfig::from_json_text(text);
  const BridgeProblem p = c.make_problem(4);
  CHECK(p.x_T.cols() == 4);
  CHECK(p.x_T.col(0) != p.x_T.col(1));
}
