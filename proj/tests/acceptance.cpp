#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "bridgesolve/commands.hpp"
#include "bridgesolve/config.hpp"
#include "bridgesolve/harness.hpp"
#include "bridgesolve/models.hpp"
#include "bridgesolve/solvers.hpp"
#include "oracles.hpp"

using namespace bridgesolve;
namespace fs = std::filesystem;

namespace {

constexpr double kIntegralRelTol = 1e-8;
constexpr double kExactTol = 1e-8;
constexpr std::size_t kExactSubsteps = 100000;
constexpr double kDbimTol = 1e-10;
constexpr double kSplitTol = 1e-10;
constexpr int kRandomPoints = 1000;

const fs::path kConfigDir = BRIDGESOLVE_CONFIG_DIR;

struct Outcome {
  std::string verdict;  // PASS, TIE or FAIL
  std::string detail;
};

int failures = 0;

void report(int id, double limit_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {"FAIL", std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (secs > limit_s && o.verdict != "FAIL") {
    o.verdict = "FAIL";
    o.detail += "; over runtime limit";
  }
  if (o.verdict == "FAIL") ++failures;
  std::printf("criterion %d: %s  %s  [%.2f s, limit %.0f s]\n", id, o.verdict.c_str(), o.detail.c_str(), secs,
              limit_s);
  std::fflush(stdout);
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

Outcome pass_if(bool ok, const std::string& detail) { return {ok ? "PASS" : "FAIL", detail}; }

Outcome integrals() {
  ExperimentConfig c = ExperimentConfig::from_file((kConfigDir / "gaussian_ve.json").string());
  c.integrals.samples = kRandomPoints;
  c.integrals.min_spread = 1e-4;
  c.integrals.rel_tol = kIntegralRelTol;
  const IntegralSweep sweep = run_integrals(c);
  return pass_if(sweep.rows.size() >= 2 * kRandomPoints && sweep.max_rel_err <= kIntegralRelTol,
                 std::to_string(sweep.rows.size()) + " evaluations, max rel err " + fmt("%.3g", sweep.max_rel_err));
}

Outcome exact_degeneracy() {
  double worst = 0.0;
  for (const ScheduleParams& p : {ScheduleParams::ve(), ScheduleParams::vp()}) {
    const BridgeProblem problem(p, (Batch(2, 1) << 0.6, -0.8).finished());
    const ConstantDenoiser den((Vector(2) << -0.4, 1.1).finished());
    for (int order : {1, 2}) {
      SolverConfig sc;
      sc.kind = SolverKind::DBMSolver;
      sc.order = order;
      sc.grid = make_grid(p, 11);
      sc.seed = 13;
      const RunRecord run = dbmsolver_sample(problem, sc, den, 4);
      const StepRecord& init = run.steps.front();
      const StepRecord& last_ode = run.steps[run.steps.size() - 2];
      const Batch ref = fine_reference_ode(problem, init.x_after, init.to_t, last_ode.to_t, den, kExactSubsteps);
      worst = std::max(worst, (last_ode.x_after - ref).norm());
    }
  }
  return pass_if(worst <= kExactTol, "k=1,2 on VE and VP, max L2 gap " + fmt("%.3g", worst));
}

Outcome dbim_equivalence() {
  std::mt19937_64 gen(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (const bool vp : {false, true}) {
    const oracle::Sched o{vp};
    const ScheduleParams p = vp ? ScheduleParams::vp() : ScheduleParams::ve();
    for (int i = 0; i < kRandomPoints; ++i) {
      const double s = p.t_min + (p.T - p.t_min) * u(gen) * 0.9999;
      const double t = p.t_min + (s - p.t_min) * u(gen);
      const double xT = 6.0 * u(gen) - 3.0, xs = 6.0 * u(gen) - 3.0, d = 6.0 * u(gen) - 3.0;
      const BridgeProblem problem(p, Batch::Constant(1, 1, xT));
      const double got = ode_step_k1_given(problem, Batch::Constant(1, 1, xs), s, t, Batch::Constant(1, 1, d))(0, 0);
      worst = std::max(worst, std::abs(got - oracle::dbim1(o, xs, s, t, xT, d)));
    }
  }
  return pass_if(worst <= kDbimTol, std::to_string(2 * kRandomPoints) + " points, max abs diff " + fmt("%.3g", worst));
}

Outcome convergence() {
  const ExperimentConfig c = ExperimentConfig::from_file((kConfigDir / "gaussian_ve.json").string());
  const std::vector<StudyOutcome> studies = run_convergence(c);
  bool ok = studies.size() == 3;
  std::string detail;
  for (const StudyOutcome& s : studies) {
    ok = ok && s.in_band();
    detail += s.study.name + " slope " + fmt("%.3f", s.report.fitted_slope) + " in [" + fmt("%.1f", s.study.band_lo) +
              ", " + fmt("%.1f", s.study.band_hi) + "]; ";
  }
  return pass_if(ok, detail);
}

Outcome split_identity() {
  std::mt19937_64 gen(99);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (const ScheduleParams& p : {ScheduleParams::ve(), ScheduleParams::vp()}) {
    const BridgeProblem problem(p, (Batch(2, 1) << -0.7, 0.4).finished());
    for (int i = 0; i < kRandomPoints / 2; ++i) {
      const double t = p.t_min + (p.T - p.t_min) * u(gen) * 0.999;
      const Batch x = (Batch(2, 1) << 6.0 * u(gen) - 3.0, 6.0 * u(gen) - 3.0).finished();
      const Batch d = (Batch(2, 1) << 4.0 * u(gen) - 2.0, 4.0 * u(gen) - 2.0).finished();
      const Batch direct = pf_ode_rhs_given(problem, x, t, d);
      const Batch split = semilinear_split(problem, t).rhs(problem, x, d);
      worst = std::max(worst, (direct - split).norm() / std::max(1.0, direct.norm()));
    }
  }
  return pass_if(worst <= kSplitTol, std::to_string(kRandomPoints) + " points, max error / max(1, |rhs|) " +
                                        fmt("%.3g", worst));
}

Outcome nfe_budgets() {
  const ScheduleParams p = ScheduleParams::ve();
  const BridgeProblem problem(p, Batch::Constant(1, 1, 0.3));
  const GaussianPosteriorDenoiser den({Vector::Zero(1), Vector::Ones(1)});
  std::string detail;
  bool ok = true;
  for (auto [n, want] : {std::pair<std::size_t, std::uint64_t>{4, 6}, {11, 20}}) {
    SolverConfig sc;
    sc.grid = make_grid(p, n);
    const std::uint64_t before = den.evaluations();
    const RunRecord run = dbmsolver_sample(problem, sc, den, 8);
    const std::uint64_t delta = den.evaluations() - before;
    ok = ok && run.total_nfe == want && delta == want;
    detail += "N=" + std::to_string(n) + " reports " + std::to_string(run.total_nfe) + ", counter " +
              std::to_string(delta) + " (expected " + std::to_string(want) + "); ";
  }
  return pass_if(ok, detail);
}

const BenchmarkRow& find_cell(const BenchmarkResult& r, SolverKind kind, std::uint64_t nfe, EpsilonMode mode) {
  for (const BenchmarkRow& row : r.rows) {
    if (row.cell.kind == kind && row.nfe == nfe && row.cell.epsilon_mode.value_or(EpsilonMode::GridStep) == mode) {
      return row;
    }
  }
  throw std::runtime_error("benchmark cell missing");
}

// Verdict of SW(ours) <= SW(base) against the resample noise floor.
std::string compare(double ours, double base, double floor) {
  const double margin = base - ours;
  if (margin >= floor) return "PASS";
  if (margin > -floor) return "TIE";
  return "FAIL";
}

Outcome efficiency() {
  ExperimentConfig c = ExperimentConfig::from_file((kConfigDir / "gmm2d_benchmark.json").string());
  BenchmarkCell fixed6{SolverKind::DBMSolver, 2, 6, EpsilonMode::FixedEpsilon, std::nullopt};
  BenchmarkCell fixed20{SolverKind::DBMSolver, 2, 20, EpsilonMode::FixedEpsilon, std::nullopt};
  c.benchmark.cells.push_back(fixed6);
  c.benchmark.cells.push_back(fixed20);
  const BenchmarkResult r = run_benchmark(c);
  const double floor = r.noise_floor;
  const double dbm6 = find_cell(r, SolverKind::DBMSolver, 6, EpsilonMode::GridStep).sw;
  const double hh = find_cell(r, SolverKind::HybridHeun, 20, EpsilonMode::GridStep).sw;
  const double dbm20 = find_cell(r, SolverKind::DBMSolver, 20, EpsilonMode::GridStep).sw;
  const double odes3 = find_cell(r, SolverKind::ODES3, 28, EpsilonMode::GridStep).sw;
  const std::string a = compare(dbm6, hh, floor);
  const std::string b = compare(dbm20, odes3, floor);
  const std::string verdict = (a == "FAIL" || b == "FAIL") ? "FAIL" : (a == "TIE" || b == "TIE") ? "TIE" : "PASS";
  std::ostringstream d;
  d << "noise floor " << fmt("%.4f", floor) << "; DBMSolver@6 " << fmt("%.4f", dbm6) << " vs HybridHeun@20 "
    << fmt("%.4f", hh) << " margin " << fmt("%+.4f", hh - dbm6) << " -> " << a << "; DBMSolver@20 "
    << fmt("%.4f", dbm20) << " vs ODES3@28 " << fmt("%.4f", odes3) << " margin " << fmt("%+.4f", odes3 - dbm20)
    << " -> " << b << "; (HybridHeun 18 NFE is unreachable, 20 used)";
  const double f6 = find_cell(r, SolverKind::DBMSolver, 6, EpsilonMode::FixedEpsilon).sw;
  const double f20 = find_cell(r, SolverKind::DBMSolver, 20, EpsilonMode::FixedEpsilon).sw;
  d << "\n  supplementary (FixedEpsilon initial step, not graded): DBMSolver@6 " << fmt("%.4f", f6) << " -> "
    << compare(f6, hh, floor) << "; DBMSolver@20 " << fmt("%.4f", f20) << " -> " << compare(f20, odes3, floor);
  return {verdict, d.str()};
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_command(const std::string& command, const fs::path& config, const fs::path& out) {
  const std::string cfg = config.string();
  const std::string dir = out.string();
  const char* argv[] = {"bridgesolve", command.c_str(), "--config", cfg.c_str(), "--out", dir.c_str()};
  return run_cli(6, argv);
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "bridgesolve_acceptance";
  fs::remove_all(root);
  fs::create_directories(root);
  ExperimentConfig bench = ExperimentConfig::from_file((kConfigDir / "gmm2d_benchmark.json").string());
  bench.run.batch = 2000;
  bench.run.record_timing = false;
  bench.benchmark.reference_steps = 2000;
  const fs::path bench_cfg = root / "benchmark.json";
  std::ofstream(bench_cfg) << bench.to_json_text();
  const fs::path gauss_cfg = kConfigDir / "gaussian_ve.json";

  const std::vector<std::pair<std::string, fs::path>> commands{
      {"integrals", gauss_cfg}, {"convergence", gauss_cfg}, {"sample", gauss_cfg}, {"benchmark", bench_cfg}};
  std::size_t files = 0;
  for (const auto& [command, cfg] : commands) {
    // Identical invocations, output directory included; snapshot between runs.
    const fs::path out = root / command;
    if (run_command(command, cfg, out) != 0) return {"FAIL", command + " exited with an error"};
    std::map<std::string, std::string> first;
    for (const auto& entry : fs::directory_iterator(out)) first[entry.path().filename().string()] = slurp(entry.path());
    fs::remove_all(out);
    if (run_command(command, cfg, out) != 0) return {"FAIL", command + " exited with an error"};
    std::size_t second = 0;
    for (const auto& entry : fs::directory_iterator(out)) {
      const auto it = first.find(entry.path().filename().string());
      if (it == first.end() || it->second != slurp(entry.path())) {
        return {"FAIL", command + ": " + entry.path().filename().string() + " differs between runs"};
      }
      ++second;
    }
    if (second != first.size()) return {"FAIL", command + ": file set differs between runs"};
    files += second;
  }
  return {"PASS", std::to_string(commands.size()) + " commands, " + std::to_string(files) + " files byte-identical"};
}

}  // namespace

int main() {
  report(1, 10, integrals);
  report(2, 30, exact_degeneracy);
  report(3, 10, dbim_equivalence);
  report(4, 120, convergence);
  report(5, 5, split_identity);
  report(6, 1, nfe_budgets);
  report(7, 180, efficiency);
  report(8, 180, determinism);
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
