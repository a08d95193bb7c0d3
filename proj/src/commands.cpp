#include "bridgesolve/commands.hpp"

#include <chrono>
#include <cmath>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"

#include "bridgesolve/errors.hpp"
#include "bridgesolve/io.hpp"

namespace bridgesolve {

using nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kReferenceSalt = 0x7265666572656e63ULL;
constexpr std::uint64_t kResampleSalt = 0x726573616d706c65ULL;

double log_uniform(double u, double lo, double hi) { return std::exp(std::log(lo) + u * (std::log(hi) - std::log(lo))); }

Batch start_columns(const BridgeProblem& problem, std::size_t batch) {
  Batch x(problem.dim(), static_cast<Eigen::Index>(batch));
  for (Eigen::Index j = 0; j < x.cols(); ++j) x.col(j) = problem.endpoint(j);
  return x;
}

std::string json_text(const ordered_json& doc) { return doc.dump(2) + "\n"; }

void write_config_echo(const ExperimentConfig& config, const fs::path& out_dir) {
  write_text_file(out_dir / "config_resolved.json", config.to_json_text());
}

CsvTable sample_table(const Batch& x, const char* index_name) {
  std::vector<std::string> header{index_name};
  for (Eigen::Index i = 0; i < x.rows(); ++i) header.push_back("x" + std::to_string(i));
  CsvTable table(header);
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    std::vector<std::string> cells{std::to_string(j)};
    for (Eigen::Index i = 0; i < x.rows(); ++i) cells.push_back(format_double(x(i, j)));
    table.row(std::move(cells));
  }
  return table;
}

}  // namespace

IntegralSweep run_integrals(const ExperimentConfig& config) {
  const IntegralsBlock& q = config.integrals;
  const NoiseStream noise(config.run.seed);
  IntegralSweep sweep;
  // The oracle runs well inside the acceptance threshold.
  const double oracle_rel_tol = 1e-3 * sweep.threshold;
  for (std::size_t i = 0; i < q.samples; ++i) {
    const double lam_T = q.lambda_T_min + noise.uniform(i, 0, 0) * (q.lambda_T_max - q.lambda_T_min);
    const double lam_s = lam_T + log_uniform(noise.uniform(i, 0, 1), q.min_spread, q.max_spread);
    const double lam_t = lam_s + log_uniform(noise.uniform(i, 0, 2), q.min_spread, q.max_spread);
    for (int n : {0, 1}) {
      IntegralRow row{lam_T, lam_s, lam_t, n, 0.0, 0.0, 0.0};
      row.closed_form = exp_integral(n, lam_s, lam_t, lam_T);
      row.quadrature = quadrature_oracle_relative(n, lam_s, lam_t, lam_T, oracle_rel_tol);
      row.rel_err = std::abs(row.closed_form - row.quadrature) / std::abs(row.quadrature);
      sweep.max_rel_err = std::max(sweep.max_rel_err, row.rel_err);
      sweep.rows.push_back(row);
    }
  }
  for (int n : {0, 1}) {
    const double lam_T = q.lambda_T_min;
    const double lam_s = lam_T + q.max_spread;
    sweep.rows.push_back({lam_T, lam_s, lam_s, n, exp_integral(n, lam_s, lam_s, lam_T),
                          quadrature_oracle_relative(n, lam_s, lam_s, lam_T, oracle_rel_tol), 0.0});
  }
  return sweep;
}

bool StudyOutcome::in_band() const {
  if (report.exact) return true;
  return report.fitted_slope >= study.band_lo && report.fitted_slope <= study.band_hi;
}

std::vector<StudyOutcome> run_convergence(const ExperimentConfig& config) {
  const ConvergenceBlock& c = config.convergence;
  const BridgeProblem problem = config.make_problem(c.batch);
  const std::unique_ptr<Denoiser> denoiser = config.model.prior.make_denoiser();
  const NoiseStream noise(config.run.seed);
  const Batch x_start =
      sde_step_order1(problem, start_columns(problem, c.batch), problem.T(), c.start, *denoiser, noise, 0);

  ConvergenceSetup setup;
  setup.start = c.start;
  setup.end = c.end;
  setup.scheme = c.grid;
  setup.reference_substeps = c.reference_substeps;
  setup.midpoint_ratio = config.solver.midpoint_ratio;
  const Batch reference = fine_reference_ode(problem, x_start, c.start, c.end, *denoiser, c.reference_substeps);

  std::vector<StudyOutcome> out;
  for (const BandedStudy& study : c.studies) {
    setup.method = study.method;
    StudyOutcome outcome{study, convergence_study(problem, x_start, reference, *denoiser, setup, c.step_counts)};
    outcome.report.label = study.name;
    out.push_back(std::move(outcome));
  }
  return out;
}

Batch em_reference(const ExperimentConfig& config, const BridgeProblem& problem, const Denoiser& denoiser,
                   std::size_t steps, std::uint64_t seed) {
  SolverConfig sc = config.solver_config_for(SolverKind::EulerMaruyama, 1, steps);
  sc.grid = make_grid(config.schedule, steps, GridScheme::UniformT);
  sc.seed = seed;
  sc.record_states = false;
  return em_sde_sample(problem, sc, denoiser, problem.x_T.cols() > 1 ? problem.x_T.cols()
                                                                      : static_cast<Eigen::Index>(config.run.batch))
      .x_final;
}

BenchmarkResult run_benchmark(const ExperimentConfig& config) {
  const BenchmarkBlock& b = config.benchmark;
  const BridgeProblem problem = config.make_problem(config.run.batch);
  const std::unique_ptr<Denoiser> denoiser = config.model.prior.make_denoiser();
  const auto batch = static_cast<Eigen::Index>(config.run.batch);

  BenchmarkResult result;
  const auto t0 = std::chrono::steady_clock::now();
  result.reference = em_reference(config, problem, *denoiser, b.reference_steps, mix64(config.run.seed ^ kReferenceSalt));
  result.reference_wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  result.reference_resample =
      em_reference(config, problem, *denoiser, b.reference_steps, mix64(config.run.seed ^ kResampleSalt));
  result.noise_floor =
      sliced_wasserstein(result.reference, result.reference_resample, b.n_projections, b.projection_seed).value;

  for (const BenchmarkCell& cell : b.cells) {
    BenchmarkRow row;
    row.cell = cell;
    row.n_steps = config.resolve_steps(cell.kind, cell.order, cell.nfe);
    SolverConfig sc = config.solver_config_for(cell.kind, cell.order, row.n_steps);
    if (cell.epsilon_mode) sc.epsilon_mode = *cell.epsilon_mode;
    if (cell.grid) sc.grid = make_grid(config.schedule, row.n_steps, *cell.grid);
    sc.record_states = false;
    const RunRecord run = sample(problem, sc, *denoiser, batch);
    row.nfe = run.total_nfe;
    row.wall_ms = run.wall_ms;
    row.sw = sliced_wasserstein(run.x_final, result.reference, b.n_projections, b.projection_seed).value;
    row.samples = run.x_final;
    result.rows.push_back(std::move(row));
  }
  return result;
}

int cmd_integrals(const ExperimentConfig& config, const fs::path& out_dir) {
  write_config_echo(config, out_dir);
  const IntegralSweep sweep = run_integrals(config);
  CsvTable table({"lam_T", "lam_s", "lam_t", "n", "closed_form", "quadrature", "rel_err"});
  for (const IntegralRow& r : sweep.rows) {
    table.row({format_double(r.lam_T), format_double(r.lam_s), format_double(r.lam_t), std::to_string(r.n),
               format_double(r.closed_form), format_double(r.quadrature), format_double(r.rel_err)});
  }
  write_text_file(out_dir / "integrals.csv", table.str());
  std::cerr << "integrals: " << sweep.rows.size() << " rows, max rel_err " << format_double(sweep.max_rel_err)
            << "\n";
  return sweep.passed() ? kExitOk : kExitNumerical;
}

int cmd_convergence(const ExperimentConfig& config, const fs::path& out_dir) {
  write_config_echo(config, out_dir);
  const std::vector<StudyOutcome> outcomes = run_convergence(config);
  CsvTable table({"solver", "N", "error"});
  ordered_json studies = ordered_json::array();
  bool ok = true;
  for (const StudyOutcome& o : outcomes) {
    for (std::size_t i = 0; i < o.report.step_counts.size(); ++i) {
      table.row({o.study.name, std::to_string(static_cast<std::size_t>(o.report.step_counts[i])),
                 format_double(o.report.errors[i])});
    }
    studies.push_back({{"solver", o.study.name},
                       {"fitted_slope", o.report.fitted_slope},
                       {"r_squared", o.report.r_squared},
                       {"exact", o.report.exact},
                       {"band", {o.study.band_lo, o.study.band_hi}},
                       {"in_band", o.in_band()}});
    std::cerr << "convergence: " << o.study.name << " slope " << format_double(o.report.fitted_slope)
              << (o.report.exact ? " (exact)" : "") << (o.in_band() ? "" : " OUT OF BAND") << "\n";
    ok = ok && o.in_band();
  }
  write_text_file(out_dir / "convergence.csv", table.str());
  write_text_file(out_dir / "convergence_summary.json", json_text({{"studies", studies}, {"passed", ok}}));
  return ok ? kExitOk : kExitNumerical;
}

int cmd_benchmark(const ExperimentConfig& config, const fs::path& out_dir) {
  write_config_echo(config, out_dir);
  const BenchmarkResult result = run_benchmark(config);
  const bool timing = config.run.record_timing;
  CsvTable table({"solver", "order", "epsilon_mode", "grid", "nfe", "sw", "wall_ms"});
  ordered_json rows = ordered_json::array();
  for (const BenchmarkRow& r : result.rows) {
    const double wall = timing ? r.wall_ms : 0.0;
    const std::string mode(to_string(r.cell.epsilon_mode.value_or(config.solver.epsilon_mode)));
    const std::string grid(to_string(r.cell.grid.value_or(config.solver.grid)));
    table.row({std::string(to_string(r.cell.kind)), std::to_string(r.cell.order), mode, grid, std::to_string(r.nfe),
               format_double(r.sw), format_double(wall)});
    rows.push_back({{"solver", std::string(to_string(r.cell.kind))},
                    {"order", r.cell.order},
                    {"epsilon_mode", mode},
                    {"grid", grid},
                    {"nfe", r.nfe},
                    {"n_steps", r.n_steps},
                    {"sw", r.sw},
                    {"wall_ms", wall}});
  }
  write_text_file(out_dir / "benchmark.csv", table.str());
  write_text_file(out_dir / "reference.csv", sample_table(result.reference, "sample").str());
  const ordered_json summary{{"samples", config.run.batch},
                             {"reference_steps", config.benchmark.reference_steps},
                             {"n_projections", config.benchmark.n_projections},
                             {"projection_seed", config.benchmark.projection_seed},
                             {"noise_floor", result.noise_floor},
                             {"reference_wall_ms", timing ? result.reference_wall_ms : 0.0},
                             {"cells", rows}};
  write_text_file(out_dir / "benchmark_summary.json", json_text(summary));
  std::cerr << "benchmark: " << result.rows.size() << " cells, noise floor " << format_double(result.noise_floor)
            << "\n";
  return kExitOk;
}

int cmd_sample(const ExperimentConfig& config, const fs::path& out_dir) {
  write_config_echo(config, out_dir);
  const BridgeProblem problem = config.make_problem(config.run.batch);
  const std::unique_ptr<Denoiser> denoiser = config.model.prior.make_denoiser();
  const RunRecord run = sample(problem, config.solver_config(), *denoiser, static_cast<Eigen::Index>(config.run.batch));

  std::vector<std::string> header{"trajectory", "total_nfe"};
  for (Eigen::Index i = 0; i < run.x_final.rows(); ++i) header.push_back("x" + std::to_string(i));
  CsvTable table(header);
  for (Eigen::Index j = 0; j < run.x_final.cols(); ++j) {
    std::vector<std::string> cells{std::to_string(j), std::to_string(run.total_nfe)};
    for (Eigen::Index i = 0; i < run.x_final.rows(); ++i) cells.push_back(format_double(run.x_final(i, j)));
    table.row(std::move(cells));
    write_text_file(out_dir / ("run_" + std::to_string(j) + ".json"),
                    run_record_json(run, j, config.run.record_timing));
  }
  write_text_file(out_dir / "samples.csv", table.str());
  if (!run.x_final.allFinite()) {
    std::cerr << "sample: non-finite final state\n";
    return kExitNumerical;
  }
  return kExitOk;
}

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Bridge diffusion sampler experiments", "bridgesolve"};
  std::string command;
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  app.add_option("command", command, "integrals | convergence | benchmark | sample")
      ->required()
      ->check(CLI::IsMember({"integrals", "convergence", "benchmark", "sample"}));
  app.add_option("--config", config_path, "Experiment config (JSON)")->required();
  app.add_option("--out", out_dir, "Output directory (overrides run.output_dir)");
  CLI::Option* seed_opt = app.add_option("--seed", seed, "Seed (overrides run.seed)");
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  ExperimentConfig config;
  try {
    config = ExperimentConfig::from_file(config_path);
    if (seed_opt->count() > 0) config.run.seed = seed;
    if (!out_dir.empty()) config.run.output_dir = out_dir;
    config.validate();
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }

  const fs::path out = config.run.output_dir;
  try {
    if (command == "integrals") return cmd_integrals(config, out);
    if (command == "convergence") return cmd_convergence(config, out);
    if (command == "benchmark") return cmd_benchmark(config, out);
    return cmd_sample(config, out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const UnsupportedOrderError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  }
}

}  // namespace bridgesolve
