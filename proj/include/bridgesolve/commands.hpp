#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "bridgesolve/config.hpp"
#include "bridgesolve/harness.hpp"

namespace bridgesolve {

/// Exit statuses shared by every command.
enum ExitStatus : int { kExitOk = 0, kExitNumerical = 1, kExitConfig = 2 };

struct IntegralRow {
  double lam_T = 0.0;
  double lam_s = 0.0;
  double lam_t = 0.0;
  int n = 0;
  double closed_form = 0.0;
  double quadrature = 0.0;
  double rel_err = 0.0;
};

struct IntegralSweep {
  std::vector<IntegralRow> rows;
  double max_rel_err = 0.0;
  double threshold = 1e-8;
  bool passed() const { return max_rel_err <= threshold; }
};

/// Closed-form vs quadrature sweep over random valid triples, both orders,
/// plus degenerate lam_s = lam_t rows.
IntegralSweep run_integrals(const ExperimentConfig& config);

struct StudyOutcome {
  BandedStudy study;
  ConvergenceReport report;
  bool in_band() const;
};

/// Deterministic-phase order studies from a shared post-SDE state.
std::vector<StudyOutcome> run_convergence(const ExperimentConfig& config);

struct BenchmarkRow {
  BenchmarkCell cell;
  std::size_t n_steps = 0;
  std::uint64_t nfe = 0;
  double sw = 0.0;
  double wall_ms = 0.0;
  Batch samples;
};

struct BenchmarkResult {
  std::vector<BenchmarkRow> rows;
  Batch reference;
  Batch reference_resample;
  double noise_floor = 0.0;
  double reference_wall_ms = 0.0;
};

/// Samples every benchmark cell at run.batch trajectories and scores it by
/// sliced Wasserstein distance to an Euler-Maruyama reference set.
BenchmarkResult run_benchmark(const ExperimentConfig& config);

/// Euler-Maruyama reference sample set with `steps` uniform-t intervals.
Batch em_reference(const ExperimentConfig& config, const BridgeProblem& problem, const Denoiser& denoiser,
                   std::size_t steps, std::uint64_t seed);

/// Each command writes config_resolved.json plus its own artifacts into
/// out_dir and returns an ExitStatus. Messages go to stderr.
int cmd_integrals(const ExperimentConfig& config, const std::filesystem::path& out_dir);
int cmd_convergence(const ExperimentConfig& config, const std::filesystem::path& out_dir);
int cmd_benchmark(const ExperimentConfig& config, const std::filesystem::path& out_dir);
int cmd_sample(const ExperimentConfig& config, const std::filesystem::path& out_dir);

/// Parses argv-style arguments and dispatches; never throws.
int run_cli(int argc, const char* const* argv);

}  // namespace bridgesolve
