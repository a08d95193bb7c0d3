#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "bridgesolve/harness.hpp"
#include "bridgesolve/models.hpp"
#include "bridgesolve/schedule.hpp"
#include "bridgesolve/solvers.hpp"

namespace bridgesolve {

enum class PriorKind { Gaussian, Gmm, Constant, AffineLambda };

/// Prior (or test-denoiser) description from the model block.
struct PriorSpec {
  PriorKind kind = PriorKind::Gaussian;
  GaussianPrior gaussian;
  GmmPrior gmm;
  Vector c0;  // constant value, or affine intercept
  Vector c1;  // affine slope in lambda

  Eigen::Index dim() const;
  std::unique_ptr<Denoiser> make_denoiser() const;
  void validate() const;
};

enum class EndpointSource { Fixed, Sampled };

struct ModelConfig {
  PriorSpec prior;
  EndpointSource endpoint_source = EndpointSource::Fixed;
  Vector endpoint;            // Fixed
  PriorSpec endpoint_dist;    // Sampled: Gaussian or Gmm
};

struct SolverBlock {
  SolverKind kind = SolverKind::DBMSolver;
  int order = 2;
  double midpoint_ratio = 0.5;
  std::optional<std::uint64_t> nfe_budget;
  std::size_t n_steps = 11;
  EpsilonMode epsilon_mode = EpsilonMode::GridStep;
  double epsilon = 1e-4;
  GridScheme grid = GridScheme::UniformT;
  double churn_ratio = 0.33;
};

struct RunBlock {
  std::uint64_t seed = 0;
  std::size_t batch = 16;
  std::string output_dir = "bridgesolve_out";
  bool record_timing = true;
};

struct IntegralsBlock {
  std::size_t samples = 1000;
  double min_spread = 1e-4;
  double max_spread = 5.0;
  double lambda_T_min = -6.0;
  double lambda_T_max = 2.0;
  double rel_tol = 1e-8;
};

struct BandedStudy {
  std::string name;
  OdeMethod method = OdeMethod::ExpK2;
  double band_lo = 0.0;
  double band_hi = 0.0;
};

struct ConvergenceBlock {
  std::vector<std::size_t> step_counts{8, 16, 32, 64, 128};
  double start = 0.5;
  double end = 1e-4;
  GridScheme grid = GridScheme::UniformLambda;
  std::size_t reference_substeps = 20000;
  std::size_t batch = 4;
  std::vector<BandedStudy> studies;
};

struct BenchmarkCell {
  SolverKind kind = SolverKind::DBMSolver;
  int order = 2;
  std::uint64_t nfe = 6;
  /// Per-cell overrides of the solver block.
  std::optional<EpsilonMode> epsilon_mode;
  std::optional<GridScheme> grid;
};

struct BenchmarkBlock {
  std::vector<BenchmarkCell> cells;
  std::size_t reference_steps = 100000;
  std::size_t n_projections = 128;
  std::uint64_t projection_seed = 7;
};

/// Resolved experiment configuration with every default materialized.
struct ExperimentConfig {
  ScheduleParams schedule;
  ModelConfig model;
  SolverBlock solver;
  RunBlock run;
  IntegralsBlock integrals;
  ConvergenceBlock convergence;
  BenchmarkBlock benchmark;

  /// Parses JSON text; throws ConfigError on malformed or invalid input.
  static ExperimentConfig from_json_text(const std::string& text);
  static ExperimentConfig from_file(const std::string& path);
  std::string to_json_text() const;

  void validate() const;

  /// Grid length for `kind` / `order` from nfe_budget (or n_steps). Throws
  /// ConfigError naming the nearest reachable budgets when the budget is not
  /// reachable.
  std::size_t resolve_steps(SolverKind kind, int order, std::optional<std::uint64_t> nfe) const;

  SolverConfig solver_config() const;
  SolverConfig solver_config_for(SolverKind kind, int order, std::size_t n_steps) const;

  /// Bridge problem for `batch` trajectories; sampled endpoints draw one
  /// column per trajectory from the endpoint distribution.
  BridgeProblem make_problem(std::size_t batch) const;
};

}  // namespace bridgesolve
