#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "bridgesolve/bridge.hpp"
#include "bridgesolve/rng.hpp"
#include "bridgesolve/schedule.hpp"

namespace bridgesolve {

enum class SolverKind { DBMSolver, EulerMaruyama, HybridHeun, ODES3, DBIM1 };
enum class EpsilonMode { GridStep, FixedEpsilon };
enum class StepKind { InitSDE, OdeK1, OdeK2, FinalEuler, Baseline };

std::string_view to_string(SolverKind kind);
std::string_view to_string(EpsilonMode mode);
std::string_view to_string(StepKind kind);
SolverKind solver_kind_from_string(std::string_view name);
EpsilonMode epsilon_mode_from_string(std::string_view name);

struct SolverConfig {
  SolverKind kind = SolverKind::DBMSolver;
  /// Taylor order of the exponential-integrator ODE steps (DBMSolver only).
  int order = 2;
  /// Position of the second-order midpoint in lambda, in (0, 1).
  double midpoint_ratio = 0.5;
  TimeGrid grid;
  std::uint64_t seed = 0;
  /// GridStep: the initial SDE step lands on t_{N-1}. FixedEpsilon: it lands
  /// on T - epsilon, which replaces t_{N-1} in the grid.
  EpsilonMode epsilon_mode = EpsilonMode::GridStep;
  /// Also the offset below T at which baseline drifts are evaluated when a
  /// step starts at T, where the bridge scores are singular.
  double epsilon = 1e-4;
  /// Fraction of each interval covered by the Hybrid Heun stochastic substep.
  double churn_ratio = 0.33;
  /// Keep x_after in every StepRecord.
  bool record_states = true;

  void validate(const ScheduleParams& p) const;
};

struct StepRecord {
  double from_t = 0.0;
  double to_t = 0.0;
  int nfe_used = 0;
  StepKind step_kind = StepKind::Baseline;
  Batch x_after;
};

struct RunRecord {
  SolverConfig config;
  std::vector<StepRecord> steps;
  Batch x_final;
  std::uint64_t total_nfe = 0;
  double wall_ms = 0.0;
};

/// NFE spent by `kind` on a grid with n_steps intervals.
std::uint64_t nfe_for_steps(SolverKind kind, int order, std::size_t n_steps);

/// Smallest n_steps >= 3 whose NFE equals `budget`, or 0 if none does.
std::size_t steps_for_nfe(SolverKind kind, int order, std::uint64_t budget);

/// Reachable budgets immediately below and above `budget`.
std::pair<std::uint64_t, std::uint64_t> nearest_budgets(SolverKind kind, int order, std::uint64_t budget);

// ---------------------------------------------------------------------------
// DBMSolver building blocks.

/// First-order exponential-integrator step of the reverse bridge SDE from s
/// to t, with a given x0 prediction d_s = D(x_s) and standard-normal z.
Batch sde_step_order1_given(const BridgeProblem& problem, const Batch& x_s, double s, double t,
                            const Batch& d_s, const Batch& z);

/// As above, evaluating the denoiser once at (x_s, s) and drawing z from
/// `noise` at stream step `step_index`.
Batch sde_step_order1(const BridgeProblem& problem, const Batch& x_s, double s, double t,
                      const Denoiser& denoiser, const NoiseStream& noise, std::uint64_t step_index);

/// Closed form of  int_{lam_s}^{lam_t} e^{2 lam} (lam - lam_s)^n / n! / sqrt(rho(lam, lam_T)) d lam
/// for n in {0, 1}. Higher n has no elementary antiderivative.
double exp_integral(int n, double lam_s, double lam_t, double lam_T);

/// Coefficients of the exact PF-ODE solution from s to t:
///   x_t = from_state x_s + from_endpoint x_T + integral_scale * (exponential integral of D).
struct OdeCoeffs {
  double from_state = 1.0;
  double from_endpoint = 0.0;
  double integral_scale = 0.0;
  double lambda_s = 0.0;
  double lambda_t = 0.0;
  double lambda_T = 0.0;
};

OdeCoeffs ode_coeffs(const BridgeProblem& problem, double s, double t);

/// k = 1 exponential-integrator step with a given D(x_s).
Batch ode_step_k1_given(const BridgeProblem& problem, const Batch& x_s, double s, double t,
                        const Batch& d_s);
Batch ode_step_k1(const BridgeProblem& problem, const Batch& x_s, double s, double t,
                  const Denoiser& denoiser);

/// k = 2 single-step scheme: the lambda-derivative of D is estimated from a
/// k = 1 predictor at lambda_s + r (lambda_t - lambda_s). Two evaluations.
Batch ode_step_k2(const BridgeProblem& problem, const Batch& x_s, double s, double t,
                  const Denoiser& denoiser, double midpoint_ratio = 0.5);

/// Euler step of the PF ODE from t_1 down to 0.
Batch final_euler_step(const BridgeProblem& problem, const Batch& x_1, double t_1,
                       const Denoiser& denoiser);

// ---------------------------------------------------------------------------
// Baseline building blocks.

/// Posterior-reparameterization (DBIM-1) deterministic step.
Batch dbim1_step(const BridgeProblem& problem, const Batch& x_s, double s, double t,
                 const Denoiser& denoiser);

/// Euler-Maruyama step of the reverse bridge SDE; z is standard normal.
Batch euler_maruyama_step_given(const BridgeProblem& problem, const Batch& x_s, double s, double t,
                                const Batch& d_s, const Batch& z, double eval_t);

/// Heun step of the PF ODE (two evaluations).
Batch heun_step(const BridgeProblem& problem, const Batch& x_s, double s, double t,
                const Denoiser& denoiser);

enum class OdeMethod { ExpK1, ExpK2, Heun };

/// Runs `method` over consecutive nodes (descending, all in [t_min, T)).
Batch integrate_ode_phase(const BridgeProblem& problem, const Batch& x, const std::vector<double>& nodes,
                          OdeMethod method, const Denoiser& denoiser, double midpoint_ratio = 0.5);

// ---------------------------------------------------------------------------
// Samplers. Each starts `batch` trajectories at x_T and uses noise stream
// (config.seed, first_trajectory + column).

RunRecord dbmsolver_sample(const BridgeProblem& problem, const SolverConfig& config,
                           const Denoiser& denoiser, Eigen::Index batch,
                           std::uint64_t first_trajectory = 0);
RunRecord em_sde_sample(const BridgeProblem& problem, const SolverConfig& config,
                        const Denoiser& denoiser, Eigen::Index batch, std::uint64_t first_trajectory = 0);
RunRecord hybrid_heun_sample(const BridgeProblem& problem, const SolverConfig& config,
                             const Denoiser& denoiser, Eigen::Index batch,
                             std::uint64_t first_trajectory = 0);
RunRecord odes3_sample(const BridgeProblem& problem, const SolverConfig& config,
                       const Denoiser& denoiser, Eigen::Index batch, std::uint64_t first_trajectory = 0);
RunRecord dbim1_sample(const BridgeProblem& problem, const SolverConfig& config,
                       const Denoiser& denoiser, Eigen::Index batch, std::uint64_t first_trajectory = 0);

/// Dispatches on config.kind.
RunRecord sample(const BridgeProblem& problem, const SolverConfig& config, const Denoiser& denoiser,
                 Eigen::Index batch, std::uint64_t first_trajectory = 0);

}  // namespace bridgesolve
