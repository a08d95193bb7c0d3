#include "bridgesolve/solvers.hpp"

#include <chrono>
#include <cmath>
#include <string>

#include "bridgesolve/errors.hpp"

namespace bridgesolve {

namespace {

// v - atan(v), accurate for small v.
double v_minus_atan(double v) {
  if (std::abs(v) < 0.1) {
    const double v2 = v * v;
    double term = v * v2;
    double sum = 0.0;
    for (int k = 3; k <= 25; k += 2) {
      sum += term / k * ((k / 2) % 2 == 1 ? 1.0 : -1.0);
      term *= v2;
    }
    return sum;
  }
  return v - std::atan(v);
}

void require_order(double s, double t, const char* what) {
  if (!(t < s)) throw DomainError(std::string(what) + ": requires t < s");
}

Batch start_batch(const BridgeProblem& problem, Eigen::Index batch) {
  if (batch < 1) throw ConfigError("sampler: batch must be >= 1");
  problem.check_batch(problem.dim(), batch);
  Batch x(problem.dim(), batch);
  for (Eigen::Index j = 0; j < batch; ++j) x.col(j) = problem.endpoint(j);
  return x;
}

// Time at which a baseline step starting at s evaluates its drift.
double baseline_eval_time(const ScheduleParams& p, const SolverConfig& config, double s) {
  return std::max(std::min(s, p.T - config.epsilon), p.t_min);
}

class RunBuilder {
 public:
  RunBuilder(const SolverConfig& config, const Denoiser& denoiser)
      : denoiser_(denoiser), start_count_(denoiser.evaluations()), start_(std::chrono::steady_clock::now()) {
    record_.config = config;
  }

  void add(double from_t, double to_t, int nfe, StepKind kind, const Batch& x) {
    StepRecord step{from_t, to_t, nfe, kind, {}};
    if (record_.config.record_states) step.x_after = x;
    record_.steps.push_back(std::move(step));
    record_.total_nfe += static_cast<std::uint64_t>(nfe);
  }

  RunRecord finish(Batch x) {
    record_.x_final = std::move(x);
    const auto elapsed = std::chrono::steady_clock::now() - start_;
    record_.wall_ms = std::chrono::duration<double, std::milli>(elapsed).count();
    if (denoiser_.evaluations() - start_count_ != record_.total_nfe) {
      throw std::logic_error("sampler: NFE bookkeeping disagrees with the denoiser counter");
    }
    return std::move(record_);
  }

 private:
  const Denoiser& denoiser_;
  std::uint64_t start_count_;
  std::chrono::steady_clock::time_point start_;
  RunRecord record_;
};

void require_kind(const SolverConfig& config, SolverKind kind) {
  if (config.kind != kind) {
    throw ConfigError("sampler: config kind is " + std::string(to_string(config.kind)) + ", expected " +
                      std::string(to_string(kind)));
  }
}

}  // namespace

std::string_view to_string(SolverKind kind) {
  switch (kind) {
    case SolverKind::DBMSolver: return "DBMSolver";
    case SolverKind::EulerMaruyama: return "EulerMaruyama";
    case SolverKind::HybridHeun: return "HybridHeun";
    case SolverKind::ODES3: return "ODES3";
    case SolverKind::DBIM1: return "DBIM1";
  }
  return "?";
}

std::string_view to_string(EpsilonMode mode) {
  return mode == EpsilonMode::GridStep ? "GridStep" : "FixedEpsilon";
}

std::string_view to_string(StepKind kind) {
  switch (kind) {
    case StepKind::InitSDE: return "InitSDE";
    case StepKind::OdeK1: return "OdeK1";
    case StepKind::OdeK2: return "OdeK2";
    case StepKind::FinalEuler: return "FinalEuler";
    case StepKind::Baseline: return "Baseline";
  }
  return "?";
}

SolverKind solver_kind_from_string(std::string_view name) {
  for (auto kind : {SolverKind::DBMSolver, SolverKind::EulerMaruyama, SolverKind::HybridHeun,
                    SolverKind::ODES3, SolverKind::DBIM1}) {
    if (name == to_string(kind)) return kind;
  }
  throw ConfigError("unknown solver kind '" + std::string(name) + "'");
}

EpsilonMode epsilon_mode_from_string(std::string_view name) {
  if (name == "GridStep") return EpsilonMode::GridStep;
  if (name == "FixedEpsilon") return EpsilonMode::FixedEpsilon;
  throw ConfigError("unknown epsilon mode '" + std::string(name) + "'");
}

void SolverConfig::validate(const ScheduleParams& p) const {
  grid.validate(p);
  if (kind == SolverKind::DBMSolver && (order < 1 || order > 2)) {
    throw UnsupportedOrderError("DBMSolver order must be 1 or 2: order >= 3 needs a non-elementary antiderivative");
  }
  if (!(midpoint_ratio > 0.0 && midpoint_ratio < 1.0)) throw ConfigError("midpoint_ratio must lie in (0, 1)");
  if (!(churn_ratio > 0.0 && churn_ratio < 1.0)) throw ConfigError("churn_ratio must lie in (0, 1)");
  if (!(epsilon > 0.0 && epsilon < p.T - p.t_min)) throw ConfigError("epsilon must lie in (0, T - t_min)");
  if (kind == SolverKind::DBMSolver && epsilon_mode == EpsilonMode::FixedEpsilon &&
      !(p.T - epsilon > grid.times[2])) {
    throw ConfigError("FixedEpsilon: T - epsilon must lie above t_{N-2}");
  }
}

std::uint64_t nfe_for_steps(SolverKind kind, int order, std::size_t n_steps) {
  const auto n = static_cast<std::uint64_t>(n_steps);
  switch (kind) {
    case SolverKind::DBMSolver: return 2 + static_cast<std::uint64_t>(order) * (n - 2);
    case SolverKind::DBIM1:
    case SolverKind::EulerMaruyama: return n;
    case SolverKind::HybridHeun: return 3 * n - 1;
    case SolverKind::ODES3: return 2 * n - 2;
  }
  return 0;
}

std::size_t steps_for_nfe(SolverKind kind, int order, std::uint64_t budget) {
  for (std::size_t n = 3; nfe_for_steps(kind, order, n) <= budget; ++n) {
    if (nfe_for_steps(kind, order, n) == budget) return n;
  }
  return 0;
}

std::pair<std::uint64_t, std::uint64_t> nearest_budgets(SolverKind kind, int order, std::uint64_t budget) {
  std::uint64_t below = 0;
  std::size_t n = 3;
  while (nfe_for_steps(kind, order, n) < budget) below = nfe_for_steps(kind, order, n++);
  std::uint64_t above = nfe_for_steps(kind, order, n);
  if (above == budget) above = nfe_for_steps(kind, order, n + 1);
  return {below, above};
}

Batch sde_step_order1_given(const BridgeProblem& problem, const Batch& x_s, double s, double t,
                            const Batch& d_s, const Batch& z) {
  if (t > s) throw DomainError("sde_step_order1: requires t <= s");
  const ScheduleParams& p = problem.schedule;
  const double lam_s = half_log_snr(p, s);
  const double lam_t = half_log_snr(p, t);
  // SNR_s / SNR_t = exp(2 (lam_s - lam_t)).
  const double ratio = std::exp(2.0 * (lam_s - lam_t));
  const double one_minus = -std::expm1(2.0 * (lam_s - lam_t));
  const double alpha_t = alpha(p, t);
  const double state_coeff = ratio * std::exp(log_alpha(p, t) - log_alpha(p, s));
  Batch out;
  affine_combine(out, state_coeff, x_s, 0.0, problem, alpha_t * one_minus, d_s);
  if (z.rows() != x_s.rows() || z.cols() != x_s.cols()) throw ConfigError("sde_step_order1: noise shape");
  out += std::sqrt(sigma_sq(p, t) * one_minus) * z;
  return out;
}

Batch sde_step_order1(const BridgeProblem& problem, const Batch& x_s, double s, double t,
                      const Denoiser& denoiser, const NoiseStream& noise, std::uint64_t step_index) {
  require_order(s, t, "sde_step_order1");
  const Batch d_s = denoiser(x_s, s, problem);
  return sde_step_order1_given(problem, x_s, s, t, d_s, noise.normal(x_s.rows(), x_s.cols(), step_index));
}

double exp_integral(int n, double lam_s, double lam_t, double lam_T) {
  if (n < 0) throw DomainError("exp_integral: n must be >= 0");
  if (n >= 2) {
    throw UnsupportedOrderError("exp_integral: n >= 2 has a non-elementary antiderivative");
  }
  if (!(lam_T <= lam_s && lam_s <= lam_t)) {
    throw DomainError("exp_integral: requires lam_T <= lam_s <= lam_t");
  }
  if (lam_s == lam_t) return 0.0;
  const double scale = std::exp(2.0 * lam_T);
  const double rho_s = rho(lam_s, lam_T);
  const double rho_t = rho(lam_t, lam_T);
  const double v_s = std::sqrt(rho_s);
  const double v_t = std::sqrt(rho_t);
  // v_t - v_s without cancellation: (rho_t - rho_s) / (v_t + v_s).
  const double rho_diff = std::exp(2.0 * (lam_s - lam_T)) * std::expm1(2.0 * (lam_t - lam_s));
  const double dv = rho_diff / (v_t + v_s);
  if (n == 0) return scale * dv;

  // (v_t - atan v_t) - (v_s - atan v_s) = dv - atan(w) with w = dv / (1 + v_t v_s).
  const double prod = v_t * v_s;
  const double w = dv / (1.0 + prod);
  const double q_diff = dv * prod / (1.0 + prod) + v_minus_atan(w);
  return scale * ((lam_t - lam_s) * v_t - q_diff);
}

OdeCoeffs ode_coeffs(const BridgeProblem& problem, double s, double t) {
  const ScheduleParams& p = problem.schedule;
  if (t > s) throw DomainError("ode_coeffs: requires t <= s");
  OdeCoeffs c;
  c.lambda_s = half_log_snr(p, s);
  c.lambda_t = half_log_snr(p, t);
  c.lambda_T = half_log_snr(p, p.T);
  const double rho_s = rho(c.lambda_s, c.lambda_T);
  if (!(rho_s > 0.0)) {
    throw SingularityError("ode_coeffs: s = T makes the state coefficient diverge");
  }
  const double rho_t = rho(c.lambda_t, c.lambda_T);
  const double root = std::sqrt(rho_t / rho_s);
  const double log_alpha_t = log_alpha(p, t);
  c.from_state = std::exp(log_alpha_t - log_alpha(p, s) + 2.0 * (c.lambda_s - c.lambda_t)) * root;
  c.from_endpoint = std::exp(log_alpha_t - log_alpha(p, p.T) + 2.0 * (c.lambda_T - c.lambda_t)) * (1.0 - root);
  c.integral_scale = std::exp(log_alpha_t - 2.0 * c.lambda_t) * std::sqrt(rho_t);
  return c;
}

Batch ode_step_k1_given(const BridgeProblem& problem, const Batch& x_s, double s, double t,
                        const Batch& d_s) {
  const OdeCoeffs c = ode_coeffs(problem, s, t);
  const double i0 = exp_integral(0, c.lambda_s, c.lambda_t, c.lambda_T);
  Batch out;
  affine_combine(out, c.from_state, x_s, c.from_endpoint, problem, c.integral_scale * i0, d_s);
  return out;
}

Batch ode_step_k1(const BridgeProblem& problem, const Batch& x_s, double s, double t,
                  const Denoiser& denoiser) {
  require_order(s, t, "ode_step_k1");
  ode_coeffs(problem, s, t);  // reject s = T before spending an evaluation
  return ode_step_k1_given(problem, x_s, s, t, denoiser(x_s, s, problem));
}

Batch ode_step_k2(const BridgeProblem& problem, const Batch& x_s, double s, double t,
                  const Denoiser& denoiser, double midpoint_ratio) {
  require_order(s, t, "ode_step_k2");
  if (!(midpoint_ratio > 0.0 && midpoint_ratio < 1.0)) {
    throw ConfigError("ode_step_k2: midpoint ratio must lie in (0, 1)");
  }
  const OdeCoeffs c = ode_coeffs(problem, s, t);
  const double h = c.lambda_t - c.lambda_s;
  const double t_mid = t_of_lambda(problem.schedule, c.lambda_s + midpoint_ratio * h);

  const Batch d_s = denoiser(x_s, s, problem);
  const Batch x_mid = ode_step_k1_given(problem, x_s, s, t_mid, d_s);
  const Batch d_mid = denoiser(x_mid, t_mid, problem);
  const Batch slope = (d_mid - d_s) / (midpoint_ratio * h);

  const double i0 = exp_integral(0, c.lambda_s, c.lambda_t, c.lambda_T);
  const double i1 = exp_integral(1, c.lambda_s, c.lambda_t, c.lambda_T);
  Batch out;
  affine_combine(out, c.from_state, x_s, c.from_endpoint, problem, c.integral_scale * i0, d_s);
  out += (c.integral_scale * i1) * slope;
  return out;
}

Batch final_euler_step(const BridgeProblem& problem, const Batch& x_1, double t_1,
                       const Denoiser& denoiser) {
  return x_1 + (0.0 - t_1) * pf_ode_rhs(problem, x_1, t_1, denoiser);
}

Batch dbim1_step(const BridgeProblem& problem, const Batch& x_s, double s, double t,
                 const Denoiser& denoiser) {
  require_order(s, t, "dbim1_step");
  const BridgeCoeffs cs = bridge_coeffs(problem.schedule, s);
  if (!(cs.one_minus_ratio > 0.0)) throw SingularityError("dbim1_step: s = T");
  const BridgeCoeffs ct = bridge_coeffs(problem.schedule, t);
  const Batch d_s = denoiser(x_s, s, problem);
  // x_t = a_t x_T + b_t D + (c_t / c_s) (x_s - a_s x_T - b_s D)
  const double ratio = std::sqrt(ct.c_sq / cs.c_sq);
  Batch out;
  affine_combine(out, ratio, x_s, ct.a - ratio * cs.a, problem, ct.b - ratio * cs.b, d_s);
  return out;
}

Batch euler_maruyama_step_given(const BridgeProblem& problem, const Batch& x_s, double s, double t,
                                const Batch& d_s, const Batch& z, double eval_t) {
  if (t > s) throw DomainError("euler_maruyama_step: requires t <= s");
  // The drift is affine in (x, x_T, D); fold it into one pass.
  const SemilinearSplit split = semilinear_split(problem, eval_t);
  const BridgeCoeffs c = bridge_coeffs(problem.schedule, eval_t);
  const double dt = t - s;
  const double extra = 0.5 * c.g_sq / c.c_sq;  // SDE drift = PF drift minus half the score term
  const double cx = 1.0 + dt * (split.linear + extra);
  const double cT = dt * (split.endpoint_coeff - extra * c.a);
  const double cd = dt * (split.denoised_coeff - extra * c.b);
  Batch out;
  affine_combine(out, cx, x_s, cT, problem, cd, d_s);
  out += (std::sqrt(c.g_sq) * std::sqrt(s - t)) * z;
  return out;
}

Batch heun_step(const BridgeProblem& problem, const Batch& x_s, double s, double t,
                const Denoiser& denoiser) {
  require_order(s, t, "heun_step");
  const Batch d1 = pf_ode_rhs(problem, x_s, s, denoiser);
  const Batch x_pred = x_s + (t - s) * d1;
  const Batch d2 = pf_ode_rhs(problem, x_pred, t, denoiser);
  return x_s + (0.5 * (t - s)) * (d1 + d2);
}

Batch integrate_ode_phase(const BridgeProblem& problem, const Batch& x, const std::vector<double>& nodes,
                          OdeMethod method, const Denoiser& denoiser, double midpoint_ratio) {
  Batch state = x;
  for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
    switch (method) {
      case OdeMethod::ExpK1: state = ode_step_k1(problem, state, nodes[i], nodes[i + 1], denoiser); break;
      case OdeMethod::ExpK2:
        state = ode_step_k2(problem, state, nodes[i], nodes[i + 1], denoiser, midpoint_ratio);
        break;
      case OdeMethod::Heun: state = heun_step(problem, state, nodes[i], nodes[i + 1], denoiser); break;
    }
  }
  return state;
}

RunRecord dbmsolver_sample(const BridgeProblem& problem, const SolverConfig& config,
                           const Denoiser& denoiser, Eigen::Index batch, std::uint64_t first_trajectory) {
  require_kind(config, SolverKind::DBMSolver);
  config.validate(problem.schedule);
  std::vector<double> nodes = config.grid.times;
  if (config.epsilon_mode == EpsilonMode::FixedEpsilon) nodes[1] = problem.T() - config.epsilon;
  const std::size_t n = nodes.size() - 1;
  const NoiseStream noise(config.seed, first_trajectory);

  RunBuilder run(config, denoiser);
  // The single evaluation D(x_T) serves both the initialization and the
  // initial stochastic update.
  Batch x = sde_step_order1(problem, start_batch(problem, batch), nodes[0], nodes[1], denoiser, noise, 0);
  run.add(nodes[0], nodes[1], 1, StepKind::InitSDE, x);

  for (std::size_t m = 1; m + 1 < n; ++m) {
    if (config.order == 1) {
      x = ode_step_k1(problem, x, nodes[m], nodes[m + 1], denoiser);
      run.add(nodes[m], nodes[m + 1], 1, StepKind::OdeK1, x);
    } else {
      x = ode_step_k2(problem, x, nodes[m], nodes[m + 1], denoiser, config.midpoint_ratio);
      run.add(nodes[m], nodes[m + 1], 2, StepKind::OdeK2, x);
    }
  }
  x = final_euler_step(problem, x, nodes[n - 1], denoiser);
  run.add(nodes[n - 1], 0.0, 1, StepKind::FinalEuler, x);
  return run.finish(std::move(x));
}

RunRecord dbim1_sample(const BridgeProblem& problem, const SolverConfig& config, const Denoiser& denoiser,
                       Eigen::Index batch, std::uint64_t first_trajectory) {
  require_kind(config, SolverKind::DBIM1);
  config.validate(problem.schedule);
  const std::vector<double>& nodes = config.grid.times;
  const std::size_t n = nodes.size() - 1;
  const NoiseStream noise(config.seed, first_trajectory);

  RunBuilder run(config, denoiser);
  Batch x = sde_step_order1(problem, start_batch(problem, batch), nodes[0], nodes[1], denoiser, noise, 0);
  run.add(nodes[0], nodes[1], 1, StepKind::InitSDE, x);
  for (std::size_t m = 1; m + 1 < n; ++m) {
    x = dbim1_step(problem, x, nodes[m], nodes[m + 1], denoiser);
    run.add(nodes[m], nodes[m + 1], 1, StepKind::Baseline, x);
  }
  x = final_euler_step(problem, x, nodes[n - 1], denoiser);
  run.add(nodes[n - 1], 0.0, 1, StepKind::FinalEuler, x);
  return run.finish(std::move(x));
}

RunRecord em_sde_sample(const BridgeProblem& problem, const SolverConfig& config, const Denoiser& denoiser,
                        Eigen::Index batch, std::uint64_t first_trajectory) {
  require_kind(config, SolverKind::EulerMaruyama);
  config.validate(problem.schedule);
  const ScheduleParams& p = problem.schedule;
  const std::vector<double>& nodes = config.grid.times;
  const std::size_t n = nodes.size() - 1;
  const NoiseStream noise(config.seed, first_trajectory);

  RunBuilder run(config, denoiser);
  Batch x = start_batch(problem, batch);
  Batch z(x.rows(), x.cols());
  const std::vector<std::uint64_t> keys = noise.trajectory_keys(batch);
  for (std::size_t m = 0; m + 1 < n; ++m) {
    const double eval_t = baseline_eval_time(p, config, nodes[m]);
    const Batch d = denoiser(x, eval_t, problem);
    noise.fill_normal_keyed(z, m, keys);
    x = euler_maruyama_step_given(problem, x, nodes[m], nodes[m + 1], d, z, eval_t);
    run.add(nodes[m], nodes[m + 1], 1, StepKind::Baseline, x);
  }
  x = final_euler_step(problem, x, nodes[n - 1], denoiser);
  run.add(nodes[n - 1], 0.0, 1, StepKind::FinalEuler, x);
  return run.finish(std::move(x));
}

RunRecord hybrid_heun_sample(const BridgeProblem& problem, const SolverConfig& config,
                             const Denoiser& denoiser, Eigen::Index batch, std::uint64_t first_trajectory) {
  require_kind(config, SolverKind::HybridHeun);
  config.validate(problem.schedule);
  const ScheduleParams& p = problem.schedule;
  const std::vector<double>& nodes = config.grid.times;
  const std::size_t n = nodes.size() - 1;
  const NoiseStream noise(config.seed, first_trajectory);

  RunBuilder run(config, denoiser);
  Batch x = start_batch(problem, batch);
  Batch z(x.rows(), x.cols());
  const std::vector<std::uint64_t> keys = noise.trajectory_keys(batch);
  for (std::size_t m = 0; m < n; ++m) {
    const double s = nodes[m];
    const double t = nodes[m + 1];
    const double t_hat = s + config.churn_ratio * (t - s);
    const double eval_t = baseline_eval_time(p, config, s);
    const Batch d = denoiser(x, eval_t, problem);
    noise.fill_normal_keyed(z, m, keys);
    x = euler_maruyama_step_given(problem, x, s, t_hat, d, z, eval_t);
    run.add(s, t_hat, 1, StepKind::Baseline, x);
    if (t > 0.0) {
      x = heun_step(problem, x, t_hat, t, denoiser);
      run.add(t_hat, t, 2, StepKind::Baseline, x);
    } else {
      const double from = std::max(t_hat, p.t_min);
      x = x + (t - t_hat) * pf_ode_rhs(problem, x, from, denoiser);
      run.add(t_hat, t, 1, StepKind::FinalEuler, x);
    }
  }
  return run.finish(std::move(x));
}

RunRecord odes3_sample(const BridgeProblem& problem, const SolverConfig& config, const Denoiser& denoiser,
                       Eigen::Index batch, std::uint64_t first_trajectory) {
  require_kind(config, SolverKind::ODES3);
  config.validate(problem.schedule);
  const ScheduleParams& p = problem.schedule;
  const std::vector<double>& nodes = config.grid.times;
  const std::size_t n = nodes.size() - 1;
  const NoiseStream noise(config.seed, first_trajectory);

  RunBuilder run(config, denoiser);
  Batch x = start_batch(problem, batch);
  const double eval_t = baseline_eval_time(p, config, nodes[0]);
  const Batch d = denoiser(x, eval_t, problem);
  x = euler_maruyama_step_given(problem, x, nodes[0], nodes[1], d, noise.normal(x.rows(), x.cols(), 0), eval_t);
  run.add(nodes[0], nodes[1], 1, StepKind::InitSDE, x);
  for (std::size_t m = 1; m + 1 < n; ++m) {
    x = heun_step(problem, x, nodes[m], nodes[m + 1], denoiser);
    run.add(nodes[m], nodes[m + 1], 2, StepKind::Baseline, x);
  }
  x = final_euler_step(problem, x, nodes[n - 1], denoiser);
  run.add(nodes[n - 1], 0.0, 1, StepKind::FinalEuler, x);
  return run.finish(std::move(x));
}

RunRecord sample(const BridgeProblem& problem, const SolverConfig& config, const Denoiser& denoiser,
                 Eigen::Index batch, std::uint64_t first_trajectory) {
  switch (config.kind) {
    case SolverKind::DBMSolver: return dbmsolver_sample(problem, config, denoiser, batch, first_trajectory);
    case SolverKind::EulerMaruyama: return em_sde_sample(problem, config, denoiser, batch, first_trajectory);
    case SolverKind::HybridHeun: return hybrid_heun_sample(problem, config, denoiser, batch, first_trajectory);
    case SolverKind::ODES3: return odes3_sample(problem, config, denoiser, batch, first_trajectory);
    case SolverKind::DBIM1: return dbim1_sample(problem, config, denoiser, batch, first_trajectory);
  }
  throw ConfigError("unknown solver kind");
}

}  // namespace bridgesolve
