#include "bridgesolve/bridge.hpp"

#include <cmath>
#include <string>

#include "bridgesolve/errors.hpp"

namespace bridgesolve {

namespace {

BridgeCoeffs regular_coeffs(const BridgeProblem& problem, double t, const char* what) {
  BridgeCoeffs c = bridge_coeffs(problem.schedule, t);
  if (!(c.one_minus_ratio > 0.0)) {
    throw SingularityError(std::string(what) + ": evaluated at t = T");
  }
  return c;
}

// sigma_t^2 (SNR_t / SNR_T - 1), the transition-score denominator.
double transition_denominator(const BridgeCoeffs& c) { return c.sigma_sq * c.one_minus_ratio / c.snr_ratio; }

void check_same_shape(const Batch& a, const Batch& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ConfigError(std::string(what) + ": shape mismatch");
  }
}

}  // namespace

BridgeProblem::BridgeProblem(ScheduleParams params, Batch endpoint)
    : schedule(params), x_T(std::move(endpoint)) {
  schedule.validate();
  if (x_T.size() == 0) throw ConfigError("bridge: endpoint must be non-empty");
  if (!x_T.allFinite()) throw ConfigError("bridge: endpoint must be finite");
}

void BridgeProblem::check_batch(Eigen::Index rows, Eigen::Index cols) const {
  if (x_T.size() == 0) throw ConfigError("bridge: endpoint must be non-empty");
  if (rows != x_T.rows()) throw ConfigError("bridge: state dimension differs from endpoint");
  if (x_T.cols() != 1 && x_T.cols() != cols) {
    throw ConfigError("bridge: endpoint column count must be 1 or the batch width");
  }
}

BridgeCoeffs bridge_coeffs(const ScheduleParams& p, double t) {
  BridgeCoeffs c;
  c.t = t;
  c.lambda = half_log_snr(p, t);
  const double lambda_T = half_log_snr(p, p.T);
  const double log_alpha_t = log_alpha(p, t);
  c.alpha = std::exp(log_alpha_t);
  c.alpha_ratio = std::exp(log_alpha_t - log_alpha(p, p.T));
  c.sigma_sq = sigma_sq(p, t);
  c.snr_ratio = std::exp(2.0 * (lambda_T - c.lambda));
  c.one_minus_ratio = -std::expm1(2.0 * (lambda_T - c.lambda));
  c.drift = drift_factor(p, t);
  c.g_sq = diffusion_sq(p, t);
  c.a = c.snr_ratio * c.alpha_ratio;
  c.b = c.alpha * c.one_minus_ratio;
  c.c_sq = c.sigma_sq * c.one_minus_ratio;
  return c;
}

void affine_combine(Batch& out, double cx, const Batch& x, double cT, const BridgeProblem& problem,
                    double cd, const Batch& d) {
  problem.check_batch(x.rows(), x.cols());
  check_same_shape(x, d, "affine_combine");
  if (problem.x_T.cols() == 1) {
    out = cx * x + cd * d;
    out.colwise() += cT * problem.x_T.col(0);
  } else {
    out = cx * x + cT * problem.x_T + cd * d;
  }
}

Batch Denoiser::operator()(const Batch& x, double t, const BridgeProblem& problem) const {
  count_.fetch_add(1, std::memory_order_relaxed);
  return evaluate_uncounted(x, t, problem);
}

Batch Denoiser::evaluate_uncounted(const Batch& x, double t, const BridgeProblem& problem) const {
  problem.check_batch(x.rows(), x.cols());
  Batch out(x.rows(), x.cols());
  evaluate_into(x, t, problem, out);
  return out;
}

Batch score_from_x0(const BridgeProblem& problem, const Batch& x, double t, const Batch& d_out) {
  const BridgeCoeffs c = regular_coeffs(problem, t, "score_from_x0");
  Batch out;
  affine_combine(out, -1.0 / c.c_sq, x, c.a / c.c_sq, problem, c.b / c.c_sq, d_out);
  return out;
}

Batch transition_score(const BridgeProblem& problem, const Batch& x, double t) {
  const BridgeCoeffs c = regular_coeffs(problem, t, "transition_score");
  const double denom = transition_denominator(c);
  Batch out;
  affine_combine(out, -1.0 / denom, x, c.alpha_ratio / denom, problem, 0.0, x);
  return out;
}

Batch pf_ode_rhs_given(const BridgeProblem& problem, const Batch& x, double t, const Batch& d_out) {
  const BridgeCoeffs c = regular_coeffs(problem, t, "pf_ode_rhs");
  const Batch score = score_from_x0(problem, x, t, d_out);
  const Batch trans = transition_score(problem, x, t);
  return c.drift * x - 0.5 * c.g_sq * score + c.g_sq * trans;
}

Batch pf_ode_rhs(const BridgeProblem& problem, const Batch& x, double t, const Denoiser& denoiser) {
  return pf_ode_rhs_given(problem, x, t, denoiser(x, t, problem));
}

Batch sde_rhs_deterministic_given(const BridgeProblem& problem, const Batch& x, double t,
                                  const Batch& d_out) {
  const BridgeCoeffs c = regular_coeffs(problem, t, "sde_rhs_deterministic");
  const Batch score = score_from_x0(problem, x, t, d_out);
  const Batch trans = transition_score(problem, x, t);
  return c.drift * x - c.g_sq * score + c.g_sq * trans;
}

Batch sde_rhs_deterministic(const BridgeProblem& problem, const Batch& x, double t,
                            const Denoiser& denoiser) {
  return sde_rhs_deterministic_given(problem, x, t, denoiser(x, t, problem));
}

SemilinearSplit semilinear_split(const BridgeProblem& problem, double t) {
  const BridgeCoeffs c = regular_coeffs(problem, t, "semilinear_split");
  const double trans_denom = transition_denominator(c);
  SemilinearSplit split;
  split.linear = c.drift + 0.5 * c.g_sq / c.c_sq - c.g_sq / trans_denom;
  split.endpoint_coeff = -0.5 * c.g_sq * c.a / c.c_sq + c.g_sq * c.alpha_ratio / trans_denom;
  split.denoised_coeff = -0.5 * c.g_sq * c.b / c.c_sq;
  return split;
}

Batch SemilinearSplit::nonlinear(const BridgeProblem& problem, const Batch& d_out) const {
  Batch out;
  affine_combine(out, 0.0, d_out, endpoint_coeff, problem, denoised_coeff, d_out);
  return out;
}

Batch SemilinearSplit::rhs(const BridgeProblem& problem, const Batch& x, const Batch& d_out) const {
  Batch out;
  affine_combine(out, linear, x, endpoint_coeff, problem, denoised_coeff, d_out);
  return out;
}

}  // namespace bridgesolve
