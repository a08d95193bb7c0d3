#pragma once

#include <Eigen/Dense>
#include <atomic>
#include <cstdint>
#include <memory>

#include "bridgesolve/schedule.hpp"

namespace bridgesolve {

/// A batch of states: one column per trajectory, one row per coordinate.
using Batch = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// The conditioning endpoint and schedule of a bridge.
///
/// x_T holds either a single column shared by every trajectory of a batch, or
/// one column per trajectory.
struct BridgeProblem {
  ScheduleParams schedule;
  Batch x_T;

  BridgeProblem() = default;
  BridgeProblem(ScheduleParams params, Batch endpoint);

  Eigen::Index dim() const { return x_T.rows(); }
  double T() const { return schedule.T; }

  /// Endpoint column paired with trajectory column j.
  auto endpoint(Eigen::Index j) const { return x_T.col(x_T.cols() == 1 ? 0 : j); }

  /// Throws ConfigError if x_T is empty, non-finite, or its column count is
  /// incompatible with a batch of `cols` trajectories.
  void check_batch(Eigen::Index rows, Eigen::Index cols) const;
};

/// Scalar schedule quantities of the bridge at one time.
///
/// snr_ratio is SNR_T / SNR_t in (0, 1]; one_minus_ratio is computed with
/// expm1 so it stays accurate as t approaches T.
struct BridgeCoeffs {
  double t = 0.0;
  double alpha = 1.0;
  double alpha_ratio = 1.0;  // alpha_t / alpha_T
  double sigma_sq = 0.0;
  double lambda = 0.0;
  double snr_ratio = 1.0;
  double one_minus_ratio = 0.0;
  double drift = 0.0;
  double g_sq = 0.0;
  // Marginal of x_t given (x_0, x_T): N(a x_T + b x_0, c_sq).
  double a = 1.0;
  double b = 0.0;
  double c_sq = 0.0;
};

BridgeCoeffs bridge_coeffs(const ScheduleParams& p, double t);

/// out.col(j) = cx x.col(j) + cT endpoint(j) + cd d.col(j).
void affine_combine(Batch& out, double cx, const Batch& x, double cT, const BridgeProblem& problem,
                    double cd, const Batch& d);

/// x0-predictor D(x, t, x_T, T).
///
/// Every counted call increments the evaluation counter by exactly one,
/// whatever the batch width; this is the NFE of the calling solver. Oracle
/// code goes through evaluate_uncounted so reference computations never
/// appear in NFE figures.
class Denoiser {
 public:
  Denoiser() = default;
  Denoiser(const Denoiser&) = delete;
  Denoiser& operator=(const Denoiser&) = delete;
  virtual ~Denoiser() = default;

  Batch operator()(const Batch& x, double t, const BridgeProblem& problem) const;
  Batch evaluate_uncounted(const Batch& x, double t, const BridgeProblem& problem) const;

  std::uint64_t evaluations() const { return count_.load(std::memory_order_relaxed); }
  void reset_counter() const { count_.store(0, std::memory_order_relaxed); }

 protected:
  /// out is pre-sized to x's shape.
  virtual void evaluate_into(const Batch& x, double t, const BridgeProblem& problem,
                             Batch& out) const = 0;

 private:
  mutable std::atomic<std::uint64_t> count_{0};
};

/// Conditional score of p_t(x_t | x_T) from an x0 prediction d_out.
Batch score_from_x0(const BridgeProblem& problem, const Batch& x, double t, const Batch& d_out);

/// Score of the transition density p_t(x_T | x_t).
Batch transition_score(const BridgeProblem& problem, const Batch& x, double t);

/// Bridge probability-flow ODE right-hand side with a given x0 prediction.
Batch pf_ode_rhs_given(const BridgeProblem& problem, const Batch& x, double t, const Batch& d_out);
Batch pf_ode_rhs(const BridgeProblem& problem, const Batch& x, double t, const Denoiser& denoiser);

/// dt-part of the reverse bridge SDE. The noise magnitude is sqrt(diffusion_sq).
Batch sde_rhs_deterministic_given(const BridgeProblem& problem, const Batch& x, double t,
                                  const Batch& d_out);
Batch sde_rhs_deterministic(const BridgeProblem& problem, const Batch& x, double t,
                            const Denoiser& denoiser);

/// pf_ode_rhs = linear * x + endpoint_coeff * x_T + denoised_coeff * D(x).
struct SemilinearSplit {
  double linear = 0.0;
  double endpoint_coeff = 0.0;
  double denoised_coeff = 0.0;

  Batch nonlinear(const BridgeProblem& problem, const Batch& d_out) const;
  Batch rhs(const BridgeProblem& problem, const Batch& x, const Batch& d_out) const;
};

SemilinearSplit semilinear_split(const BridgeProblem& problem, double t);

}  // namespace bridgesolve
