#pragma once

#include <vector>

#include "bridgesolve/bridge.hpp"
#include "bridgesolve/rng.hpp"

namespace bridgesolve {

/// Diagonal Gaussian prior on x_0.
struct GaussianPrior {
  Vector mean;
  Vector var;

  void validate() const;
  Eigen::Index dim() const { return mean.size(); }
  /// One draw per column; uses stream step `step`.
  Batch sample(Eigen::Index n, const NoiseStream& noise, std::uint64_t step) const;
};

/// Mixture of diagonal Gaussians.
struct GmmPrior {
  Vector weights;
  std::vector<Vector> means;
  std::vector<Vector> vars;

  void validate() const;
  Eigen::Index dim() const { return means.empty() ? 0 : means.front().size(); }
  std::size_t components() const { return means.size(); }
  /// Component choice uses lane-0 uniforms of step `step`; the Gaussian part
  /// uses step `step + 1`.
  Batch sample(Eigen::Index n, const NoiseStream& noise, std::uint64_t step) const;
};

/// Mean a_t x_T + b_t x_0 and variance c_t^2 of x_t given (x_0, x_T).
struct MarginalCoeffs {
  double a = 1.0;
  double b = 0.0;
  double c_sq = 0.0;
};

MarginalCoeffs bridge_marginal_coeffs(const BridgeProblem& problem, double t);

/// Exact E[x_0 | x_t, x_T] under a Gaussian prior independent of x_T.
///
/// Written in terms of b / c^2 = alpha_t / sigma_t^2, which stays finite at
/// t = T; there it returns the prior mean shifted by the (vanishing at
/// x = x_T) observation term.
Batch gaussian_posterior_denoiser(const GaussianPrior& prior, const BridgeProblem& problem,
                                  const Batch& x, double t);

/// Exact E[x_0 | x_t, x_T] under a mixture prior, with log-space
/// responsibilities. At t = T the responsibilities are the prior weights.
Batch gmm_posterior_denoiser(const GmmPrior& prior, const BridgeProblem& problem, const Batch& x,
                             double t);

class GaussianPosteriorDenoiser final : public Denoiser {
 public:
  explicit GaussianPosteriorDenoiser(GaussianPrior prior);
  const GaussianPrior& prior() const { return prior_; }

 protected:
  void evaluate_into(const Batch& x, double t, const BridgeProblem& problem, Batch& out) const override;

 private:
  GaussianPrior prior_;
};

class GmmPosteriorDenoiser final : public Denoiser {
 public:
  explicit GmmPosteriorDenoiser(GmmPrior prior);
  const GmmPrior& prior() const { return prior_; }

 protected:
  void evaluate_into(const Batch& x, double t, const BridgeProblem& problem, Batch& out) const override;

 private:
  GmmPrior prior_;
};

/// Returns c regardless of the state.
class ConstantDenoiser final : public Denoiser {
 public:
  explicit ConstantDenoiser(Vector c) : c_(std::move(c)) {}

 protected:
  void evaluate_into(const Batch& x, double t, const BridgeProblem& problem, Batch& out) const override;

 private:
  Vector c_;
};

/// Returns c0 + c1 * lambda_t regardless of the state.
class AffineLambdaDenoiser final : public Denoiser {
 public:
  AffineLambdaDenoiser(Vector c0, Vector c1);

 protected:
  void evaluate_into(const Batch& x, double t, const BridgeProblem& problem, Batch& out) const override;

 private:
  Vector c0_;
  Vector c1_;
};

}  // namespace bridgesolve
