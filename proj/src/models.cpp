#include "bridgesolve/models.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "bridgesolve/errors.hpp"

namespace bridgesolve {

namespace {

void check_dim(const Batch& x, Eigen::Index d, const char* what) {
  if (x.rows() != d) throw ConfigError(std::string(what) + ": state dimension differs from prior");
}

void gaussian_posterior_into(const GaussianPrior& prior, const BridgeProblem& problem, const Batch& x,
                             double t, Batch& out) {
  check_dim(x, prior.dim(), "gaussian_posterior_denoiser");
  problem.check_batch(x.rows(), x.cols());
  const BridgeCoeffs c = bridge_coeffs(problem.schedule, t);
  const double gain = c.alpha / c.sigma_sq;                            // b / c^2
  const double info = c.alpha * c.alpha * c.one_minus_ratio / c.sigma_sq;  // b^2 / c^2
  const Vector precision = prior.var.cwiseInverse().array() + info;
  const Vector anchor = prior.mean.cwiseQuotient(prior.var);
  out.resize(x.rows(), x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    out.col(j) = (anchor + gain * (x.col(j) - c.a * problem.endpoint(j))).cwiseQuotient(precision);
  }
}

struct GmmTables {
  const Eigen::MatrixXd& shift;
  const Eigen::MatrixXd& inv_var;
  const Eigen::MatrixXd& post_var;
  const Eigen::MatrixXd& post_anchor;
  const Eigen::VectorXd& log_base;
  double gain;
  double a;
  bool pinned;
};

// Per-column mixture posterior; D fixes the state dimension at compile time
// for the common small cases.
template <int D>
void gmm_columns(const GmmTables& tb, const BridgeProblem& problem, const Batch& x, Batch& out) {
  const Eigen::Index d = D == Eigen::Dynamic ? x.rows() : D;
  const Eigen::Index K = tb.log_base.size();
  std::vector<double> resid(static_cast<std::size_t>(d)), weight(static_cast<std::size_t>(K));
  const bool shared_endpoint = problem.x_T.cols() == 1;
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double* xj = x.col(j).data();
    const double* ej = problem.x_T.col(shared_endpoint ? 0 : j).data();
    for (Eigen::Index i = 0; i < d; ++i) resid[i] = xj[i] - tb.a * ej[i];
    Eigen::Index best = 0;
    double top = -std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < K; ++k) {
      double ll = tb.log_base(k);
      if (!tb.pinned) {
        const double* sk = tb.shift.col(k).data();
        const double* ik = tb.inv_var.col(k).data();
        for (Eigen::Index i = 0; i < d; ++i) {
          const double e = resid[i] - sk[i];
          ll -= 0.5 * e * e * ik[i];
        }
      }
      weight[k] = ll;
      if (ll > top) {
        top = ll;
        best = k;
      }
    }
    double total = 0.0;
    for (Eigen::Index k = 0; k < K; ++k) {
      weight[k] = k == best ? 1.0 : std::exp(weight[k] - top);
      total += weight[k];
    }
    // Responsibilities below 1e-300 are dropped and the rest renormalized.
    const double cutoff = 1e-300 * total;
    double* dst = out.col(j).data();
    for (Eigen::Index i = 0; i < d; ++i) dst[i] = 0.0;
    double kept = 0.0;
    for (Eigen::Index k = 0; k < K; ++k) {
      const double w = weight[k];
      if (w < cutoff) continue;
      kept += w;
      const double* ak = tb.post_anchor.col(k).data();
      const double* pk = tb.post_var.col(k).data();
      for (Eigen::Index i = 0; i < d; ++i) dst[i] += w * (ak[i] + tb.gain * resid[i]) * pk[i];
    }
    const double inv_kept = 1.0 / kept;
    for (Eigen::Index i = 0; i < d; ++i) dst[i] *= inv_kept;
  }
}

void gmm_posterior_into(const GmmPrior& prior, const BridgeProblem& problem, const Batch& x, double t,
                        Batch& out) {
  const Eigen::Index d = prior.dim();
  check_dim(x, d, "gmm_posterior_denoiser");
  problem.check_batch(x.rows(), x.cols());
  const BridgeCoeffs c = bridge_coeffs(problem.schedule, t);
  const auto K = static_cast<Eigen::Index>(prior.components());
  const bool pinned = !(c.one_minus_ratio > 0.0);
  const double gain = c.alpha / c.sigma_sq;
  const double info = c.alpha * c.alpha * c.one_minus_ratio / c.sigma_sq;

  // Per-component, per-coordinate constants; column k is component k.
  Eigen::MatrixXd shift(d, K), inv_var(d, K), post_var(d, K), post_anchor(d, K);
  Eigen::VectorXd log_base(K);
  for (Eigen::Index k = 0; k < K; ++k) {
    const Vector& mu = prior.means[static_cast<std::size_t>(k)];
    const Vector& v = prior.vars[static_cast<std::size_t>(k)];
    double log_det = 0.0;
    for (Eigen::Index i = 0; i < d; ++i) {
      shift(i, k) = c.b * mu(i);
      // b^2 v + c^2 = (1 - R) (alpha^2 (1 - R) v + sigma^2)
      const double var = c.one_minus_ratio * (c.alpha * c.alpha * c.one_minus_ratio * v(i) + c.sigma_sq);
      if (!pinned) {
        inv_var(i, k) = 1.0 / var;
        log_det += std::log(var);
      }
      post_var(i, k) = 1.0 / (1.0 / v(i) + info);
      post_anchor(i, k) = mu(i) / v(i);
    }
    log_base(k) = std::log(prior.weights(k)) - (pinned ? 0.0 : 0.5 * log_det);
  }

  out.resize(d, x.cols());
  const GmmTables tables{shift, inv_var, post_var, post_anchor, log_base, gain, c.a, pinned};
  switch (d) {
    case 1: gmm_columns<1>(tables, problem, x, out); break;
    case 2: gmm_columns<2>(tables, problem, x, out); break;
    case 3: gmm_columns<3>(tables, problem, x, out); break;
    default: gmm_columns<Eigen::Dynamic>(tables, problem, x, out); break;
  }
}

}  // namespace

void GaussianPrior::validate() const {
  if (mean.size() == 0) throw ConfigError("gaussian prior: empty mean");
  if (var.size() != mean.size()) throw ConfigError("gaussian prior: mean/var size mismatch");
  if (!mean.allFinite() || !var.allFinite() || (var.array() <= 0.0).any()) {
    throw ConfigError("gaussian prior: variances must be finite and positive");
  }
}

Batch GaussianPrior::sample(Eigen::Index n, const NoiseStream& noise, std::uint64_t step) const {
  Batch z = noise.normal(dim(), n, step);
  const Vector sd = var.cwiseSqrt();
  for (Eigen::Index j = 0; j < n; ++j) z.col(j) = mean + sd.cwiseProduct(z.col(j));
  return z;
}

void GmmPrior::validate() const {
  if (means.empty()) throw ConfigError("gmm prior: no components");
  if (static_cast<std::size_t>(weights.size()) != means.size() || vars.size() != means.size()) {
    throw ConfigError("gmm prior: component counts disagree");
  }
  if ((weights.array() <= 0.0).any() || std::abs(weights.sum() - 1.0) > 1e-12) {
    throw ConfigError("gmm prior: weights must be positive and sum to 1");
  }
  for (std::size_t k = 0; k < means.size(); ++k) {
    if (means[k].size() != dim() || vars[k].size() != dim()) {
      throw ConfigError("gmm prior: component dimensions disagree");
    }
    if (!means[k].allFinite() || (vars[k].array() <= 0.0).any() || !vars[k].allFinite()) {
      throw ConfigError("gmm prior: variances must be finite and positive");
    }
  }
}

Batch GmmPrior::sample(Eigen::Index n, const NoiseStream& noise, std::uint64_t step) const {
  Batch z = noise.normal(dim(), n, step + 1);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double u = noise.uniform(noise.first_trajectory() + static_cast<std::uint64_t>(j), step, 0);
    std::size_t k = 0;
    double acc = weights(0);
    while (u > acc && k + 1 < means.size()) acc += weights(static_cast<Eigen::Index>(++k));
    z.col(j) = means[k] + vars[k].cwiseSqrt().cwiseProduct(z.col(j));
  }
  return z;
}

MarginalCoeffs bridge_marginal_coeffs(const BridgeProblem& problem, double t) {
  const BridgeCoeffs c = bridge_coeffs(problem.schedule, t);
  return {c.a, c.b, c.c_sq};
}

Batch gaussian_posterior_denoiser(const GaussianPrior& prior, const BridgeProblem& problem,
                                  const Batch& x, double t) {
  Batch out;
  gaussian_posterior_into(prior, problem, x, t, out);
  return out;
}

Batch gmm_posterior_denoiser(const GmmPrior& prior, const BridgeProblem& problem, const Batch& x,
                             double t) {
  Batch out;
  gmm_posterior_into(prior, problem, x, t, out);
  return out;
}

GaussianPosteriorDenoiser::GaussianPosteriorDenoiser(GaussianPrior prior) : prior_(std::move(prior)) {
  prior_.validate();
}

void GaussianPosteriorDenoiser::evaluate_into(const Batch& x, double t, const BridgeProblem& problem,
                                              Batch& out) const {
  gaussian_posterior_into(prior_, problem, x, t, out);
}

GmmPosteriorDenoiser::GmmPosteriorDenoiser(GmmPrior prior) : prior_(std::move(prior)) {
  prior_.validate();
}

void GmmPosteriorDenoiser::evaluate_into(const Batch& x, double t, const BridgeProblem& problem,
                                         Batch& out) const {
  gmm_posterior_into(prior_, problem, x, t, out);
}

void ConstantDenoiser::evaluate_into(const Batch& x, double, const BridgeProblem&, Batch& out) const {
  if (x.rows() != c_.size()) throw ConfigError("constant denoiser: dimension mismatch");
  out = c_.replicate(1, x.cols());
}

AffineLambdaDenoiser::AffineLambdaDenoiser(Vector c0, Vector c1) : c0_(std::move(c0)), c1_(std::move(c1)) {
  if (c0_.size() != c1_.size()) throw ConfigError("affine denoiser: c0/c1 size mismatch");
}

void AffineLambdaDenoiser::evaluate_into(const Batch& x, double t, const BridgeProblem& problem,
                                         Batch& out) const {
  if (x.rows() != c0_.size()) throw ConfigError("affine denoiser: dimension mismatch");
  const double lam = half_log_snr(problem.schedule, t);
  out = (c0_ + lam * c1_).replicate(1, x.cols());
}

}  // namespace bridgesolve
