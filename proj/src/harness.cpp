#include "bridgesolve/harness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "bridgesolve/errors.hpp"
#include "bridgesolve/rng.hpp"

namespace bridgesolve {

double quadrature_oracle(int n, double lam_s, double lam_t, double lam_T, double tol) {
  if (n < 0 || n > 20) throw DomainError("quadrature_oracle: n out of range");
  if (!(lam_T < lam_s && lam_s <= lam_t)) {
    throw DomainError("quadrature_oracle: requires lam_T < lam_s <= lam_t");
  }
  if (!(tol > 0.0)) throw DomainError("quadrature_oracle: tol must be positive");
  double factorial = 1.0;
  for (int k = 2; k <= n; ++k) factorial *= k;
  auto integrand = [=](double lam) {
    const double denom = std::sqrt(std::expm1(2.0 * (lam - lam_T)));
    return std::exp(2.0 * lam) * std::pow(lam - lam_s, n) / (factorial * denom);
  };
  return adaptive_simpson(integrand, lam_s, lam_t, tol);
}

double quadrature_oracle_relative(int n, double lam_s, double lam_t, double lam_T, double rel_tol) {
  if (lam_s == lam_t) return 0.0;
  // Coarse pass for the magnitude; the integrand is positive on the interval.
  const double rough = quadrature_oracle(n, lam_s, lam_t, lam_T, 1e-3 * std::exp(2.0 * lam_t) * (lam_t - lam_s));
  return quadrature_oracle(n, lam_s, lam_t, lam_T, rel_tol * std::abs(rough));
}

Batch fine_reference_ode(const BridgeProblem& problem, const Batch& x_s, double s, double t,
                         const Denoiser& denoiser, std::size_t substeps) {
  if (t > s) throw DomainError("fine_reference_ode: requires t <= s");
  if (substeps == 0) throw ConfigError("fine_reference_ode: substeps must be positive");
  if (s == t) return x_s;
  const ScheduleParams& p = problem.schedule;
  const double lam_from = half_log_snr(p, s);
  const double lam_to = half_log_snr(p, t);
  const double h = (lam_to - lam_from) / static_cast<double>(substeps);

  auto field = [&](double tau, const Batch& x) -> Batch {
    const Batch d = denoiser.evaluate_uncounted(x, tau, problem);
    return pf_ode_rhs_given(problem, x, tau, d) / dlambda_dt(p, tau);
  };

  Batch x = x_s;
  double tau0 = s;
  for (std::size_t i = 0; i < substeps; ++i) {
    const double lam0 = lam_from + static_cast<double>(i) * h;
    const double tau_mid = t_of_lambda(p, lam0 + 0.5 * h);
    const double tau1 = i + 1 == substeps ? t : t_of_lambda(p, lam_from + static_cast<double>(i + 1) * h);
    const Batch k1 = field(tau0, x);
    const Batch k2 = field(tau_mid, x + (0.5 * h) * k1);
    const Batch k3 = field(tau_mid, x + (0.5 * h) * k2);
    const Batch k4 = field(tau1, x + h * k3);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    tau0 = tau1;
  }
  return x;
}

Batch fine_reference_sde(const BridgeProblem& problem, const Batch& x_s, double s, double t,
                         const Denoiser& denoiser, const std::vector<Batch>& increments, double epsilon) {
  if (t > s) throw DomainError("fine_reference_sde: requires t <= s");
  if (increments.empty()) throw ConfigError("fine_reference_sde: empty noise path");
  const ScheduleParams& p = problem.schedule;
  const auto n = static_cast<double>(increments.size());
  Batch x = x_s;
  for (std::size_t i = 0; i < increments.size(); ++i) {
    const double from = s - (s - t) * static_cast<double>(i) / n;
    const double to = i + 1 == increments.size() ? t : s - (s - t) * static_cast<double>(i + 1) / n;
    const double eval_t = std::max(std::min(from, p.T - epsilon), p.t_min);
    const Batch d = denoiser.evaluate_uncounted(x, eval_t, problem);
    const Batch drift = sde_rhs_deterministic_given(problem, x, eval_t, d);
    x += (to - from) * drift + std::sqrt(diffusion_sq(p, eval_t)) * increments[i];
  }
  return x;
}

std::vector<Batch> brownian_increments(Eigen::Index rows, Eigen::Index cols, double s, double t,
                                       std::size_t substeps, const NoiseStream& noise) {
  std::vector<Batch> path;
  path.reserve(substeps);
  const double dt = (s - t) / static_cast<double>(substeps);
  for (std::size_t i = 0; i < substeps; ++i) path.push_back(std::sqrt(dt) * noise.normal(rows, cols, i));
  return path;
}

std::vector<Batch> coarsen_increments(const std::vector<Batch>& increments, std::size_t factor) {
  if (factor == 0 || increments.size() % factor != 0) {
    throw ConfigError("coarsen_increments: factor must divide the path length");
  }
  std::vector<Batch> coarse;
  coarse.reserve(increments.size() / factor);
  for (std::size_t i = 0; i < increments.size(); i += factor) {
    Batch sum = increments[i];
    for (std::size_t k = 1; k < factor; ++k) sum += increments[i + k];
    coarse.push_back(std::move(sum));
  }
  return coarse;
}

SlopeFit fit_order(const std::vector<double>& step_counts, const std::vector<double>& errors) {
  if (step_counts.size() != errors.size() || step_counts.size() < 2) {
    throw ConfigError("fit_order: need matching lists with at least two points");
  }
  const auto m = static_cast<double>(step_counts.size());
  double sx = 0.0, sy = 0.0;
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < step_counts.size(); ++i) {
    xs.push_back(std::log(step_counts[i]));
    ys.push_back(-std::log(std::max(errors[i], std::numeric_limits<double>::min())));
    sx += xs.back();
    sy += ys.back();
  }
  const double mx = sx / m;
  const double my = sy / m;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  SlopeFit fit;
  fit.slope = sxy / sxx;
  fit.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return fit;
}

ConvergenceReport convergence_study(const BridgeProblem& problem, const Batch& x_start,
                                    const Denoiser& denoiser, const ConvergenceSetup& setup,
                                    const std::vector<std::size_t>& step_counts) {
  const Batch reference =
      fine_reference_ode(problem, x_start, setup.start, setup.end, denoiser, setup.reference_substeps);
  return convergence_study(problem, x_start, reference, denoiser, setup, step_counts);
}

ConvergenceReport convergence_study(const BridgeProblem& problem, const Batch& x_start,
                                    const Batch& reference, const Denoiser& denoiser,
                                    const ConvergenceSetup& setup,
                                    const std::vector<std::size_t>& step_counts) {
  if (step_counts.size() < 4) throw ConfigError("convergence_study: need at least 4 step counts");
  ConvergenceReport report;
  const double scale = std::max(1.0, reference.norm());
  bool all_floor = true;
  for (std::size_t n : step_counts) {
    const std::vector<double> nodes = span_nodes(problem.schedule, setup.start, setup.end, n, setup.scheme);
    const Batch x = integrate_ode_phase(problem, x_start, nodes, setup.method, denoiser, setup.midpoint_ratio);
    const double err = (x - reference).norm();
    report.step_counts.push_back(static_cast<double>(n));
    report.errors.push_back(err);
    if (err > setup.exact_floor * scale) all_floor = false;
  }
  report.exact = all_floor;
  const SlopeFit fit = fit_order(report.step_counts, report.errors);
  report.fitted_slope = fit.slope;
  report.r_squared = fit.r_squared;
  return report;
}

std::string_view to_string(MetricKind kind) {
  return kind == MetricKind::SlicedWasserstein ? "SlicedWasserstein" : "EnergyDistance";
}

double wasserstein2_1d(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw ConfigError("wasserstein2_1d: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  if (a.size() == b.size()) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(acc / static_cast<double>(a.size()));
  }
  // Integrate (F_a^{-1}(u) - F_b^{-1}(u))^2 over the merged quantile breakpoints.
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double u = 0.0, acc = 0.0;
  while (i < a.size() && j < b.size()) {
    const double next_a = static_cast<double>(i + 1) / na;
    const double next_b = static_cast<double>(j + 1) / nb;
    const double next = std::min(next_a, next_b);
    acc += (next - u) * (a[i] - b[j]) * (a[i] - b[j]);
    u = next;
    if (next_a <= next) ++i;
    if (next_b <= next) ++j;
  }
  return std::sqrt(acc);
}

double sliced_wasserstein_along(const Batch& a, const Batch& b, const Batch& directions) {
  if (a.rows() != b.rows() || directions.rows() != a.rows()) {
    throw ConfigError("sliced_wasserstein: dimension mismatch");
  }
  std::vector<double> per_direction;
  per_direction.reserve(static_cast<std::size_t>(directions.cols()));
  std::vector<double> pa(static_cast<std::size_t>(a.cols())), pb(static_cast<std::size_t>(b.cols()));
  for (Eigen::Index k = 0; k < directions.cols(); ++k) {
    const Eigen::RowVectorXd u = directions.col(k).transpose();
    Eigen::Map<Eigen::RowVectorXd>(pa.data(), a.cols()) = u * a;
    Eigen::Map<Eigen::RowVectorXd>(pb.data(), b.cols()) = u * b;
    per_direction.push_back(wasserstein2_1d(pa, pb));
  }
  return std::accumulate(per_direction.begin(), per_direction.end(), 0.0) /
         static_cast<double>(per_direction.size());
}

MetricReport sliced_wasserstein(const Batch& a, const Batch& b, std::size_t n_projections,
                                std::uint64_t seed) {
  if (n_projections == 0) throw ConfigError("sliced_wasserstein: need at least one projection");
  const NoiseStream stream(seed);
  Batch directions = stream.normal(a.rows(), static_cast<Eigen::Index>(n_projections), 0);
  for (Eigen::Index k = 0; k < directions.cols(); ++k) directions.col(k).normalize();
  MetricReport report;
  report.metric = MetricKind::SlicedWasserstein;
  report.value = sliced_wasserstein_along(a, b, directions);
  report.n_samples = static_cast<std::size_t>(std::min(a.cols(), b.cols()));
  report.n_projections = n_projections;
  report.seed = seed;
  return report;
}

MetricReport energy_distance(const Batch& a, const Batch& b) {
  if (a.rows() != b.rows() || a.cols() == 0 || b.cols() == 0) {
    throw ConfigError("energy_distance: dimension mismatch");
  }
  auto mean_dist = [](const Batch& x, const Batch& y) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < x.cols(); ++i) {
      for (Eigen::Index j = 0; j < y.cols(); ++j) acc += (x.col(i) - y.col(j)).norm();
    }
    return acc / (static_cast<double>(x.cols()) * static_cast<double>(y.cols()));
  };
  MetricReport report;
  report.metric = MetricKind::EnergyDistance;
  report.value = std::max(0.0, 2.0 * mean_dist(a, b) - mean_dist(a, a) - mean_dist(b, b));
  report.n_samples = static_cast<std::size_t>(std::min(a.cols(), b.cols()));
  return report;
}

}  // namespace bridgesolve
