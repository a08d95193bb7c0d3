#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

namespace bridgesolve {

enum class ScheduleKind { VE, VP };

/// Noise schedule of the forward process. The marginal of x_t given x_0 is
/// N(alpha_t x_0, sigma_t^2 I).
///
/// VE:  alpha_t = 1,  sigma_t = ve_sigma_scale * t.
/// VP:  alpha_t = exp(-t^2 (beta_max - beta_min) / 4 - t beta_min / 2),
///      sigma_t = sqrt(1 - alpha_t^2).
///
/// Every quantity involving log-SNR is only evaluated on [t_min, T].
struct ScheduleParams {
  ScheduleKind kind = ScheduleKind::VE;
  double T = 1.0;
  double ve_sigma_scale = 1.0;
  double vp_beta_min = 0.1;
  double vp_beta_max = 20.0;
  double t_min = 1e-4;

  static ScheduleParams ve(double scale = 1.0, double T = 1.0);
  static ScheduleParams vp(double beta_min = 0.1, double beta_max = 20.0, double T = 1.0);

  /// Throws ConfigError on non-positive parameters or t_min outside (0, T).
  void validate() const;
};

std::string_view to_string(ScheduleKind kind);
ScheduleKind schedule_kind_from_string(std::string_view name);

double alpha(const ScheduleParams& p, double t);
double log_alpha(const ScheduleParams& p, double t);
double sigma(const ScheduleParams& p, double t);
double sigma_sq(const ScheduleParams& p, double t);

/// lambda_t = log(alpha_t / sigma_t). Strictly decreasing on [t_min, T].
double half_log_snr(const ScheduleParams& p, double t);
double snr(const ScheduleParams& p, double t);

/// Inverse of half_log_snr on [t_min, T]. Closed form for VE, bisection for VP.
double t_of_lambda(const ScheduleParams& p, double lam);

/// rho(a, b) = exp(2 (a - b)) - 1, evaluated with expm1. Requires a >= b.
double rho(double a, double b);

/// d log(alpha_t) / dt, so that the forward drift is f(x, t) = drift_factor(t) x.
double drift_factor(const ScheduleParams& p, double t);

/// g(t)^2 = d sigma_t^2 / dt - 2 drift_factor(t) sigma_t^2.
double diffusion_sq(const ScheduleParams& p, double t);

/// d lambda / dt = -g(t)^2 / (2 sigma_t^2).
double dlambda_dt(const ScheduleParams& p, double t);

enum class GridScheme { UniformT, UniformLambda };

std::string_view to_string(GridScheme scheme);
GridScheme grid_scheme_from_string(std::string_view name);

/// Descending time grid T = times[0] > ... > times[N-1] = t_min > times[N] = 0.
///
/// Stored in solve order (descending), so times.front() is t_N and
/// times.back() is t_0. at(i) returns t_i in the ascending index convention.
struct TimeGrid {
  std::vector<double> times;
  GridScheme scheme = GridScheme::UniformT;

  /// Number of intervals N.
  std::size_t steps() const { return times.size() - 1; }
  double at(std::size_t i) const { return times[times.size() - 1 - i]; }

  /// Throws ConfigError when the grid does not start at T, end at 0, descend
  /// strictly, keep t_1 >= t_min, or has fewer than 3 intervals.
  void validate(const ScheduleParams& p) const;
};

TimeGrid make_grid(const ScheduleParams& p, std::size_t n_steps,
                   GridScheme scheme = GridScheme::UniformT);

/// Interior nodes spanning [lo, hi] (descending, both ends included) with
/// n_intervals intervals, uniform in t or in lambda.
std::vector<double> span_nodes(const ScheduleParams& p, double hi, double lo,
                               std::size_t n_intervals, GridScheme scheme);

}  // namespace bridgesolve
