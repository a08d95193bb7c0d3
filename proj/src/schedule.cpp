#include "bridgesolve/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bridgesolve/errors.hpp"

namespace bridgesolve {

namespace {

void require_in(double t, double lo, double hi, const char* what) {
  if (!(t >= lo && t <= hi)) {
    throw DomainError(std::string(what) + ": t=" + std::to_string(t) + " outside [" +
                      std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
}

double vp_beta(const ScheduleParams& p, double t) {
  return p.vp_beta_min + t * (p.vp_beta_max - p.vp_beta_min);
}

// log(1 - alpha^2) for VP, i.e. log sigma^2, stable for small t.
double vp_log_sigma_sq(const ScheduleParams& p, double t) {
  return std::log(-std::expm1(2.0 * log_alpha(p, t)));
}

}  // namespace

ScheduleParams ScheduleParams::ve(double scale, double T) {
  ScheduleParams p;
  p.kind = ScheduleKind::VE;
  p.T = T;
  p.ve_sigma_scale = scale;
  p.t_min = 1e-4 * T;
  return p;
}

ScheduleParams ScheduleParams::vp(double beta_min, double beta_max, double T) {
  ScheduleParams p;
  p.kind = ScheduleKind::VP;
  p.T = T;
  p.vp_beta_min = beta_min;
  p.vp_beta_max = beta_max;
  p.t_min = 1e-4 * T;
  return p;
}

void ScheduleParams::validate() const {
  if (!(T > 0.0) || !std::isfinite(T)) throw ConfigError("schedule: T must be positive");
  if (!(t_min > 0.0 && t_min < T)) throw ConfigError("schedule: t_min must lie in (0, T)");
  if (kind == ScheduleKind::VE) {
    if (!(ve_sigma_scale > 0.0)) throw ConfigError("schedule: ve_sigma_scale must be positive");
  } else {
    if (!(vp_beta_min > 0.0) || !(vp_beta_max > 0.0))
      throw ConfigError("schedule: VP betas must be positive");
    if (vp_beta_max < vp_beta_min) throw ConfigError("schedule: vp_beta_max < vp_beta_min");
  }
}

std::string_view to_string(ScheduleKind kind) { return kind == ScheduleKind::VE ? "VE" : "VP"; }

ScheduleKind schedule_kind_from_string(std::string_view name) {
  if (name == "VE" || name == "ve") return ScheduleKind::VE;
  if (name == "VP" || name == "vp") return ScheduleKind::VP;
  throw ConfigError("unknown schedule kind '" + std::string(name) + "'");
}

double log_alpha(const ScheduleParams& p, double t) {
  require_in(t, 0.0, p.T, "alpha");
  if (p.kind == ScheduleKind::VE) return 0.0;
  return -0.25 * t * t * (p.vp_beta_max - p.vp_beta_min) - 0.5 * t * p.vp_beta_min;
}

double alpha(const ScheduleParams& p, double t) { return std::exp(log_alpha(p, t)); }

double sigma_sq(const ScheduleParams& p, double t) {
  if (!(t > 0.0 && t <= p.T)) {
    throw DomainError("sigma: t=" + std::to_string(t) + " outside (0, T]");
  }
  if (p.kind == ScheduleKind::VE) {
    const double s = p.ve_sigma_scale * t;
    return s * s;
  }
  return -std::expm1(2.0 * log_alpha(p, t));
}

double sigma(const ScheduleParams& p, double t) { return std::sqrt(sigma_sq(p, t)); }

double half_log_snr(const ScheduleParams& p, double t) {
  require_in(t, p.t_min, p.T, "half_log_snr");
  if (p.kind == ScheduleKind::VE) return -std::log(p.ve_sigma_scale * t);
  return log_alpha(p, t) - 0.5 * vp_log_sigma_sq(p, t);
}

double snr(const ScheduleParams& p, double t) { return std::exp(2.0 * half_log_snr(p, t)); }

double t_of_lambda(const ScheduleParams& p, double lam) {
  const double lam_hi = half_log_snr(p, p.t_min);
  const double lam_lo = half_log_snr(p, p.T);
  const double slack = 1e-12 * std::max(1.0, std::abs(lam));
  if (!(lam >= lam_lo - slack && lam <= lam_hi + slack)) {
    throw DomainError("t_of_lambda: lambda=" + std::to_string(lam) + " outside [" +
                      std::to_string(lam_lo) + ", " + std::to_string(lam_hi) + "]");
  }
  if (lam >= lam_hi) return p.t_min;
  if (lam <= lam_lo) return p.T;

  if (p.kind == ScheduleKind::VE) {
    const double t = std::exp(-lam) / p.ve_sigma_scale;
    return std::clamp(t, p.t_min, p.T);
  }

  // lambda is decreasing in t: lam(lo) > lam > lam(hi).
  double lo = p.t_min;
  double hi = p.T;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (half_log_snr(p, mid) > lam) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double err_lo = std::abs(half_log_snr(p, lo) - lam);
  const double err_hi = std::abs(half_log_snr(p, hi) - lam);
  return err_lo <= err_hi ? lo : hi;
}

double rho(double a, double b) {
  if (a < b) throw DomainError("rho: requires a >= b");
  return std::expm1(2.0 * (a - b));
}

double drift_factor(const ScheduleParams& p, double t) {
  require_in(t, p.t_min, p.T, "drift_factor");
  if (p.kind == ScheduleKind::VE) return 0.0;
  return -0.5 * vp_beta(p, t);
}

double diffusion_sq(const ScheduleParams& p, double t) {
  require_in(t, p.t_min, p.T, "diffusion_sq");
  if (p.kind == ScheduleKind::VE) return 2.0 * p.ve_sigma_scale * p.ve_sigma_scale * t;
  // d(1 - alpha^2)/dt - 2 f sigma^2 = -2 f alpha^2 - 2 f sigma^2 = -2 f.
  return vp_beta(p, t);
}

double dlambda_dt(const ScheduleParams& p, double t) {
  return -0.5 * diffusion_sq(p, t) / sigma_sq(p, t);
}

std::string_view to_string(GridScheme scheme) {
  return scheme == GridScheme::UniformT ? "UniformT" : "UniformLambda";
}

GridScheme grid_scheme_from_string(std::string_view name) {
  if (name == "UniformT") return GridScheme::UniformT;
  if (name == "UniformLambda") return GridScheme::UniformLambda;
  throw ConfigError("unknown grid scheme '" + std::string(name) + "'");
}

void TimeGrid::validate(const ScheduleParams& p) const {
  if (times.size() < 4) throw ConfigError("grid: need at least 3 intervals");
  if (times.front() != p.T) throw ConfigError("grid: first node must equal T");
  if (times.back() != 0.0) throw ConfigError("grid: last node must be 0");
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (!(times[i] < times[i - 1])) throw ConfigError("grid: nodes must strictly descend");
  }
  if (times[times.size() - 2] < p.t_min) throw ConfigError("grid: t_1 below t_min");
}

std::vector<double> span_nodes(const ScheduleParams& p, double hi, double lo,
                               std::size_t n_intervals, GridScheme scheme) {
  if (n_intervals == 0) throw ConfigError("span_nodes: need at least one interval");
  if (!(hi > lo)) throw ConfigError("span_nodes: hi must exceed lo");
  std::vector<double> nodes(n_intervals + 1);
  const auto n = static_cast<double>(n_intervals);
  if (scheme == GridScheme::UniformT) {
    for (std::size_t i = 0; i <= n_intervals; ++i) {
      nodes[i] = hi - static_cast<double>(i) / n * (hi - lo);
    }
  } else {
    const double lam_hi_t = half_log_snr(p, hi);
    const double lam_lo_t = half_log_snr(p, lo);
    for (std::size_t i = 0; i <= n_intervals; ++i) {
      const double lam = lam_hi_t + static_cast<double>(i) / n * (lam_lo_t - lam_hi_t);
      nodes[i] = t_of_lambda(p, lam);
    }
  }
  nodes.front() = hi;
  nodes.back() = lo;
  return nodes;
}

TimeGrid make_grid(const ScheduleParams& p, std::size_t n_steps, GridScheme scheme) {
  if (n_steps < 3) throw ConfigError("make_grid: n_steps must be >= 3");
  p.validate();
  TimeGrid grid;
  grid.scheme = scheme;
  grid.times = span_nodes(p, p.T, p.t_min, n_steps - 1, scheme);
  grid.times.push_back(0.0);
  return grid;
}

}  // namespace bridgesolve
