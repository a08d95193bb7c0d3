#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "bridgesolve/bridge.hpp"
#include "bridgesolve/errors.hpp"
#include "bridgesolve/schedule.hpp"
#include "bridgesolve/solvers.hpp"

namespace bridgesolve {

/// Adaptive Simpson evaluation of
///   int_{lam_s}^{lam_t} e^{2 lam} (lam - lam_s)^n / n! / sqrt(rho(lam, lam_T)) d lam
/// to absolute tolerance tol. Requires lam_T < lam_s <= lam_t.
double quadrature_oracle(int n, double lam_s, double lam_t, double lam_T, double tol);

/// quadrature_oracle with tol = rel_tol times a coarse estimate of the integral.
double quadrature_oracle_relative(int n, double lam_s, double lam_t, double lam_T, double rel_tol);

/// Generic adaptive Simpson on [a, b]; throws OracleError past max_depth.
template <typename F>
double adaptive_simpson(F&& f, double a, double b, double tol, int max_depth = 50);

/// Classical RK4 on the PF ODE in the lambda variable, `substeps` uniform
/// lambda segments from s down to t. Denoiser calls are uncounted.
Batch fine_reference_ode(const BridgeProblem& problem, const Batch& x_s, double s, double t,
                         const Denoiser& denoiser, std::size_t substeps);

/// Euler-Maruyama on the reverse bridge SDE over `increments.size()` uniform
/// t-substeps from s to t, driven by the supplied Brownian increments (each
/// shaped like x_s, with variance equal to the substep length). Drifts at
/// times above T - epsilon are evaluated at T - epsilon. Denoiser calls are
/// uncounted.
Batch fine_reference_sde(const BridgeProblem& problem, const Batch& x_s, double s, double t,
                         const Denoiser& denoiser, const std::vector<Batch>& increments,
                         double epsilon = 1e-4);

/// Brownian increments for `substeps` uniform substeps of [t, s].
std::vector<Batch> brownian_increments(Eigen::Index rows, Eigen::Index cols, double s, double t,
                                       std::size_t substeps, const NoiseStream& noise);

/// Sums consecutive groups of `factor` increments.
std::vector<Batch> coarsen_increments(const std::vector<Batch>& increments, std::size_t factor);

struct SlopeFit {
  double slope = 0.0;
  double r_squared = 0.0;
};

/// Least-squares slope of -log(error) against log(N).
SlopeFit fit_order(const std::vector<double>& step_counts, const std::vector<double>& errors);

struct ConvergenceReport {
  std::string label;
  std::vector<double> step_counts;
  std::vector<double> errors;
  double fitted_slope = 0.0;
  double r_squared = 0.0;
  /// All errors sit at the rounding floor; the slope carries no information.
  bool exact = false;
};

/// Deterministic-phase convergence study: integrate from (x_start, start)
/// down to `end` on n-interval grids for each n in step_counts, and compare
/// with a fine RK4 reference.
struct ConvergenceSetup {
  OdeMethod method = OdeMethod::ExpK2;
  double start = 0.5;
  double end = 1e-4;
  GridScheme scheme = GridScheme::UniformLambda;
  std::size_t reference_substeps = 100000;
  double midpoint_ratio = 0.5;
  double exact_floor = 1e-12;
};

ConvergenceReport convergence_study(const BridgeProblem& problem, const Batch& x_start,
                                    const Denoiser& denoiser, const ConvergenceSetup& setup,
                                    const std::vector<std::size_t>& step_counts);

/// Overload reusing a precomputed reference endpoint.
ConvergenceReport convergence_study(const BridgeProblem& problem, const Batch& x_start,
                                    const Batch& reference, const Denoiser& denoiser,
                                    const ConvergenceSetup& setup,
                                    const std::vector<std::size_t>& step_counts);

enum class MetricKind { SlicedWasserstein, EnergyDistance };
std::string_view to_string(MetricKind kind);

struct MetricReport {
  MetricKind metric = MetricKind::SlicedWasserstein;
  double value = 0.0;
  std::size_t n_samples = 0;
  std::size_t n_projections = 0;
  std::uint64_t seed = 0;
};

/// 2-Wasserstein distance between two 1D empirical distributions.
double wasserstein2_1d(std::vector<double> a, std::vector<double> b);

/// Mean over random unit directions of the 1D W2 distance between the
/// projected sample sets (columns are samples).
MetricReport sliced_wasserstein(const Batch& a, const Batch& b, std::size_t n_projections,
                                std::uint64_t seed);

/// Same, with caller-supplied unit directions (columns).
double sliced_wasserstein_along(const Batch& a, const Batch& b, const Batch& directions);

/// Energy distance 2 E|X-Y| - E|X-X'| - E|Y-Y'| (V-statistic).
MetricReport energy_distance(const Batch& a, const Batch& b);

// ---------------------------------------------------------------------------

template <typename F>
double adaptive_simpson(F&& f, double a, double b, double tol, int max_depth) {
  struct Rec {
    F& f;
    int max_depth;
    bool failed = false;
    double run(double a, double b, double fa, double fm, double fb, double whole, double tol, int depth) {
      const double m = 0.5 * (a + b);
      const double lm = 0.5 * (a + m);
      const double rm = 0.5 * (m + b);
      const double flm = f(lm);
      const double frm = f(rm);
      const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
      const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
      const double delta = left + right - whole;
      // Converged, or at the rounding floor of this panel.
      if (std::abs(delta) <= 15.0 * tol || std::abs(delta) <= 1e-15 * std::abs(left + right)) {
        return left + right + delta / 15.0;
      }
      if (depth >= max_depth) {
        failed = true;
        return left + right + delta / 15.0;
      }
      return run(a, m, fa, flm, fm, left, 0.5 * tol, depth + 1) +
             run(m, b, fm, frm, fb, right, 0.5 * tol, depth + 1);
    }
  } rec{f, max_depth};
  if (a == b) return 0.0;
  constexpr int panels = 8;
  double total = 0.0;
  for (int i = 0; i < panels; ++i) {
    const double lo = a + (b - a) * i / panels;
    const double hi = i + 1 == panels ? b : a + (b - a) * (i + 1) / panels;
    const double flo = f(lo);
    const double fhi = f(hi);
    const double fmid = f(0.5 * (lo + hi));
    const double whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
    total += rec.run(lo, hi, flo, fmid, fhi, whole, tol / panels, 0);
  }
  if (rec.failed) throw OracleError("adaptive_simpson: tolerance not reached at max depth");
  return total;
}

}  // namespace bridgesolve
