#include "doctest.h"

#include <cmath>

#include "bridgesolve/errors.hpp"
#include "bridgesolve/models.hpp"
#include "oracles.hpp"

using namespace bridgesolve;

namespace {

Batch scalar(double v) { return Batch::Constant(1, 1, v); }

GaussianPrior gauss1(double mean, double var) { return {Vector::Constant(1, mean), Vector::Constant(1, var)}; }

}  // namespace

TEST_CASE("marginal coefficients at the ends") {
  const BridgeProblem problem(ScheduleParams::vp(), scalar(0.0));
  const MarginalCoeffs at_T = bridge_marginal_coeffs(problem, 1.0);
  CHECK(at_T.a == doctest::Approx(1.0));
  CHECK(at_T.b == doctest::Approx(0.0));
  CHECK(at_T.c_sq == doctest::Approx(0.0));
  const MarginalCoeffs near0 = bridge_marginal_coeffs(problem, 1e-4);
  CHECK(std::abs(near0.a) < 1e-3);
  CHECK(near0.b == doctest::Approx(alpha(problem.schedule, 1e-4)).epsilon(1e-3));
  CHECK(near0.c_sq < 1e-3);
  const oracle::Sched o{true};
  for (double t : {0.1, 0.5, 0.9}) {
    const oracle::Marginal m = oracle::marginal(o, t);
    const MarginalCoeffs c = bridge_marginal_coeffs(problem, t);
    CHECK(c.a == doctest::Approx(m.a).epsilon(1e-12));
    CHECK(c.b == doctest::Approx(m.b).epsilon(1e-12));
    CHECK(c.c_sq == doctest::Approx(m.c2).epsilon(1e-12));
  }
}

TEST_CASE("gaussian posterior matches trapezoid quadrature") {
  for (const bool vp : {false, true}) {
    const oracle::Sched o{vp};
    const BridgeProblem problem(vp ? ScheduleParams::vp() : ScheduleParams::ve(), scalar(0.8));
    const GaussianPrior prior = gauss1(-0.3, 0.5);
    for (double t : {0.05, 0.5, 0.95}) {
      for (double x : {-1.0, 0.4}) {
        const double want = oracle::posterior_mean_1d([](double z) { return oracle::normal_pdf(z, -0.3, 0.5); }, o,
                                                      x, t, 0.8, -8.0, 8.0);
        CHECK(std::abs(gaussian_posterior_denoiser(prior, problem, scalar(x), t)(0, 0) - want) <= 1e-8);
      }
    }
  }
}

TEST_CASE("gaussian posterior limits") {
  const BridgeProblem problem(ScheduleParams::ve(), scalar(0.8));
  const GaussianPrior prior = gauss1(-0.3, 0.5);
  // Observation uninformative at T; observation dominates near t_min.
  CHECK(gaussian_posterior_denoiser(prior, problem, scalar(0.8), 1.0)(0, 0) == doctest::Approx(-0.3));
  const double t = 1e-4;
  CHECK(gaussian_posterior_denoiser(prior, problem, scalar(0.37), t)(0, 0) == doctest::Approx(0.37).epsilon(1e-6));
}

TEST_CASE("gmm with one component equals the gaussian posterior") {
  const BridgeProblem problem(ScheduleParams::vp(), Batch::Random(2, 1));
  GmmPrior gmm;
  gmm.weights = Vector::Ones(1);
  gmm.means = {Vector::Random(2)};
  gmm.vars = {Vector::Constant(2, 0.3)};
  const GaussianPrior g{gmm.means[0], gmm.vars[0]};
  const Batch x = Batch::Random(2, 50);
  for (double t : {0.01, 0.5, 0.99, 1.0}) {
    const Batch a = gmm_posterior_denoiser(gmm, problem, x, t);
    const Batch b = gaussian_posterior_denoiser(g, problem, x, t);
    CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("symmetric mixture maps the symmetry point to itself") {
  const BridgeProblem problem(ScheduleParams::ve(), scalar(0.0));
  GmmPrior gmm;
  gmm.weights = Vector::Constant(2, 0.5);
  gmm.means = {Vector::Constant(1, -1.0), Vector::Constant(1, 1.0)};
  gmm.vars = {Vector::Constant(1, 0.2), Vector::Constant(1, 0.2)};
  for (double t : {0.1, 0.5, 0.9}) CHECK(std::abs(gmm_posterior_denoiser(gmm, problem, scalar(0.0), t)(0, 0)) <= 1e-14);
}

TEST_CASE("gmm posterior matches trapezoid quadrature") {
  const oracle::Sched o{true};
  const BridgeProblem problem(ScheduleParams::vp(), scalar(-0.5));
  GmmPrior gmm;
  gmm.weights = (Vector(3) << 0.2, 0.5, 0.3).finished();
  gmm.means = {Vector::Constant(1, -1.5), Vector::Constant(1, 0.2), Vector::Constant(1, 1.7)};
  gmm.vars = {Vector::Constant(1, 0.1), Vector::Constant(1, 0.3), Vector::Constant(1, 0.05)};
  auto pdf = [&](double z) {
    double acc = 0.0;
    for (int k = 0; k < 3; ++k) acc += gmm.weights(k) * oracle::normal_pdf(z, gmm.means[k](0), gmm.vars[k](0));
    return acc;
  };
  for (double t : {0.05, 0.3, 0.7, 0.95}) {
    for (double x : {-0.8, 0.1, 0.6}) {
      const double want = oracle::posterior_mean_1d(pdf, o, x, t, -0.5, -8.0, 8.0);
      CHECK(std::abs(gmm_posterior_denoiser(gmm, problem, scalar(x), t)(0, 0) - want) <= 1e-7);
    }
  }
  // At T, on the endpoint, the responsibilities are the prior weights.
  CHECK(gmm_posterior_denoiser(gmm, problem, scalar(-0.5), 1.0)(0, 0) ==
        doctest::Approx(0.2 * -1.5 + 0.5 * 0.2 + 0.3 * 1.7));
}

TEST_CASE("posterior mean against Monte Carlo regression") {
  // Draw (x_0, x_t) jointly and regress x_0 on x_t in narrow bins.
  const ScheduleParams p = ScheduleParams::ve();
  const BridgeProblem problem(p, scalar(0.5));
  GmmPrior gmm;
  gmm.weights = Vector::Constant(2, 0.5);
  gmm.means = {Vector::Constant(1, -1.0), Vector::Constant(1, 1.0)};
  gmm.vars = {Vector::Constant(1, 0.1), Vector::Constant(1, 0.1)};
  const double t = 0.5;
  const MarginalCoeffs m = bridge_marginal_coeffs(problem, t);
  const NoiseStream noise(17);
  const int n = 1000000;
  const Batch x0 = gmm.sample(n, noise, 0);
  const Batch z = noise.normal(1, n, 5);
  const double center = 0.1;
  const double half_width = 0.01;
  double sum = 0.0, sum_sq = 0.0;
  int count = 0;
  for (int i = 0; i < n; ++i) {
    const double xt = m.a * 0.5 + m.b * x0(0, i) + std::sqrt(m.c_sq) * z(0, i);
    if (std::abs(xt - center) < half_width) {
      sum += x0(0, i);
      sum_sq += x0(0, i) * x0(0, i);
      ++count;
    }
  }
  REQUIRE(count > 1000);
  const double mean = sum / count;
  const double se = std::sqrt((sum_sq / count - mean * mean) / count);
  const double want = gmm_posterior_denoiser(gmm, problem, scalar(center), t)(0, 0);
  // Bin width adds a bias far below the sampling error.
  CHECK(std::abs(mean - want) <= 5.0 * se + 1e-3);
}

TEST_CASE("prior sampling moments") {
  const NoiseStream noise(23);
  const GaussianPrior g{(Vector(2) << 1.0, -2.0).finished(), (Vector(2) << 0.25, 4.0).finished()};
  const Batch s = g.sample(200000, noise, 0);
  const Vector mean = s.rowwise().mean();
  CHECK(mean(0) == doctest::Approx(1.0).epsilon(0.01));
  CHECK(mean(1) == doctest::Approx(-2.0).epsilon(0.01));
  const double var1 = (s.row(1).array() - mean(1)).square().mean();
  CHECK(var1 == doctest::Approx(4.0).epsilon(0.02));

  GmmPrior gmm;
  gmm.weights = (Vector(2) << 0.3, 0.7).finished();
  gmm.means = {Vector::Constant(1, -5.0), Vector::Constant(1, 5.0)};
  gmm.vars = {Vector::Constant(1, 0.01), Vector::Constant(1, 0.01)};
  const Batch m = gmm.sample(100000, noise, 3);
  const double frac = (m.array() > 0.0).cast<double>().mean();
  CHECK(frac == doctest::Approx(0.7).epsilon(0.01));
}

TEST_CASE("prior validation") {
  GmmPrior gmm;
  gmm.weights = (Vector(2) << 0.3, 0.6).finished();
  gmm.means = {Vector::Zero(1), Vector::Zero(1)};
  gmm.vars = {Vector::Ones(1), Vector::Ones(1)};
  CHECK_THROWS_AS(gmm.validate(), ConfigError);
  GaussianPrior g{Vector::Zero(2), Vector::Constant(2, -1.0)};
  CHECK_THROWS_AS(g.validate(), ConfigError);
}

TEST_CASE("test denoisers") {
  const BridgeProblem problem(ScheduleParams::ve(), scalar(0.0));
  const ConstantDenoiser c(Vector::Constant(1, 1.5));
  CHECK(c(Batch::Random(1, 3), 0.3, problem).isApprox(Batch::Constant(1, 3, 1.5)));
  const AffineLambdaDenoiser a(Vector::Constant(1, 0.5), Vector::Constant(1, 2.0));
  const double l1 = half_log_snr(problem.schedule, 0.2);
  const double l2 = half_log_snr(problem.schedule, 0.6);
  const double d1 = a(scalar(9.0), 0.2, problem)(0, 0);
  const double d2 = a(scalar(-9.0), 0.6, problem)(0, 0);
  CHECK(d1 == doctest::Approx(0.5 + 2.0 * l1));
  CHECK((d1 - d2) / (l1 - l2) == doctest::Approx(2.0));
}
