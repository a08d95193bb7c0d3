#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

#include "bridgesolve/commands.hpp"
#include "bridgesolve/config.hpp"
#include "bridgesolve/errors.hpp"
#include "bridgesolve/harness.hpp"
#include "bridgesolve/models.hpp"
#include "bridgesolve/solvers.hpp"

namespace py = pybind11;
using namespace bridgesolve;

namespace {

py::dict sample_from_config(const std::string& config_json, std::optional<std::uint64_t> seed,
                            std::optional<std::size_t> batch) {
  ExperimentConfig config = ExperimentConfig::from_json_text(config_json);
  if (seed) config.run.seed = *seed;
  if (batch) config.run.batch = *batch;
  config.validate();
  const BridgeProblem problem = config.make_problem(config.run.batch);
  const auto denoiser = config.model.prior.make_denoiser();
  SolverConfig sc = config.solver_config();
  sc.record_states = false;
  const RunRecord run = sample(problem, sc, *denoiser, static_cast<Eigen::Index>(config.run.batch));
  py::dict out;
  out["x_final"] = run.x_final;
  out["total_nfe"] = run.total_nfe;
  out["grid"] = sc.grid.times;
  return out;
}

int run_cli_args(const std::vector<std::string>& args) {
  std::vector<const char*> argv{"bridgesolve"};
  for (const std::string& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Bridge diffusion sampler with exponential-integrator steps";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<SingularityError>(m, "SingularityError", PyExc_ArithmeticError);
  py::register_exception<UnsupportedOrderError>(m, "UnsupportedOrderError", PyExc_ValueError);

  py::class_<ScheduleParams>(m, "Schedule")
      .def_static("ve", &ScheduleParams::ve, py::arg("scale") = 1.0, py::arg("T") = 1.0)
      .def_static("vp", &ScheduleParams::vp, py::arg("beta_min") = 0.1, py::arg("beta_max") = 20.0,
                  py::arg("T") = 1.0)
      .def_readwrite("T", &ScheduleParams::T)
      .def_readwrite("t_min", &ScheduleParams::t_min)
      .def("alpha", [](const ScheduleParams& p, double t) { return alpha(p, t); })
      .def("sigma", [](const ScheduleParams& p, double t) { return sigma(p, t); })
      .def("half_log_snr", [](const ScheduleParams& p, double t) { return half_log_snr(p, t); })
      .def("t_of_lambda", [](const ScheduleParams& p, double lam) { return t_of_lambda(p, lam); })
      .def(
          "grid",
          [](const ScheduleParams& p, std::size_t n, const std::string& scheme) {
            return make_grid(p, n, grid_scheme_from_string(scheme)).times;
          },
          py::arg("n_steps"), py::arg("scheme") = "UniformT");

  m.def("exp_integral", &exp_integral, py::arg("n"), py::arg("lam_s"), py::arg("lam_t"), py::arg("lam_T"));
  m.def("quadrature_oracle", &quadrature_oracle_relative, py::arg("n"), py::arg("lam_s"), py::arg("lam_t"),
        py::arg("lam_T"), py::arg("rel_tol") = 1e-11);

  m.def(
      "semilinear_split",
      [](const ScheduleParams& p, const Batch& x_T, double t) {
        const SemilinearSplit s = semilinear_split(BridgeProblem(p, x_T), t);
        return py::make_tuple(s.linear, s.endpoint_coeff, s.denoised_coeff);
      },
      py::arg("schedule"), py::arg("x_T"), py::arg("t"));
  m.def(
      "pf_ode_rhs",
      [](const ScheduleParams& p, const Batch& x_T, const Batch& x, double t, const Batch& d) {
        return pf_ode_rhs_given(BridgeProblem(p, x_T), x, t, d);
      },
      py::arg("schedule"), py::arg("x_T"), py::arg("x"), py::arg("t"), py::arg("d"));
  m.def(
      "ode_step_k1",
      [](const ScheduleParams& p, const Batch& x_T, const Batch& x_s, double s, double t, const Batch& d_s) {
        return ode_step_k1_given(BridgeProblem(p, x_T), x_s, s, t, d_s);
      },
      py::arg("schedule"), py::arg("x_T"), py::arg("x_s"), py::arg("s"), py::arg("t"), py::arg("d_s"));

  m.def(
      "nfe_for_steps",
      [](const std::string& kind, int order, std::size_t n) {
        return nfe_for_steps(solver_kind_from_string(kind), order, n);
      },
      py::arg("kind"), py::arg("order"), py::arg("n_steps"));
  m.def(
      "sliced_wasserstein",
      [](const Batch& a, const Batch& b, std::size_t n_projections, std::uint64_t seed) {
        return sliced_wasserstein(a, b, n_projections, seed).value;
      },
      py::arg("a"), py::arg("b"), py::arg("n_projections") = 128, py::arg("seed") = 7);

  m.def("sample", &sample_from_config, py::arg("config_json"), py::arg("seed") = py::none(),
        py::arg("batch") = py::none(),
        "Runs the configured sampler; returns x_final (dim x batch), total_nfe and the time grid.");
  m.def("run_cli", &run_cli_args, py::arg("args"), "Runs the command-line tool; returns its exit status.");
}
