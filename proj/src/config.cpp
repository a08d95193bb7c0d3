#include "bridgesolve/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "bridgesolve/errors.hpp"

namespace bridgesolve {

using nlohmann::json;

namespace {

// Endpoint draws use stream steps far above any solver step index.
constexpr std::uint64_t kEndpointStep = 1ULL << 48;

void reject_unknown(const json& obj, const std::string& where, std::initializer_list<const char*> keys) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  std::set<std::string> allowed(keys.begin(), keys.end());
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key())) throw ConfigError(where + ": unknown key '" + it.key() + "'");
  }
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + ": wrong type");
  }
}

std::uint64_t get_u64(const json& obj, const char* key, std::uint64_t fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
    throw ConfigError(where + "." + key + ": expected a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

Vector to_vector(const json& v, const std::string& where) {
  if (!v.is_array() || v.empty()) throw ConfigError(where + ": expected a non-empty array of numbers");
  Vector out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) throw ConfigError(where + ": expected numbers");
    out[static_cast<Eigen::Index>(i)] = v[i].get<double>();
  }
  return out;
}

json from_vector(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

PriorSpec parse_prior(const json& j, const std::string& where, bool allow_test_denoisers) {
  if (!j.is_object() || !j.contains("kind")) throw ConfigError(where + ": missing 'kind'");
  PriorSpec spec;
  const std::string kind = get_or<std::string>(j, "kind", "", where);
  if (kind == "gaussian") {
    reject_unknown(j, where, {"kind", "mean", "var"});
    spec.kind = PriorKind::Gaussian;
    if (!j.contains("mean") || !j.contains("var")) throw ConfigError(where + ": gaussian needs mean and var");
    spec.gaussian.mean = to_vector(j["mean"], where + ".mean");
    spec.gaussian.var = to_vector(j["var"], where + ".var");
  } else if (kind == "gmm") {
    reject_unknown(j, where, {"kind", "weights", "means", "vars"});
    spec.kind = PriorKind::Gmm;
    if (!j.contains("weights") || !j.contains("means") || !j.contains("vars")) {
      throw ConfigError(where + ": gmm needs weights, means and vars");
    }
    spec.gmm.weights = to_vector(j["weights"], where + ".weights");
    if (!j["means"].is_array() || !j["vars"].is_array()) throw ConfigError(where + ": means/vars must be arrays");
    for (const json& m : j["means"]) spec.gmm.means.push_back(to_vector(m, where + ".means"));
    for (const json& v : j["vars"]) spec.gmm.vars.push_back(to_vector(v, where + ".vars"));
  } else if (allow_test_denoisers && kind == "constant") {
    reject_unknown(j, where, {"kind", "value"});
    spec.kind = PriorKind::Constant;
    if (!j.contains("value")) throw ConfigError(where + ": constant needs value");
    spec.c0 = to_vector(j["value"], where + ".value");
  } else if (allow_test_denoisers && kind == "affine_lambda") {
    reject_unknown(j, where, {"kind", "c0", "c1"});
    spec.kind = PriorKind::AffineLambda;
    if (!j.contains("c0") || !j.contains("c1")) throw ConfigError(where + ": affine_lambda needs c0 and c1");
    spec.c0 = to_vector(j["c0"], where + ".c0");
    spec.c1 = to_vector(j["c1"], where + ".c1");
  } else {
    throw ConfigError(where + ": unknown kind '" + kind + "'");
  }
  return spec;
}

json prior_to_json(const PriorSpec& spec) {
  json j;
  switch (spec.kind) {
    case PriorKind::Gaussian:
      j["kind"] = "gaussian";
      j["mean"] = from_vector(spec.gaussian.mean);
      j["var"] = from_vector(spec.gaussian.var);
      break;
    case PriorKind::Gmm: {
      j["kind"] = "gmm";
      j["weights"] = from_vector(spec.gmm.weights);
      json means = json::array(), vars = json::array();
      for (const Vector& m : spec.gmm.means) means.push_back(from_vector(m));
      for (const Vector& v : spec.gmm.vars) vars.push_back(from_vector(v));
      j["means"] = means;
      j["vars"] = vars;
      break;
    }
    case PriorKind::Constant:
      j["kind"] = "constant";
      j["value"] = from_vector(spec.c0);
      break;
    case PriorKind::AffineLambda:
      j["kind"] = "affine_lambda";
      j["c0"] = from_vector(spec.c0);
      j["c1"] = from_vector(spec.c1);
      break;
  }
  return j;
}

OdeMethod ode_method_from_string(const std::string& name, const std::string& where) {
  if (name == "ExpK1") return OdeMethod::ExpK1;
  if (name == "ExpK2") return OdeMethod::ExpK2;
  if (name == "Heun") return OdeMethod::Heun;
  throw ConfigError(where + ": unknown method '" + name + "' (ExpK1, ExpK2, Heun)");
}

const char* to_cstr(OdeMethod m) {
  switch (m) {
    case OdeMethod::ExpK1: return "ExpK1";
    case OdeMethod::ExpK2: return "ExpK2";
    case OdeMethod::Heun: return "Heun";
  }
  return "?";
}

template <typename Fn>
auto wrap_enum(Fn&& fn, const std::string& where) {
  try {
    return fn();
  } catch (const std::exception& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

std::vector<BandedStudy> default_studies() {
  return {{"DBMSolver-k2", OdeMethod::ExpK2, 1.7, 2.4},
          {"DBMSolver-k1", OdeMethod::ExpK1, 0.8, 1.3},
          {"Heun", OdeMethod::Heun, 1.7, 2.4}};
}

}  // namespace

Eigen::Index PriorSpec::dim() const {
  switch (kind) {
    case PriorKind::Gaussian: return gaussian.dim();
    case PriorKind::Gmm: return gmm.dim();
    default: return c0.size();
  }
}

void PriorSpec::validate() const {
  try {
    switch (kind) {
      case PriorKind::Gaussian: gaussian.validate(); break;
      case PriorKind::Gmm: gmm.validate(); break;
      case PriorKind::Constant:
        if (c0.size() == 0 || !c0.allFinite()) throw ConfigError("constant value must be finite and non-empty");
        break;
      case PriorKind::AffineLambda:
        if (c0.size() == 0 || c0.size() != c1.size() || !c0.allFinite() || !c1.allFinite()) {
          throw ConfigError("affine_lambda c0/c1 must be finite with equal length");
        }
        break;
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
}

std::unique_ptr<Denoiser> PriorSpec::make_denoiser() const {
  switch (kind) {
    case PriorKind::Gaussian: return std::make_unique<GaussianPosteriorDenoiser>(gaussian);
    case PriorKind::Gmm: return std::make_unique<GmmPosteriorDenoiser>(gmm);
    case PriorKind::Constant: return std::make_unique<ConstantDenoiser>(c0);
    case PriorKind::AffineLambda: return std::make_unique<AffineLambdaDenoiser>(c0, c1);
  }
  throw ConfigError("unknown prior kind");
}

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  reject_unknown(root, "config", {"schedule", "model", "solver", "run", "integrals", "convergence", "benchmark"});
  for (const char* block : {"schedule", "model", "solver", "run"}) {
    if (!root.contains(block)) throw ConfigError(std::string("config: missing block '") + block + "'");
  }

  ExperimentConfig cfg;

  const json& s = root["schedule"];
  reject_unknown(s, "schedule", {"kind", "T", "t_min", "ve_sigma_scale", "vp_beta_min", "vp_beta_max"});
  const std::string kind = get_or<std::string>(s, "kind", "VE", "schedule");
  if (kind == "VE") {
    cfg.schedule.kind = ScheduleKind::VE;
  } else if (kind == "VP") {
    cfg.schedule.kind = ScheduleKind::VP;
  } else {
    throw ConfigError("schedule.kind: expected VE or VP");
  }
  cfg.schedule.T = get_or<double>(s, "T", cfg.schedule.T, "schedule");
  cfg.schedule.t_min = get_or<double>(s, "t_min", cfg.schedule.t_min, "schedule");
  cfg.schedule.ve_sigma_scale = get_or<double>(s, "ve_sigma_scale", cfg.schedule.ve_sigma_scale, "schedule");
  cfg.schedule.vp_beta_min = get_or<double>(s, "vp_beta_min", cfg.schedule.vp_beta_min, "schedule");
  cfg.schedule.vp_beta_max = get_or<double>(s, "vp_beta_max", cfg.schedule.vp_beta_max, "schedule");

  const json& m = root["model"];
  reject_unknown(m, "model", {"prior", "endpoint"});
  if (!m.contains("prior")) throw ConfigError("model: missing 'prior'");
  cfg.model.prior = parse_prior(m["prior"], "model.prior", true);
  if (!m.contains("endpoint")) throw ConfigError("model: missing 'endpoint'");
  const json& e = m["endpoint"];
  reject_unknown(e, "model.endpoint", {"source", "value", "distribution"});
  const std::string source = get_or<std::string>(e, "source", "", "model.endpoint");
  if (source == "fixed") {
    cfg.model.endpoint_source = EndpointSource::Fixed;
    if (!e.contains("value")) throw ConfigError("model.endpoint: fixed source needs 'value'");
    cfg.model.endpoint = to_vector(e["value"], "model.endpoint.value");
  } else if (source == "sampled") {
    cfg.model.endpoint_source = EndpointSource::Sampled;
    if (!e.contains("distribution")) throw ConfigError("model.endpoint: sampled source needs 'distribution'");
    cfg.model.endpoint_dist = parse_prior(e["distribution"], "model.endpoint.distribution", false);
  } else {
    throw ConfigError("model.endpoint.source: expected fixed or sampled");
  }

  const json& v = root["solver"];
  reject_unknown(v, "solver", {"kind", "order", "midpoint_ratio", "nfe_budget", "n_steps", "epsilon_mode",
                               "epsilon", "grid", "churn_ratio"});
  cfg.solver.kind = wrap_enum([&] { return solver_kind_from_string(get_or<std::string>(v, "kind", "DBMSolver", "solver")); },
                              "solver.kind");
  cfg.solver.order = get_or<int>(v, "order", cfg.solver.order, "solver");
  cfg.solver.midpoint_ratio = get_or<double>(v, "midpoint_ratio", cfg.solver.midpoint_ratio, "solver");
  if (v.contains("nfe_budget") && v.contains("n_steps")) {
    throw ConfigError("solver: give either nfe_budget or n_steps, not both");
  }
  if (v.contains("nfe_budget")) cfg.solver.nfe_budget = get_u64(v, "nfe_budget", 0, "solver");
  cfg.solver.n_steps = get_u64(v, "n_steps", cfg.solver.n_steps, "solver");
  cfg.solver.epsilon_mode = wrap_enum(
      [&] { return epsilon_mode_from_string(get_or<std::string>(v, "epsilon_mode", "GridStep", "solver")); },
      "solver.epsilon_mode");
  cfg.solver.epsilon = get_or<double>(v, "epsilon", cfg.solver.epsilon, "solver");
  cfg.solver.grid = wrap_enum([&] { return grid_scheme_from_string(get_or<std::string>(v, "grid", "UniformT", "solver")); },
                              "solver.grid");
  cfg.solver.churn_ratio = get_or<double>(v, "churn_ratio", cfg.solver.churn_ratio, "solver");

  const json& r = root["run"];
  reject_unknown(r, "run", {"seed", "batch", "output_dir", "record_timing"});
  cfg.run.seed = get_u64(r, "seed", cfg.run.seed, "run");
  cfg.run.batch = get_u64(r, "batch", cfg.run.batch, "run");
  cfg.run.output_dir = get_or<std::string>(r, "output_dir", cfg.run.output_dir, "run");
  cfg.run.record_timing = get_or<bool>(r, "record_timing", cfg.run.record_timing, "run");

  if (root.contains("integrals")) {
    const json& q = root["integrals"];
    reject_unknown(q, "integrals", {"samples", "min_spread", "max_spread", "lambda_T_min", "lambda_T_max", "rel_tol"});
    cfg.integrals.samples = get_u64(q, "samples", cfg.integrals.samples, "integrals");
    cfg.integrals.min_spread = get_or<double>(q, "min_spread", cfg.integrals.min_spread, "integrals");
    cfg.integrals.max_spread = get_or<double>(q, "max_spread", cfg.integrals.max_spread, "integrals");
    cfg.integrals.lambda_T_min = get_or<double>(q, "lambda_T_min", cfg.integrals.lambda_T_min, "integrals");
    cfg.integrals.lambda_T_max = get_or<double>(q, "lambda_T_max", cfg.integrals.lambda_T_max, "integrals");
    cfg.integrals.rel_tol = get_or<double>(q, "rel_tol", cfg.integrals.rel_tol, "integrals");
  }

  cfg.convergence.studies = default_studies();
  if (root.contains("convergence")) {
    const json& c = root["convergence"];
    reject_unknown(c, "convergence", {"step_counts", "start", "end", "grid", "reference_substeps", "batch", "studies"});
    if (c.contains("step_counts")) {
      if (!c["step_counts"].is_array()) throw ConfigError("convergence.step_counts: expected an array");
      cfg.convergence.step_counts.clear();
      for (const json& n : c["step_counts"]) {
        if (!n.is_number_unsigned()) throw ConfigError("convergence.step_counts: expected positive integers");
        cfg.convergence.step_counts.push_back(n.get<std::size_t>());
      }
    }
    cfg.convergence.start = get_or<double>(c, "start", cfg.convergence.start, "convergence");
    cfg.convergence.end = get_or<double>(c, "end", cfg.convergence.end, "convergence");
    cfg.convergence.grid = wrap_enum(
        [&] { return grid_scheme_from_string(get_or<std::string>(c, "grid", "UniformLambda", "convergence")); },
        "convergence.grid");
    cfg.convergence.reference_substeps =
        get_u64(c, "reference_substeps", cfg.convergence.reference_substeps, "convergence");
    cfg.convergence.batch = get_u64(c, "batch", cfg.convergence.batch, "convergence");
    if (c.contains("studies")) {
      if (!c["studies"].is_array()) throw ConfigError("convergence.studies: expected an array");
      cfg.convergence.studies.clear();
      for (const json& st : c["studies"]) {
        reject_unknown(st, "convergence.studies[]", {"name", "method", "band"});
        BandedStudy study;
        study.method = ode_method_from_string(get_or<std::string>(st, "method", "", "convergence.studies[]"),
                                              "convergence.studies[].method");
        study.name = get_or<std::string>(st, "name", to_cstr(study.method), "convergence.studies[]");
        const json band = st.contains("band") ? st["band"] : json();
        if (!band.is_array() || band.size() != 2 || !band[0].is_number() || !band[1].is_number()) {
          throw ConfigError("convergence.studies[].band: expected [lo, hi]");
        }
        study.band_lo = band[0].get<double>();
        study.band_hi = band[1].get<double>();
        cfg.convergence.studies.push_back(study);
      }
    }
  }

  if (root.contains("benchmark")) {
    const json& b = root["benchmark"];
    reject_unknown(b, "benchmark", {"cells", "reference_steps", "n_projections", "projection_seed"});
    if (b.contains("cells")) {
      if (!b["cells"].is_array()) throw ConfigError("benchmark.cells: expected an array");
      for (const json& cell : b["cells"]) {
        reject_unknown(cell, "benchmark.cells[]", {"kind", "order", "nfe", "epsilon_mode", "grid"});
        BenchmarkCell bc;
        bc.kind = wrap_enum(
            [&] { return solver_kind_from_string(get_or<std::string>(cell, "kind", "", "benchmark.cells[]")); },
            "benchmark.cells[].kind");
        bc.order = get_or<int>(cell, "order", 2, "benchmark.cells[]");
        if (!cell.contains("nfe")) throw ConfigError("benchmark.cells[]: missing 'nfe'");
        bc.nfe = get_u64(cell, "nfe", 0, "benchmark.cells[]");
        if (cell.contains("epsilon_mode")) {
          bc.epsilon_mode = wrap_enum(
              [&] { return epsilon_mode_from_string(get_or<std::string>(cell, "epsilon_mode", "", "benchmark.cells[]")); },
              "benchmark.cells[].epsilon_mode");
        }
        if (cell.contains("grid")) {
          bc.grid = wrap_enum(
              [&] { return grid_scheme_from_string(get_or<std::string>(cell, "grid", "", "benchmark.cells[]")); },
              "benchmark.cells[].grid");
        }
        cfg.benchmark.cells.push_back(bc);
      }
    }
    cfg.benchmark.reference_steps = get_u64(b, "reference_steps", cfg.benchmark.reference_steps, "benchmark");
    cfg.benchmark.n_projections = get_u64(b, "n_projections", cfg.benchmark.n_projections, "benchmark");
    cfg.benchmark.projection_seed = get_u64(b, "projection_seed", cfg.benchmark.projection_seed, "benchmark");
  }

  cfg.validate();
  return cfg;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return from_json_text(buffer.str());
}

std::string ExperimentConfig::to_json_text() const {
  json root;
  root["schedule"] = {{"kind", std::string(to_string(schedule.kind))},
                      {"T", schedule.T},
                      {"t_min", schedule.t_min},
                      {"ve_sigma_scale", schedule.ve_sigma_scale},
                      {"vp_beta_min", schedule.vp_beta_min},
                      {"vp_beta_max", schedule.vp_beta_max}};

  json endpoint;
  if (model.endpoint_source == EndpointSource::Fixed) {
    endpoint = {{"source", "fixed"}, {"value", from_vector(model.endpoint)}};
  } else {
    endpoint = {{"source", "sampled"}, {"distribution", prior_to_json(model.endpoint_dist)}};
  }
  root["model"] = {{"prior", prior_to_json(model.prior)}, {"endpoint", endpoint}};

  json sv = {{"kind", std::string(to_string(solver.kind))},
             {"order", solver.order},
             {"midpoint_ratio", solver.midpoint_ratio},
             {"epsilon_mode", std::string(to_string(solver.epsilon_mode))},
             {"epsilon", solver.epsilon},
             {"grid", std::string(to_string(solver.grid))},
             {"churn_ratio", solver.churn_ratio}};
  if (solver.nfe_budget) {
    sv["nfe_budget"] = *solver.nfe_budget;
  } else {
    sv["n_steps"] = solver.n_steps;
  }
  root["solver"] = sv;

  root["run"] = {{"seed", run.seed},
                 {"batch", run.batch},
                 {"output_dir", run.output_dir},
                 {"record_timing", run.record_timing}};

  root["integrals"] = {{"samples", integrals.samples},
                       {"min_spread", integrals.min_spread},
                       {"max_spread", integrals.max_spread},
                       {"lambda_T_min", integrals.lambda_T_min},
                       {"lambda_T_max", integrals.lambda_T_max},
                       {"rel_tol", integrals.rel_tol}};

  json studies = json::array();
  for (const BandedStudy& st : convergence.studies) {
    studies.push_back({{"name", st.name}, {"method", to_cstr(st.method)}, {"band", {st.band_lo, st.band_hi}}});
  }
  root["convergence"] = {{"step_counts", convergence.step_counts},
                         {"start", convergence.start},
                         {"end", convergence.end},
                         {"grid", std::string(to_string(convergence.grid))},
                         {"reference_substeps", convergence.reference_substeps},
                         {"batch", convergence.batch},
                         {"studies", studies}};

  json cells = json::array();
  for (const BenchmarkCell& c : benchmark.cells) {
    json cell = {{"kind", std::string(to_string(c.kind))},
                 {"order", c.order},
                 {"nfe", c.nfe},
                 {"epsilon_mode", std::string(to_string(c.epsilon_mode.value_or(solver.epsilon_mode)))},
                 {"grid", std::string(to_string(c.grid.value_or(solver.grid)))}};
    cells.push_back(cell);
  }
  root["benchmark"] = {{"cells", cells},
                       {"reference_steps", benchmark.reference_steps},
                       {"n_projections", benchmark.n_projections},
                       {"projection_seed", benchmark.projection_seed}};
  return root.dump(2) + "\n";
}

void ExperimentConfig::validate() const {
  try {
    schedule.validate();
  } catch (const std::exception& e) {
    throw ConfigError(std::string("schedule: ") + e.what());
  }
  model.prior.validate();
  const Eigen::Index d = model.prior.dim();
  if (model.endpoint_source == EndpointSource::Fixed) {
    if (model.endpoint.size() != d || !model.endpoint.allFinite()) {
      throw ConfigError("model.endpoint.value: dimension must match the prior and be finite");
    }
  } else {
    model.endpoint_dist.validate();
    if (model.endpoint_dist.dim() != d) throw ConfigError("model.endpoint.distribution: dimension mismatch");
  }
  if (run.batch == 0) throw ConfigError("run.batch must be positive");
  if (run.output_dir.empty()) throw ConfigError("run.output_dir must not be empty");
  if (solver.order != 1 && solver.order != 2) throw ConfigError("solver.order must be 1 or 2");
  if (!(solver.midpoint_ratio > 0.0 && solver.midpoint_ratio < 1.0)) {
    throw ConfigError("solver.midpoint_ratio must lie in (0, 1)");
  }
  if (!(solver.epsilon > 0.0 && solver.epsilon < schedule.T)) throw ConfigError("solver.epsilon must lie in (0, T)");
  if (!(solver.churn_ratio > 0.0 && solver.churn_ratio < 1.0)) throw ConfigError("solver.churn_ratio must lie in (0, 1)");
  resolve_steps(solver.kind, solver.order, solver.nfe_budget);

  if (integrals.samples == 0) throw ConfigError("integrals.samples must be positive");
  if (!(integrals.min_spread > 0.0 && integrals.min_spread <= integrals.max_spread)) {
    throw ConfigError("integrals: need 0 < min_spread <= max_spread");
  }
  if (!(integrals.lambda_T_min <= integrals.lambda_T_max)) throw ConfigError("integrals: lambda_T range is empty");
  if (!(integrals.rel_tol > 0.0)) throw ConfigError("integrals.rel_tol must be positive");

  if (convergence.step_counts.size() < 4) throw ConfigError("convergence.step_counts: need at least 4 entries");
  for (std::size_t n : convergence.step_counts) {
    if (n == 0) throw ConfigError("convergence.step_counts: entries must be positive");
  }
  if (!(convergence.end >= schedule.t_min && convergence.end < convergence.start && convergence.start < schedule.T)) {
    throw ConfigError("convergence: need t_min <= end < start < T");
  }
  if (convergence.reference_substeps == 0) throw ConfigError("convergence.reference_substeps must be positive");
  if (convergence.batch == 0) throw ConfigError("convergence.batch must be positive");
  for (const BandedStudy& st : convergence.studies) {
    if (!(st.band_lo <= st.band_hi)) throw ConfigError("convergence.studies[" + st.name + "]: empty band");
  }

  for (const BenchmarkCell& c : benchmark.cells) {
    if (c.order != 1 && c.order != 2) throw ConfigError("benchmark.cells[].order must be 1 or 2");
    resolve_steps(c.kind, c.order, c.nfe);
  }
  if (benchmark.reference_steps < 3) throw ConfigError("benchmark.reference_steps must be at least 3");
  if (benchmark.n_projections == 0) throw ConfigError("benchmark.n_projections must be positive");
}

std::size_t ExperimentConfig::resolve_steps(SolverKind kind, int order, std::optional<std::uint64_t> nfe) const {
  if (!nfe) {
    if (solver.n_steps < 3) throw ConfigError("solver.n_steps must be at least 3");
    return solver.n_steps;
  }
  const std::size_t n = steps_for_nfe(kind, order, *nfe);
  if (n == 0) {
    const auto [below, above] = nearest_budgets(kind, order, *nfe);
    std::ostringstream msg;
    msg << "NFE budget " << *nfe << " is not reachable for " << to_string(kind);
    if (kind == SolverKind::DBMSolver) msg << " (k=" << order << ")";
    msg << "; nearest reachable budgets: ";
    if (below > 0) msg << below << " and ";
    msg << above;
    throw ConfigError(msg.str());
  }
  return n;
}

SolverConfig ExperimentConfig::solver_config_for(SolverKind kind, int order, std::size_t n_steps) const {
  SolverConfig sc;
  sc.kind = kind;
  sc.order = order;
  sc.midpoint_ratio = solver.midpoint_ratio;
  sc.grid = make_grid(schedule, n_steps, solver.grid);
  sc.seed = run.seed;
  sc.epsilon_mode = solver.epsilon_mode;
  sc.epsilon = solver.epsilon;
  sc.churn_ratio = solver.churn_ratio;
  return sc;
}

SolverConfig ExperimentConfig::solver_config() const {
  return solver_config_for(solver.kind, solver.order, resolve_steps(solver.kind, solver.order, solver.nfe_budget));
}

BridgeProblem ExperimentConfig::make_problem(std::size_t batch) const {
  BridgeProblem problem;
  problem.schedule = schedule;
  if (model.endpoint_source == EndpointSource::Fixed) {
    problem.x_T = model.endpoint;
    return problem;
  }
  const NoiseStream noise(run.seed);
  const auto n = static_cast<Eigen::Index>(batch);
  if (model.endpoint_dist.kind == PriorKind::Gaussian) {
    problem.x_T = model.endpoint_dist.gaussian.sample(n, noise, kEndpointStep);
  } else {
    problem.x_T = model.endpoint_dist.gmm.sample(n, noise, kEndpointStep);
  }
  return problem;
}

}  // namespace bridgesolve
