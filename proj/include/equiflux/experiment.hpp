/**
 * @file experiment.hpp
 * @brief Experiment configuration (JSON) and the report-producing driver.
 */
#pragma once

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "equilibration.hpp"
#include "estimator.hpp"
#include "lifting.hpp"
#include "mesh.hpp"
#include "mesh_io.hpp"
#include "oracle.hpp"
#include "primal.hpp"
#include "problems.hpp"

namespace equiflux {

/// Invalid configuration or unusable input files.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ExperimentKind { Solve, Estimate, Lift, LiftWeighted, Convergence, PSweep };

inline ExperimentKind parse_kind(const std::string& s) {
  if (s == "solve") return ExperimentKind::Solve;
  if (s == "estimate") return ExperimentKind::Estimate;
  if (s == "lift") return ExperimentKind::Lift;
  if (s == "lift-weighted") return ExperimentKind::LiftWeighted;
  if (s == "convergence") return ExperimentKind::Convergence;
  if (s == "p-sweep") return ExperimentKind::PSweep;
  throw ConfigError("unknown experiment kind '" + s + "'");
}

inline std::string kind_name(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::Solve: return "solve";
    case ExperimentKind::Estimate: return "estimate";
    case ExperimentKind::Lift: return "lift";
    case ExperimentKind::LiftWeighted: return "lift-weighted";
    case ExperimentKind::Convergence: return "convergence";
    case ExperimentKind::PSweep: return "p-sweep";
  }
  return "?";
}

struct PsiConfig {
  std::string kind = "one";  // one | hat | affine | values
  Vec2 point = Vec2(0.5, 0.5);
  std::array<double, 3> affine{0.0, 1.0, 0.0};  // a + b x + c y
  std::vector<double> values;
  std::optional<double> poincare;
  bool make_compatible = false;
  bool convex_domain = true;  // selects the 1/π Poincaré constant when no explicit value is given
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::Estimate;
  std::string problem = "sin-sin";
  // mesh: file basename or structured square
  std::optional<std::string> mesh_file;
  int square = 8;
  double perturb = 0.0;
  std::uint64_t mesh_seed = 0;
  std::string boundary = "problem";  // problem | dirichlet | neumann | mixed
  int p = 1;
  int pprime = 1;
  std::uint64_t seed = 1;
  int refinements = 3;
  int p_min = 1, p_max = 5;
  std::string sweep = "estimate";  // estimate | lift | lift-weighted
  FluxSpace space = FluxSpace::Standard;
  TargetKind target = TargetKind::Pointwise;
  PsiConfig psi;
  OracleOptions oracle;
  double constraint_tolerance = 1e-10;
  std::string out = "equiflux-out";

  void validate() const {
    if (p < 1 || p > kMaxDegree) throw ConfigError("p must lie in [1, " + std::to_string(kMaxDegree) + "]");
    if (pprime < 1 || pprime > p) throw ConfigError("need 1 <= pprime <= p");
    if (p_min < 1 || p_max < p_min || p_max > kMaxDegree) throw ConfigError("invalid p range");
    if (refinements < 1) throw ConfigError("refinements must be >= 1");
    if (square < 1) throw ConfigError("square subdivision must be >= 1");
    if (mesh_file) {
      for (const char* ext : {".node", ".ele", ".bnd"})
        if (!std::filesystem::exists(*mesh_file + ext)) throw ConfigError("mesh file not found: " + *mesh_file + ext);
    }
  }
};

inline ExperimentConfig parse_config(const nlohmann::json& j) {
  ExperimentConfig c;
  try {
    if (j.contains("kind")) c.kind = parse_kind(j.at("kind").get<std::string>());
    c.problem = j.value("problem", c.problem);
    if (j.contains("mesh")) {
      const auto& m = j.at("mesh");
      if (m.contains("file")) c.mesh_file = m.at("file").get<std::string>();
      c.square = m.value("square", c.square);
      c.perturb = m.value("perturb", c.perturb);
      c.mesh_seed = m.value("seed", c.mesh_seed);
    }
    c.boundary = j.value("boundary", c.boundary);
    c.p = j.value("p", c.p);
    c.pprime = j.value("pprime", c.pprime);
    c.seed = j.value("seed", c.seed);
    c.refinements = j.value("refinements", c.refinements);
    c.p_min = j.value("p_min", c.p_min);
    c.p_max = j.value("p_max", c.p_max);
    c.sweep = j.value("sweep", c.sweep);
    const std::string space = j.value("flux_space", std::string("standard"));
    if (space == "modified") c.space = FluxSpace::Modified;
    else if (space != "standard") throw ConfigError("flux_space must be standard or modified");
    const std::string target = j.value("target", std::string("pointwise"));
    if (target == "projected") c.target = TargetKind::Projected;
    else if (target != "pointwise") throw ConfigError("target must be pointwise or projected");
    if (j.contains("psi")) {
      const auto& s = j.at("psi");
      c.psi.kind = s.value("kind", c.psi.kind);
      if (s.contains("point")) c.psi.point = Vec2(s.at("point").at(0).get<double>(), s.at("point").at(1).get<double>());
      if (s.contains("coefficients")) c.psi.affine = s.at("coefficients").get<std::array<double, 3>>();
      if (s.contains("values")) c.psi.values = s.at("values").get<std::vector<double>>();
      if (s.contains("poincare") && !s.at("poincare").is_null()) c.psi.poincare = s.at("poincare").get<double>();
      c.psi.make_compatible = s.value("make_compatible", c.psi.make_compatible);
      c.psi.convex_domain = s.value("convex_domain", c.psi.convex_domain);
    }
    if (j.contains("oracle")) {
      const auto& o = j.at("oracle");
      c.oracle.extra_degree = o.value("extra_degree", c.oracle.extra_degree);
      c.oracle.min_levels = o.value("min_levels", c.oracle.min_levels);
      c.oracle.max_levels = o.value("max_levels", c.oracle.max_levels);
      c.oracle.target_margin = o.value("target_margin", c.oracle.target_margin);
    }
    if (j.contains("tolerances")) c.constraint_tolerance = j.at("tolerances").value("constraint", c.constraint_tolerance);
    c.out = j.value("out", c.out);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path + ": " + e.what());
  }
  ExperimentConfig c = parse_config(j);
  // mesh files named in a config are relative to the config's directory
  if (c.mesh_file && std::filesystem::path(*c.mesh_file).is_relative())
    c.mesh_file = (std::filesystem::path(path).parent_path() / *c.mesh_file).string();
  return c;
}

// --------------------------------------------------------------------------

struct RunResult {
  int exit_code = 0;  // 0 ok, 2 check failure
  nlohmann::json report;
  std::vector<std::string> failures;
};

namespace detail {

inline std::pair<Mesh, BoundaryPartition> config_mesh(const ExperimentConfig& c) {
  if (c.mesh_file) return read_mesh(*c.mesh_file);
  return structured_square(c.square, BoundaryMarker::Dirichlet, c.perturb, c.mesh_seed);
}

inline void apply_boundary(const ExperimentConfig& c, const Mesh& mesh, ManufacturedProblem& pr) {
  if (c.boundary == "problem") return;
  if (c.boundary == "dirichlet") pr.data.partition = BoundaryPartition::uniform(mesh, BoundaryMarker::Dirichlet);
  else if (c.boundary == "neumann") pr.data.partition = BoundaryPartition::uniform(mesh, BoundaryMarker::Neumann);
  else if (c.boundary == "mixed")
    pr.data.partition = mark_boundary(mesh, [](const Vec2& m) { return m[0] < 1e-12 || m[1] < 1e-12; });
  else if (c.boundary == "file") return;
  else throw ConfigError("boundary must be problem, dirichlet, neumann, mixed or file");
}

inline ManufacturedProblem config_problem(const ExperimentConfig& c, const Mesh& mesh, const BoundaryPartition& file_bp,
                                          int p) {
  ManufacturedProblem pr;
  try {
    pr = make_problem(c.problem, mesh, p, c.seed);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (c.boundary == "file") pr.data.partition = file_bp;
  apply_boundary(c, mesh, pr);
  return pr;
}

inline WeightedLiftConfig config_psi(const PsiConfig& s, const Mesh& mesh) {
  WeightedLiftConfig w;
  if (s.kind == "one") w = psi_constant(mesh);
  else if (s.kind == "hat") w = psi_hat(mesh, nearest_vertex(mesh, s.point));
  else if (s.kind == "affine") {
    const auto a = s.affine;
    w = psi_nodal(mesh, [a](const Vec2& x) { return a[0] + a[1] * x[0] + a[2] * x[1]; });
  } else if (s.kind == "values") {
    if (s.values.size() != mesh.num_vertices()) throw ConfigError("psi.values: one value per vertex required");
    w.weights = s.values;
  } else {
    throw ConfigError("psi.kind must be one, hat, affine or values");
  }
  w.poincare = s.poincare;
  w.convex_domain = s.convex_domain;
  return w;
}

inline std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(12) << v;
  return os.str();
}

inline nlohmann::json constraints_json(const EquilibrationReport& r) {
  return {{"max_divergence_residual", r.max_divergence_residual},
          {"max_normal_jump", r.max_normal_jump},
          {"max_neumann_trace", r.max_neumann_trace},
          {"data_norm", r.data_norm}};
}

inline nlohmann::json oracle_json(const OracleValue& o) {
  return {{"value", o.value}, {"margin", o.margin}, {"levels", o.levels}, {"degree", o.degree}, {"converged", o.converged}};
}

inline nlohmann::json mesh_json(const Mesh& mesh) {
  double h = 0.0;
  for (double d : mesh.diameters) h = std::max(h, d);
  return {{"vertices", mesh.num_vertices()},
          {"elements", mesh.num_elements()},
          {"h", h},
          {"shape_regularity", mesh.shape_regularity()}};
}

inline std::ofstream open_out(const std::filesystem::path& dir, const std::string& name) {
  std::filesystem::create_directories(dir);
  std::ofstream os(dir / name);
  if (!os) throw std::runtime_error("cannot write " + (dir / name).string());
  return os;
}

struct EstimateOutcome {
  nlohmann::json json;
  EstimatorReport estimator;
  std::vector<double> element_error;
  std::optional<EfficiencyReport> efficiency;
  bool ok = true;
  std::vector<std::string> failures;
};

/// Primal solve, equilibration, verification, estimator, and error reference.
inline EstimateOutcome run_estimate(const ExperimentConfig& c, const Mesh& mesh, const ManufacturedProblem& pr, int p,
                                    int pprime) {
  EstimateOutcome out;
  const PrimalSolution uh = solve_primal(pr.data, mesh, pprime);
  EquilibrationOptions eo;
  eo.space = c.space;
  eo.target = c.target;
  eo.keep_patches = false;
  const RTNField sigma = equilibrate(mesh, pr.data, uh, p, eo).flux;
  const EquilibrationReport ver = verify_equilibration(sigma, mesh, pr.data);
  out.estimator = estimate(sigma, pr.data, uh);
  double err = 0.0, err_upper = 0.0, margin = 0.0;
  nlohmann::json oracle;
  if (pr.grad_u) {
    out.element_error = exact_element_errors(uh, *pr.grad_u, std::max(2 * pprime + 8, 14));
    for (double e : out.element_error) err += e * e;
    err = err_upper = std::sqrt(err);
    oracle = {{"type", "exact"}};
  } else {
    OracleOptions oo = c.oracle;
    oo.target_margin = std::min(oo.target_margin, 0.001);
    const ErrorOracle eo2 = error_oracle(uh, pr.data, oo);
    out.element_error = eo2.element_error;
    err = eo2.error;
    err_upper = eo2.upper;
    margin = eo2.margin;
    oracle = oracle_json(eo2.reference);
    oracle["type"] = "overkill";
  }
  out.estimator.error = err;
  out.estimator.element_error = out.element_error;
  const GlobalEstimate ge = global_estimate(out.estimator.elements, err_upper);
  out.efficiency = efficiency_report(mesh, out.estimator, out.element_error);
  const bool ver_ok = ver.passes(c.constraint_tolerance);
  if (!ver_ok) out.failures.push_back("equilibration constraints exceed tolerance");
  if (!ge.guaranteed) out.failures.push_back("guaranteed upper bound violated");
  out.ok = out.failures.empty();
  out.json = {{"p", p},
              {"pprime", pprime},
              {"dofs", uh.space().num_dofs()},
              {"energy_norm", uh.energy_norm()},
              {"eta", out.estimator.eta},
              {"flux_norm", out.estimator.flux_norm},
              {"oscillation", out.estimator.oscillation_norm},
              {"error", err},
              {"error_upper", err_upper},
              {"oracle_margin", margin},
              {"oracle", oracle},
              {"bound_holds", ge.guaranteed},
              {"slack", ge.slack},
              {"constraints", constraints_json(ver)},
              {"constraints_pass", ver_ok}};
  if (auto ie = out.estimator.efficiency_index()) out.json["efficiency_index"] = *ie;
  if (out.efficiency->global) out.json["global_efficiency_ratio"] = *out.efficiency->global;
  out.json["max_local_efficiency_ratio"] = out.efficiency->max_local;
  out.json["exact_elements"] = out.efficiency->exact_elements;
  return out;
}

inline void write_estimate_csv(std::ostream& os, const EstimateOutcome& e) {
  os << "element,flux,oscillation,error,ratio\n";
  for (std::size_t k = 0; k < e.estimator.elements.size(); ++k) {
    os << k << ',' << fmt(e.estimator.elements[k].flux) << ',' << fmt(e.estimator.elements[k].oscillation) << ','
       << fmt(e.element_error[k]) << ',';
    if (e.efficiency && e.efficiency->local[k]) os << fmt(*e.efficiency->local[k]);
    else os << "exact";
    os << '\n';
  }
}

struct LiftOutcome {
  nlohmann::json json;
  LiftResult result;
  bool ok = true;
  std::vector<std::string> failures;
};

inline std::pair<PiecewisePoly, RTNField> lift_data(const ManufacturedProblem& pr, const Mesh& mesh, int p) {
  if (pr.f_poly && pr.xi_poly && pr.f_poly->degree <= p - 1 && pr.xi_poly->degree <= p - 1)
    return {*pr.f_poly, *pr.xi_poly};
  const int ex = std::max(pr.data.quadrature_for(p), 2 * p + 2);
  return {project_scalar(pr.data.f, p - 1, mesh, ex), project_rtn(pr.data.xi, p - 1, mesh, ex)};
}

inline LiftOutcome run_lift(const ExperimentConfig& c, const Mesh& mesh, const ManufacturedProblem& pr, int p,
                            bool weighted) {
  LiftOutcome out;
  auto [f, xi] = lift_data(pr, mesh, p);
  ProblemData oracle_data;
  oracle_data.xi = xi.sampler(mesh);
  oracle_data.data_degree = std::max(f.degree, xi.degree + 1);
  LiftOptions lo;
  lo.pprime = weighted ? 1 : c.pprime;
  lo.space = c.space;
  nlohmann::json extra;
  if (!weighted) {
    out.result = lift(mesh, f, xi, pr.data.partition, p, lo);
    oracle_data.partition = pr.data.partition;
  } else {
    const WeightedLiftConfig w = config_psi(c.psi, mesh);
    if (c.psi.make_compatible && w.pure_dagger_neumann(mesh)) f = make_weighted_compatible(mesh, w, f, xi);
    out.result = lift_weighted(mesh, w, f, xi, p, lo);
    oracle_data.partition = BoundaryPartition::uniform(mesh, BoundaryMarker::Dirichlet);
    extra = {{"psi_sup", w.sup_norm()},
             {"psi_gradient_sup", w.gradient_sup_norm(mesh)},
             {"poincare", w.poincare_constant(mesh)},
             {"domain_diameter", mesh.domain_diameter()},
             {"constant", w.stability_constant(mesh)},
             {"dagger_faces", w.dagger_faces(mesh).size()},
             {"pure_dagger_neumann", w.pure_dagger_neumann(mesh)},
             {"correction_norm", out.result.correction_norm},
             {"uncorrected_norm", out.result.uncorrected_norm}};
  }
  oracle_data.f = f.sampler(mesh);
  const OracleValue o = dual_norm_oracle(mesh, oracle_data, p, c.oracle);
  out.result.oracle = o.value;
  out.result.oracle_margin = o.margin;
  const StabilityRatio sr = stability_ratio(out.result);
  const bool ok = out.result.constraints.passes(c.constraint_tolerance);
  if (!ok) out.failures.push_back("lifting constraints exceed tolerance");
  out.ok = ok;
  out.json = {{"p", p},
              {"objective", out.result.objective},
              {"constraints", constraints_json(out.result.constraints)},
              {"constraints_pass", ok},
              {"oracle", oracle_json(o)},
              {"exact", sr.exact}};
  if (sr.raw) out.json["ratio"] = *sr.raw;
  if (weighted && sr.normalized) out.json["normalized_ratio"] = *sr.normalized;
  if (weighted) out.json["weights"] = extra;
  return out;
}

}  // namespace detail

/**
 * @brief Runs one experiment, writing report.json and CSV tables to c.out.
 *
 * Exceptions: ConfigError, MeshError (inputs), CompatibilityError (data),
 * SolverError (numerics) propagate to the caller.
 */
inline RunResult run(const ExperimentConfig& c) {
  c.validate();
  namespace fs = std::filesystem;
  const fs::path dir(c.out);
  auto [mesh, file_bp] = detail::config_mesh(c);
  RunResult rr;
  nlohmann::json& rep = rr.report;
  rep["kind"] = kind_name(c.kind);
  rep["problem"] = c.problem;
  rep["seed"] = c.seed;
  rep["mesh"] = detail::mesh_json(mesh);
  auto fail = [&](const std::vector<std::string>& f) {
    for (const auto& s : f) rr.failures.push_back(s);
  };

  switch (c.kind) {
    case ExperimentKind::Solve: {
      const ManufacturedProblem pr = detail::config_problem(c, mesh, file_bp, c.pprime);
      const PrimalSolution uh = solve_primal(pr.data, mesh, c.pprime);
      rep["pprime"] = c.pprime;
      rep["dofs"] = uh.space().num_dofs();
      rep["energy_norm"] = uh.energy_norm();
      rep["galerkin_residual"] = galerkin_residual(uh, pr.data);
      std::vector<double> err;
      if (pr.grad_u) {
        err = exact_element_errors(uh, *pr.grad_u, 2 * c.pprime + 8);
        double s = 0.0;
        for (double e : err) s += e * e;
        rep["error"] = std::sqrt(s);
      }
      auto os = detail::open_out(dir, "elements.csv");
      os << "element,diameter,energy" << (err.empty() ? "" : ",error") << '\n';
      const VectorSampler gh = uh.gradient_sampler();
      for (std::size_t k = 0; k < mesh.num_elements(); ++k) {
        const double e2 = l2_distance_sq(mesh, static_cast<int>(k), gh, zero_vector(), 2 * c.pprime);
        os << k << ',' << detail::fmt(mesh.diameters[k]) << ',' << detail::fmt(std::sqrt(e2));
        if (!err.empty()) os << ',' << detail::fmt(err[k]);
        os << '\n';
      }
      break;
    }
    case ExperimentKind::Estimate: {
      const ManufacturedProblem pr = detail::config_problem(c, mesh, file_bp, c.p);
      auto e = detail::run_estimate(c, mesh, pr, c.p, c.pprime);
      rep["result"] = e.json;
      fail(e.failures);
      auto os = detail::open_out(dir, "elements.csv");
      detail::write_estimate_csv(os, e);
      break;
    }
    case ExperimentKind::Lift:
    case ExperimentKind::LiftWeighted: {
      const bool weighted = c.kind == ExperimentKind::LiftWeighted;
      const ManufacturedProblem pr = detail::config_problem(c, mesh, file_bp, c.p);
      auto l = detail::run_lift(c, mesh, pr, c.p, weighted);
      rep["result"] = l.json;
      fail(l.failures);
      auto os = detail::open_out(dir, "flux.csv");
      write_coefficients_csv(os, l.result.flux.coeffs);
      break;
    }
    case ExperimentKind::Convergence: {
      auto os = detail::open_out(dir, "convergence.csv");
      os << "level,h,dofs,error,eta,efficiency,rate\n";
      nlohmann::json rows = nlohmann::json::array();
      Mesh cur = mesh;
      BoundaryPartition cur_bp = file_bp;
      double prev_err = -1.0, prev_h = -1.0;
      for (int level = 0; level < c.refinements; ++level) {
        if (level > 0) {
          RefinedMesh r = refine_uniform(cur, cur_bp);
          cur = std::move(r.mesh);
          cur_bp = std::move(r.partition);
        }
        const ManufacturedProblem pr = detail::config_problem(c, cur, cur_bp, c.p);
        auto e = detail::run_estimate(c, cur, pr, c.p, c.pprime);
        fail(e.failures);
        double h = 0.0;
        for (double d : cur.diameters) h = std::max(h, d);
        const double err = e.json["error"].get<double>(), eta = e.json["eta"].get<double>();
        std::optional<double> rate;
        if (prev_err > 0.0 && err > 0.0) rate = std::log(prev_err / err) / std::log(prev_h / h);
        os << level << ',' << detail::fmt(h) << ',' << e.json["dofs"].get<int>() << ',' << detail::fmt(err) << ','
           << detail::fmt(eta) << ',' << (err > 0 ? detail::fmt(eta / err) : std::string("exact")) << ','
           << (rate ? detail::fmt(*rate) : std::string("")) << '\n';
        e.json["level"] = level;
        e.json["h"] = h;
        if (rate) e.json["rate"] = *rate;
        rows.push_back(e.json);
        prev_err = err;
        prev_h = h;
      }
      rep["levels"] = rows;
      break;
    }
    case ExperimentKind::PSweep: {
      auto os = detail::open_out(dir, "psweep.csv");
      nlohmann::json rows = nlohmann::json::array();
      if (c.sweep == "estimate") {
        os << "p,pprime,eta,error,efficiency,oscillation\n";
        for (int p = c.p_min; p <= c.p_max; ++p) {
          const ManufacturedProblem pr = detail::config_problem(c, mesh, file_bp, p);
          auto e = detail::run_estimate(c, mesh, pr, p, p);
          fail(e.failures);
          const double err = e.json["error"].get<double>(), eta = e.json["eta"].get<double>();
          os << p << ',' << p << ',' << detail::fmt(eta) << ',' << detail::fmt(err) << ','
             << (err > 0 ? detail::fmt(eta / err) : std::string("exact")) << ','
             << detail::fmt(e.json["oscillation"].get<double>()) << '\n';
          rows.push_back(e.json);
        }
      } else if (c.sweep == "lift" || c.sweep == "lift-weighted") {
        const bool weighted = c.sweep == "lift-weighted";
        os << "p,objective,oracle,ratio" << (weighted ? ",normalized_ratio" : "") << '\n';
        // data fixed across the sweep: generated for the lowest degree
        const ManufacturedProblem pr = detail::config_problem(c, mesh, file_bp, c.p_min);
        for (int p = c.p_min; p <= c.p_max; ++p) {
          auto l = detail::run_lift(c, mesh, pr, p, weighted);
          fail(l.failures);
          os << p << ',' << detail::fmt(l.result.objective) << ',' << detail::fmt(*l.result.oracle) << ','
             << (l.json.contains("ratio") ? detail::fmt(l.json["ratio"].get<double>()) : std::string("exact"));
          if (weighted)
            os << ',' << (l.json.contains("normalized_ratio") ? detail::fmt(l.json["normalized_ratio"].get<double>())
                                                               : std::string("exact"));
          os << '\n';
          rows.push_back(l.json);
        }
      } else {
        throw ConfigError("sweep must be estimate, lift or lift-weighted");
      }
      rep["sweep"] = c.sweep;
      rep["rows"] = rows;
      break;
    }
  }
  rep["failures"] = rr.failures;
  rep["status"] = rr.failures.empty() ? "ok" : "check-failure";
  rr.exit_code = rr.failures.empty() ? 0 : 2;
  auto os = detail::open_out(dir, "report.json");
  os << rep.dump(2) << '\n';
  return rr;
}

}  // namespace equiflux
