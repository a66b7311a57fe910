/**
 * @file oracle.hpp
 * @brief Overkill reference solutions: dual norms of the residual and
 * energy errors of coarse discrete solutions.
 *
 * The dual norm sup_v ((f,v) - (ξ,∇v)) / ‖∇v‖ equals ‖∇u‖ for the weak solution;
 * it is approximated by a high-degree solve on uniformly refined meshes, with the
 * change between the last two levels reported as the margin.
 */
#pragma once

#include <cmath>
#include <vector>

#include "mesh.hpp"
#include "primal.hpp"

namespace equiflux {

/// Uniform refinement chain with parent maps composed back to the original mesh.
struct RefinementLevel {
  Mesh mesh;
  BoundaryPartition partition;
  std::vector<int> ancestor;  // element of the original mesh containing each element
};

inline RefinementLevel refine_level(const RefinementLevel& coarse) {
  RefinedMesh r = refine_uniform(coarse.mesh, coarse.partition);
  RefinementLevel out{std::move(r.mesh), std::move(r.partition), {}};
  out.ancestor.resize(r.parent.size());
  for (std::size_t k = 0; k < r.parent.size(); ++k) out.ancestor[k] = coarse.ancestor[r.parent[k]];
  return out;
}

inline RefinementLevel base_level(const Mesh& mesh, const BoundaryPartition& bp) {
  RefinementLevel l{mesh, bp, std::vector<int>(mesh.num_elements())};
  for (std::size_t k = 0; k < mesh.num_elements(); ++k) l.ancestor[k] = static_cast<int>(k);
  return l;
}

/// Data with element indices translated from a refined mesh to the original mesh.
inline ProblemData transplant(const ProblemData& data, const RefinementLevel& level) {
  ProblemData d = data;
  d.partition = level.partition;
  const auto anc = std::make_shared<std::vector<int>>(level.ancestor);
  d.f = [f = data.f, anc](int k, const Vec2& x) { return f((*anc)[k], x); };
  d.xi = [xi = data.xi, anc](int k, const Vec2& x) { return xi((*anc)[k], x); };
  return d;
}

struct OracleOptions {
  int extra_degree = 3;
  int min_levels = 2;
  int max_levels = 4;
  double target_margin = 0.005;
};

struct OracleValue {
  double value = 0.0;
  double margin = 0.0;     // relative change between the last two levels
  double deficit = 0.0;    // sqrt(|E_L² - E_{L-1}²|): estimate of the remaining energy error
  int levels = 0;
  int degree = 0;
  bool converged = false;
};

/// Overkill solves on successively refined meshes; the finest level is kept.
struct OverkillSolve {
  OracleValue oracle;
  std::vector<RefinementLevel> levels;  // levels[0] is the original mesh
  std::optional<PrimalSolution> finest;
};

inline OverkillSolve overkill_solve(const Mesh& mesh, const ProblemData& data, int degree, OracleOptions opts = {}) {
  OverkillSolve out;
  out.oracle.degree = std::min(degree + opts.extra_degree, kMaxDegree);
  out.levels.reserve(opts.max_levels + 1);
  out.levels.push_back(base_level(mesh, data.partition));
  double prev = -1.0;
  for (int L = 1; L <= opts.max_levels; ++L) {
    out.levels.push_back(refine_level(out.levels.back()));
    const RefinementLevel& lvl = out.levels.back();
    out.finest.emplace(solve_primal(transplant(data, lvl), lvl.mesh, out.oracle.degree));
    const double e = out.finest->energy_norm();
    out.oracle.levels = L;
    if (prev >= 0.0) {
      out.oracle.margin = e > 0.0 ? std::abs(e - prev) / e : std::abs(e - prev);
      out.oracle.deficit = std::sqrt(std::abs(e * e - prev * prev));
    }
    out.oracle.value = e;
    prev = e;
    if (L >= opts.min_levels && (out.oracle.margin < opts.target_margin || e == 0.0)) {
      out.oracle.converged = true;
      break;
    }
  }
  if (out.oracle.value == 0.0) out.oracle.converged = true;
  return out;
}

/// sup_v ((f,v) - (ξ,∇v)) / ‖∇v‖ over H^1 functions vanishing on Γ_D (mean-zero if Γ_D = ∅).
inline OracleValue dual_norm_oracle(const Mesh& mesh, const ProblemData& data, int degree, OracleOptions opts = {}) {
  return overkill_solve(mesh, data, degree, opts).oracle;
}

struct ErrorOracle {
  std::vector<double> element_error;  // ‖∇(u_ref - u_h)‖_K on the coarse elements
  double error = 0.0;                 // ‖∇(u_ref - u_h)‖
  double upper = 0.0;                 // sqrt(error² + deficit²): includes the reference's own error estimate
  double margin = 0.0;                // upper / error - 1
  OracleValue reference;
};

/**
 * @brief ‖∇(u - u_h)‖ via an overkill reference. u_h lives in the reference space
 * (nested meshes, higher degree), so ‖∇(u-u_h)‖² = ‖∇(u-u_ref)‖² + ‖∇(u_ref-u_h)‖².
 */
inline ErrorOracle error_oracle(const PrimalSolution& uh, const ProblemData& data,
                                OracleOptions opts = {.target_margin = 0.001}) {
  const Mesh& mesh = uh.mesh();
  const OverkillSolve ok = overkill_solve(mesh, data, uh.degree(), opts);
  const RefinementLevel& fine = ok.levels.back();
  const PrimalSolution& ref = *ok.finest;
  const int ex = 2 * ok.oracle.degree + 2;
  const QuadRule& q = quad_rule(ex);
  ErrorOracle out;
  out.reference = ok.oracle;
  out.element_error.assign(mesh.num_elements(), 0.0);
  for (std::size_t k = 0; k < fine.mesh.num_elements(); ++k) {
    const ElementGeometry& g = fine.mesh.geometry[k];
    const int parent = fine.ancestor[k];
    double s = 0.0;
    for (std::size_t iq = 0; iq < q.size(); ++iq) {
      const Vec2 x = g.map(q.points[iq]);
      s += q.weights[iq] * g.det * (ref.gradient(static_cast<int>(k), x) - uh.gradient(parent, x)).squaredNorm();
    }
    out.element_error[parent] += s;
  }
  double total = 0.0;
  for (double& e : out.element_error) {
    total += e;
    e = std::sqrt(e);
  }
  out.error = std::sqrt(total);
  out.upper = std::sqrt(total + ok.oracle.deficit * ok.oracle.deficit);
  out.margin = out.error > 0.0 ? out.upper / out.error - 1.0 : 0.0;
  return out;
}

/// Elementwise ‖∇u - ∇u_h‖_K against an exact gradient.
inline std::vector<double> exact_element_errors(const PrimalSolution& uh, const VectorSampler& grad_u, int exactness) {
  const Mesh& mesh = uh.mesh();
  std::vector<double> out(mesh.num_elements());
  const VectorSampler gh = uh.gradient_sampler();
  for (std::size_t k = 0; k < mesh.num_elements(); ++k)
    out[k] = std::sqrt(l2_distance_sq(mesh, static_cast<int>(k), grad_u, gh, exactness));
  return out;
}

}  // namespace equiflux
