/**
 * @file lifting.hpp
 * @brief Polynomial-degree-robust discrete H(div) liftings.
 *
 * lift():          σ_h ∈ RTN_p ∩ H(div) with ∇·σ_h = f, σ_h·n = 0 on Γ_N,
 *                  built from a p'=1 primal solve and degree-p equilibration.
 * lift_weighted(): σ_h† = Σ_a w_a σ̃_h^a + σ_h^c with ∇·σ_h† = ψ†f - ∇ψ†·ξ and
 *                  σ_h†·n = 0 where ψ† vanishes on the boundary.
 */
#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "equilibration.hpp"
#include "fields.hpp"
#include "mesh.hpp"
#include "primal.hpp"

namespace equiflux {

struct LiftResult {
  RTNField flux;
  EquilibrationReport constraints;
  double objective = 0.0;  // ‖σ_h + ξ‖ or ‖σ_h† + ψ†ξ‖
  std::optional<double> oracle;
  double oracle_margin = 0.0;
  double constant = 1.0;  // C(Ω,ψ†); 1 for the unweighted lifting
  // weighted lifting diagnostics
  double correction_norm = 0.0;
  double uncorrected_norm = 0.0;
};

struct LiftOptions {
  int pprime = 1;
  double compatibility_tolerance = 1e-11;
  FluxSpace space = FluxSpace::Standard;
};

namespace detail {

inline VectorSampler add_vectors(VectorSampler a, VectorSampler b) {
  return [a = std::move(a), b = std::move(b)](int k, const Vec2& x) -> Vec2 { return a(k, x) + b(k, x); };
}

inline double field_norm(const Mesh& mesh, const VectorSampler& v, int exactness) {
  double s = 0.0;
  const VectorSampler zero = zero_vector();
  for (std::size_t k = 0; k < mesh.num_elements(); ++k) s += l2_distance_sq(mesh, static_cast<int>(k), v, zero, exactness);
  return std::sqrt(s);
}

inline int data_degree(const PiecewisePoly& f, const RTNField& xi) { return std::max(f.degree, xi.degree + 1); }

}  // namespace detail

/**
 * @brief Unweighted lifting.
 *
 * @param f   piecewise P_{p-1} source
 * @param xi  piecewise RTN_{p-1} field (no conformity required)
 * @throws CompatibilityError if Γ_N = ∂Ω and (f,1) ≠ 0
 */
inline LiftResult lift(const Mesh& mesh, const PiecewisePoly& f, const RTNField& xi, const BoundaryPartition& bp, int p,
                       LiftOptions opts = {}) {
  if (p < 1) throw std::invalid_argument("lift: degree must be >= 1");
  if (f.degree > p - 1 || xi.degree > p - 1)
    throw std::invalid_argument("lift: data degree must be at most p-1 (f in P_{p-1}, xi in RTN_{p-1})");
  if (opts.pprime < 1 || opts.pprime > p) throw std::invalid_argument("lift: need 1 <= p' <= p");
  ProblemData data;
  data.f = f.sampler(mesh);
  data.xi = xi.sampler(mesh);
  data.partition = bp;
  data.data_degree = detail::data_degree(f, xi);
  if (bp.all_neumann()) {
    const double defect = neumann_compatibility_defect(mesh, data.f, 2 * f.degree + 2);
    if (defect > opts.compatibility_tolerance)
      throw CompatibilityError("lift: compatibility condition (f,1)=0 violated for a pure Neumann boundary (defect " +
                               std::to_string(defect) + ")");
  }
  PrimalOptions po;
  po.compatibility_tolerance = opts.compatibility_tolerance;
  const PrimalSolution uh = solve_primal(data, mesh, opts.pprime, po);
  EquilibrationOptions eo;
  eo.space = opts.space;
  eo.keep_patches = false;
  LiftResult res;
  res.flux = equilibrate(mesh, data, uh, p, eo).flux;
  res.constraints = verify_constraints(res.flux, mesh, f.raised(p), faces_with_marker(bp, BoundaryMarker::Neumann));
  res.objective = detail::field_norm(mesh, detail::add_vectors(res.flux.sampler(mesh), data.xi), 2 * p + 2);
  return res;
}

/// ψ† data: vertex values w_a and derived quantities.
struct WeightedLiftConfig {
  std::vector<double> weights;
  std::optional<double> poincare;  // C_{P,†}; defaulted when empty
  bool convex_domain = true;

  std::vector<int> dagger_faces(const Mesh& mesh) const {
    std::vector<int> out;
    for (int f : mesh.boundary_faces()) {
      const auto [a, b] = mesh.faces[f].vertices;
      if (weights[a] == 0.0 && weights[b] == 0.0) out.push_back(f);
    }
    return out;
  }
  bool pure_dagger_neumann(const Mesh& mesh) const {
    return dagger_faces(mesh).size() == mesh.boundary_faces().size();
  }
  double sup_norm() const {
    double m = 0.0;
    for (double w : weights) m = std::max(m, std::abs(w));
    return m;
  }
  Vec2 gradient(const Mesh& mesh, int k) const {
    Vec2 g = Vec2::Zero();
    for (int l = 0; l < 3; ++l) g += weights[mesh.elements[k][l]] * barycentric_gradient(mesh, k, l);
    return g;
  }
  double gradient_sup_norm(const Mesh& mesh) const {
    double m = 0.0;
    for (std::size_t k = 0; k < mesh.num_elements(); ++k) m = std::max(m, gradient(mesh, static_cast<int>(k)).norm());
    return m;
  }
  double poincare_constant(const Mesh& mesh) const {
    if (poincare) return *poincare;
    return pure_dagger_neumann(mesh) && convex_domain ? 1.0 / std::numbers::pi : 1.0;
  }
  /// C(Ω,ψ†) = ‖ψ†‖_∞ + C_{P,†} h_Ω ‖∇ψ†‖_∞
  double stability_constant(const Mesh& mesh) const {
    return sup_norm() + poincare_constant(mesh) * mesh.domain_diameter() * gradient_sup_norm(mesh);
  }
  ScalarSampler sampler(const Mesh& mesh) const {
    return [this, &mesh](int k, const Vec2& x) {
      const Vec2 xh = mesh.geometry[k].pullback(x);
      const auto& e = mesh.elements[k];
      return weights[e[0]] * (1.0 - xh[0] - xh[1]) + weights[e[1]] * xh[0] + weights[e[2]] * xh[1];
    };
  }
};

/// (f,ψ†) - (ξ,∇ψ†) and the scale ‖f‖_1‖ψ†‖_∞ + ‖ξ‖_1‖∇ψ†‖_∞ for relative comparisons.
inline std::pair<double, double> weighted_compatibility(const Mesh& mesh, const WeightedLiftConfig& cfg,
                                                        const ScalarSampler& f, const VectorSampler& xi,
                                                        int exactness) {
  const QuadRule& q = quad_rule(exactness);
  const ScalarSampler psi = cfg.sampler(mesh);
  const double psi_max = cfg.sup_norm(), dpsi_max = cfg.gradient_sup_norm(mesh);
  double val = 0.0, scale = 0.0;
  for (std::size_t k = 0; k < mesh.num_elements(); ++k) {
    const ElementGeometry& g = mesh.geometry[k];
    const Vec2 dpsi = cfg.gradient(mesh, static_cast<int>(k));
    for (std::size_t iq = 0; iq < q.size(); ++iq) {
      const Vec2 x = g.map(q.points[iq]);
      const double a = f(static_cast<int>(k), x) * psi(static_cast<int>(k), x);
      const double b = xi(static_cast<int>(k), x).dot(dpsi);
      val += q.weights[iq] * g.det * (a - b);
      scale += q.weights[iq] * g.det *
               (std::abs(f(static_cast<int>(k), x)) * psi_max + xi(static_cast<int>(k), x).norm() * dpsi_max);
    }
  }
  return {val, scale};
}

/**
 * @brief Weighted lifting.
 *
 * @throws CompatibilityError if ψ† vanishes on all of ∂Ω and (f,ψ†) ≠ (ξ,∇ψ†)
 */
inline LiftResult lift_weighted(const Mesh& mesh, const WeightedLiftConfig& cfg, const PiecewisePoly& f,
                                const RTNField& xi, int p, LiftOptions opts = {}) {
  if (cfg.weights.size() != mesh.num_vertices()) throw std::invalid_argument("lift_weighted: one weight per vertex");
  if (p < 1) throw std::invalid_argument("lift_weighted: degree must be >= 1");
  if (f.degree > p - 1 || xi.degree > p - 1)
    throw std::invalid_argument("lift_weighted: data degree must be at most p-1");
  ProblemData data;
  data.f = f.sampler(mesh);
  data.xi = xi.sampler(mesh);
  data.partition = BoundaryPartition::uniform(mesh, BoundaryMarker::Dirichlet);
  data.data_degree = detail::data_degree(f, xi);
  const int ex = 2 * p + 4;

  const std::vector<int> fdag = cfg.dagger_faces(mesh);
  const bool pure = fdag.size() == mesh.boundary_faces().size();
  if (pure) {
    const auto [val, scale] = weighted_compatibility(mesh, cfg, data.f, data.xi, ex);
    if (std::abs(val) > opts.compatibility_tolerance * std::max(scale, 1e-300) && std::abs(val) > 1e-300)
      throw CompatibilityError("lift_weighted: compatibility condition (f,psi)=(xi,grad psi) violated (defect " +
                               std::to_string(val) + ")");
  }

  const PrimalSolution uh = solve_primal(data, mesh, 1);

  EquilibrationOptions eo;
  eo.space = FluxSpace::Modified;
  eo.keep_patches = false;
  RTNField sigma = equilibrate(mesh, data, uh, p, eo, &cfg.weights).flux;

  // Every F ∈ F_† sees only zero weights on its vertices and Γ_a membership for the opposite one.
  for (int fidx : fdag) {
    const Face& face = mesh.faces[fidx];
    const int k = face.elements[0];
    const int opposite = mesh.elements[k][face.local[0]];
    const Patch patch = vertex_patch(mesh, data.partition, opposite);
    if (cfg.weights[face.vertices[0]] != 0.0 || cfg.weights[face.vertices[1]] != 0.0 ||
        std::find(patch.gamma_faces.begin(), patch.gamma_faces.end(), fidx) == patch.gamma_faces.end())
      throw std::logic_error("lift_weighted: boundary face structure violated");
  }

  // correction: ∇·σ^c = ∇ψ†·∇u_h, σ^c·n = 0 on Γ_{N,†}
  PiecewisePoly corr(0, mesh.num_elements());
  const double phi0 = std::sqrt(2.0);  // orthonormal constant on the reference triangle
  for (std::size_t k = 0; k < mesh.num_elements(); ++k) {
    const Vec2 c = Vec2(1.0 / 3.0, 1.0 / 3.0);
    corr.coeffs(0, k) = cfg.gradient(mesh, static_cast<int>(k)).dot(uh.gradient(static_cast<int>(k), mesh.geometry[k].map(c))) / phi0;
  }
  if (pure) {
    // (∇ψ†·∇u_h, 1) = (f,ψ†) - (ξ,∇ψ†) = 0 by Galerkin orthogonality; strip the round-off mean
    double mean = 0.0, detsum = 0.0;
    for (std::size_t k = 0; k < mesh.num_elements(); ++k) {
      mean += mesh.geometry[k].det * corr.coeffs(0, k);
      detsum += mesh.geometry[k].det;
    }
    const double scale = cfg.gradient_sup_norm(mesh) * uh.energy_norm() * std::sqrt(mesh.area());
    if (std::abs(mean * phi0 / 2.0) > 1e-9 * std::max(scale, 1e-300))
      throw CompatibilityError("lift_weighted: correction datum has nonzero mean");
    corr.coeffs.row(0).array() -= mean / detsum;
  }
  BoundaryPartition bpc = BoundaryPartition::uniform(mesh, BoundaryMarker::Dirichlet);
  for (int fidx : fdag) bpc.marker[fidx] = BoundaryMarker::Neumann;

  LiftResult res;
  res.uncorrected_norm = detail::field_norm(mesh, sigma.sampler(mesh), 2 * p + 2);
  if (corr.coeffs.cwiseAbs().maxCoeff() > 0.0) {
    LiftOptions co;
    co.compatibility_tolerance = std::max(opts.compatibility_tolerance, 1e-9);
    const LiftResult c = lift(mesh, corr, RTNField(0, mesh.num_elements()), bpc, 1, co);
    res.correction_norm = c.objective;
    sigma += raise_rtn(c.flux, p, mesh);
  }
  res.flux = std::move(sigma);

  const ScalarSampler psi = cfg.sampler(mesh);
  const ScalarSampler target = [&](int k, const Vec2& x) {
    return psi(k, x) * data.f(k, x) - cfg.gradient(mesh, k).dot(data.xi(k, x));
  };
  const PiecewisePoly tgt = project_scalar(target, p, mesh, 2 * p + 2);
  res.constraints = verify_constraints(res.flux, mesh, tgt, fdag);
  const VectorSampler psixi = [&](int k, const Vec2& x) -> Vec2 { return psi(k, x) * data.xi(k, x); };
  res.objective = detail::field_norm(mesh, detail::add_vectors(res.flux.sampler(mesh), psixi), 2 * p + 2);
  res.constant = cfg.stability_constant(mesh);
  return res;
}

struct StabilityRatio {
  std::optional<double> raw;         // objective / oracle; nullopt when both vanish
  std::optional<double> normalized;  // raw / C(Ω,ψ†)
  double oracle_margin = 0.0;
  bool exact = false;
};

/// @throws std::logic_error when the oracle vanishes but the objective does not.
inline StabilityRatio stability_ratio(const LiftResult& r, double zero_tol = 1e-12) {
  if (!r.oracle) throw std::invalid_argument("stability_ratio: oracle value missing");
  StabilityRatio s;
  s.oracle_margin = r.oracle_margin;
  if (*r.oracle <= zero_tol) {
    if (r.objective > zero_tol)
      throw std::logic_error("stability_ratio: zero oracle with nonzero objective " + std::to_string(r.objective));
    s.exact = true;
    return s;
  }
  s.raw = r.objective / *r.oracle;
  s.normalized = *s.raw / r.constant;
  return s;
}

}  // namespace equiflux
