/**
 * @file equilibration.hpp
 * @brief Patchwise constrained minimization of ‖v_h + τ‖ over RTN_p on vertex
 * patches and assembly of the global equilibrated flux.
 *
 * On each patch ω_a the flux solves
 *
 *   min ‖v_h + τ‖_{ω_a}  s.t.  ∇·v_h = g_h^a,  v_h·n = 0 on the constrained faces,
 *
 * with g_h^a = Π_hp(ψ_a f - ∇ψ_a·(ξ + ∇u_h)). The normal-trace constraints are
 * imposed by dropping face degrees of freedom of the dual RTN basis.
 */
#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "concurrency.hpp"
#include "fields.hpp"
#include "linsolve.hpp"
#include "mesh.hpp"
#include "primal.hpp"
#include "rtn.hpp"

namespace equiflux {

/// Which boundary faces of ω_a carry v·n = 0.
enum class FluxSpace {
  Standard,  ///< ∂ω_a for interior/Neumann vertices, ∂ω_a \ Γ_D for Dirichlet vertices
  Modified   ///< Γ_a: faces of ∂ω_a not containing a
};

inline std::vector<int> constrained_faces(const Patch& patch, FluxSpace space) {
  if (space == FluxSpace::Modified) return patch.gamma_faces;
  if (patch.vertex_class == VertexClass::Interior) return patch.boundary_faces;
  std::vector<int> out;
  for (int f : patch.boundary_faces)
    if (std::find(patch.dirichlet_faces.begin(), patch.dirichlet_faces.end(), f) == patch.dirichlet_faces.end())
      out.push_back(f);
  return out;
}

/**
 * @brief Conforming RTN_p degrees of freedom on a patch.
 *
 * Local coefficient i on patch element j equals sign[j][i] * x[index[j][i]],
 * or zero when index[j][i] < 0 (constrained face moment).
 */
struct PatchSpace {
  int degree = 0;
  std::vector<int> elements;
  std::vector<std::vector<int>> index;
  std::vector<std::vector<double>> sign;
  std::vector<int> constrained;
  int num_dofs = 0;
  bool mean_constraint = false;

  Eigen::VectorXd local(std::size_t j, const Eigen::VectorXd& x) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(rtn_dim(degree));
    for (int i = 0; i < rtn_dim(degree); ++i)
      if (index[j][i] >= 0) out[i] = sign[j][i] * x[index[j][i]];
    return out;
  }
};

inline PatchSpace make_patch_space(const Mesh& mesh, const Patch& patch, FluxSpace space, int p) {
  const RTNBasis& basis = rtn_basis(p);
  PatchSpace ps;
  ps.degree = p;
  ps.elements = patch.elements;
  ps.constrained = constrained_faces(patch, space);
  ps.mean_constraint = ps.constrained.size() == patch.boundary_faces.size();
  std::map<int, int> face_offset;
  int next = 0;
  auto is_constrained = [&](int f) { return std::find(ps.constrained.begin(), ps.constrained.end(), f) != ps.constrained.end(); };
  for (int f : patch.interior_faces) {
    face_offset[f] = next;
    next += p + 1;
  }
  for (int f : patch.boundary_faces)
    if (!is_constrained(f)) {
      face_offset[f] = next;
      next += p + 1;
    }
  for (int k : patch.elements) {
    const auto& e = mesh.elements[k];
    std::vector<int> idx(basis.size(), -1);
    std::vector<double> sgn(basis.size(), 1.0);
    for (int l = 0; l < 3; ++l) {
      const int f = mesh.element_faces[k][l];
      auto it = face_offset.find(f);
      if (it == face_offset.end()) continue;
      const Face& face = mesh.faces[f];
      const double sn = face.elements[0] == k ? 1.0 : -1.0;
      const double so = e[(l + 1) % 3] == face.vertices[0] ? 1.0 : -1.0;
      double s = sn;
      for (int kk = 0; kk <= p; ++kk) {
        idx[basis.face_dof(l, kk)] = it->second + kk;
        sgn[basis.face_dof(l, kk)] = s;
        s *= so;
      }
    }
    for (int j = 0; j < basis.num_interior_dofs(); ++j) idx[basis.interior_dof(j)] = next++;
    ps.index.push_back(std::move(idx));
    ps.sign.push_back(std::move(sgn));
  }
  ps.num_dofs = next;
  return ps;
}

/// One vertex's local minimization problem.
struct PatchProblem {
  Patch patch;
  FluxSpace space = FluxSpace::Standard;
  int degree = 1;
  /// g_h^a: P_p coefficients on each patch element (column j ↔ patch.elements[j]).
  Eigen::MatrixXd g;
  /// Target τ, evaluated with global element indices.
  VectorSampler tau;
  int tau_exactness = 8;
};

struct PatchFlux {
  int center = -1;
  std::vector<int> elements;
  Eigen::MatrixXd coeffs;      // rtn_dim x |T^a|
  Eigen::MatrixXd multiplier;  // r_h^a: scalar_dim x |T^a|
  double objective = 0.0;      // ‖σ + τ‖_{ω_a}
  SaddleSolution algebra;
};

/**
 * @brief Builds the algebraic saddle system of a patch problem:
 * M = RTN mass, B = scaled divergence (rows give P_p coefficients of ∇·v),
 * b = -(τ, v), c = g.
 */
inline SaddleSystem patch_system(const Mesh& mesh, const PatchProblem& prob, const PatchSpace& ps) {
  const int p = prob.degree;
  const int nr = rtn_dim(p), ns = scalar_dim(p);
  const std::size_t ne = ps.elements.size();
  const RTNTable& t = rtn_table(p, 2 * p + 2);
  const QuadRule& qt = quad_rule(prob.tau_exactness);
  SaddleSystem sys;
  sys.M = Eigen::MatrixXd::Zero(ps.num_dofs, ps.num_dofs);
  sys.B = Eigen::MatrixXd::Zero(ne * ns, ps.num_dofs);
  sys.b = Eigen::VectorXd::Zero(ps.num_dofs);
  sys.c = Eigen::VectorXd::Zero(ne * ns);
  for (std::size_t j = 0; j < ne; ++j) {
    const int k = ps.elements[j];
    const ElementGeometry& g = mesh.geometry[k];
    const Eigen::MatrixXd Mk = rtn_mass(mesh, k, p);
    const PhysicalRTN v = physical_rtn(mesh, k, p, prob.tau_exactness);
    Eigen::VectorXd tv = Eigen::VectorXd::Zero(nr);
    for (std::size_t iq = 0; iq < qt.size(); ++iq) {
      const Vec2 tau = prob.tau(k, g.map(qt.points[iq]));
      const double w = qt.weights[iq] * g.det;
      tv += w * (tau[0] * v.vx.row(iq).transpose() + tau[1] * v.vy.row(iq).transpose());
    }
    const Eigen::MatrixXd Dk = t.divergence / g.det;
    for (int a = 0; a < nr; ++a) {
      const int ga = ps.index[j][a];
      if (ga < 0) continue;
      const double sa = ps.sign[j][a];
      sys.b[ga] -= sa * tv[a];
      for (int r = 0; r < ns; ++r) sys.B(j * ns + r, ga) += sa * Dk(r, a);
      for (int b2 = 0; b2 < nr; ++b2) {
        const int gb = ps.index[j][b2];
        if (gb >= 0) sys.M(ga, gb) += sa * ps.sign[j][b2] * Mk(a, b2);
      }
    }
    sys.c.segment(j * ns, ns) = prob.g.col(j);
  }
  sys.M = 0.5 * (sys.M + sys.M.transpose()).eval();
  if (ps.mean_constraint) {
    // (r,1)_{ω_a} = 0 expressed in the scaled multiplier y = det·r
    const ScalarTable& st = scalar_table(p, 2 * p);
    const QuadRule& qs = quad_rule(2 * p);
    const Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(qs.weights.data(), qs.size());
    const Eigen::VectorXd moments = st.values.transpose() * w;
    Eigen::VectorXd e(ne * ns);
    for (std::size_t j = 0; j < ne; ++j) e.segment(j * ns, ns) = moments;
    sys.mean_row = e;
  }
  return sys;
}

/// ‖σ + τ‖ on the listed elements for per-element RTN coefficients.
inline double flux_target_norm(const Mesh& mesh, const std::vector<int>& elements, const Eigen::MatrixXd& coeffs, int p,
                               const VectorSampler& tau, int exactness) {
  const QuadRule& q = quad_rule(exactness);
  double s = 0.0;
  for (std::size_t j = 0; j < elements.size(); ++j) {
    const int k = elements[j];
    const ElementGeometry& g = mesh.geometry[k];
    const PhysicalRTN v = physical_rtn(mesh, k, p, exactness);
    const Eigen::VectorXd sx = v.vx * coeffs.col(j);
    const Eigen::VectorXd sy = v.vy * coeffs.col(j);
    for (std::size_t iq = 0; iq < q.size(); ++iq) {
      const Vec2 t = tau(k, g.map(q.points[iq]));
      s += q.weights[iq] * g.det * (Vec2(sx[iq], sy[iq]) + t).squaredNorm();
    }
  }
  return std::sqrt(s);
}

using SaddleSolver = SaddleSolution (*)(const SaddleSystem&);

inline SaddleSolution default_saddle_solver(const SaddleSystem& s) { return solve_saddle(s); }

/// Solves one patch problem.
inline PatchFlux patch_solve(const Mesh& mesh, const PatchProblem& prob, SaddleSolver solver = default_saddle_solver) {
  const PatchSpace ps = make_patch_space(mesh, prob.patch, prob.space, prob.degree);
  const SaddleSystem sys = patch_system(mesh, prob, ps);
  PatchFlux out;
  out.center = prob.patch.center;
  out.elements = ps.elements;
  out.algebra = solver(sys);
  const int ns = scalar_dim(prob.degree);
  out.coeffs.resize(rtn_dim(prob.degree), ps.elements.size());
  out.multiplier.resize(ns, ps.elements.size());
  for (std::size_t j = 0; j < ps.elements.size(); ++j) {
    out.coeffs.col(j) = ps.local(j, out.algebra.x);
    out.multiplier.col(j) = out.algebra.y.segment(j * ns, ns) / mesh.geometry[ps.elements[j]].det;
  }
  out.objective = flux_target_norm(mesh, out.elements, out.coeffs, prob.degree, prob.tau, prob.tau_exactness);
  return out;
}

/// Quadrature exactness for projecting source data; shared by assembly and verification.
inline int source_exactness(const ProblemData& data, int p) { return std::max(data.quadrature_for(p) + 1, 2 * p + 2); }

/// (g,1)_{ω_a} from the P_p coefficients of g.
inline double patch_rhs_mean(const Mesh& mesh, const Patch& patch, const Eigen::MatrixXd& g) {
  const double phi0_integral = std::sqrt(2.0) / 2.0;  // ∫_ref φ_0 for the orthonormal constant
  double mean = 0.0;
  for (std::size_t j = 0; j < patch.elements.size(); ++j)
    mean += mesh.geometry[patch.elements[j]].det * phi0_integral * g(0, j);
  return mean;
}

/**
 * @brief g_h^a on each patch element: Π_hp(ψ_a f - ∇ψ_a·(ξ + ∇u_h)).
 *
 * @throws CompatibilityError when a patch with fully constrained boundary
 * receives data of nonzero mean, measured relative to the L1 size of the
 * three contributions (signals an inconsistent primal solve).
 */
inline Eigen::MatrixXd patch_rhs(const Mesh& mesh, const Patch& patch, const ProblemData& data, const PrimalSolution& uh,
                                 int p, bool require_zero_mean, double uh_energy = -1.0, double tolerance = 1e-9) {
  const int ex = source_exactness(data, p);
  const QuadRule& q = quad_rule(ex);
  const ScalarTable& t = scalar_table(p, ex);
  Eigen::MatrixXd g(scalar_dim(p), patch.elements.size());
  Eigen::VectorXd fw(q.size());
  double l1 = 0.0;
  for (std::size_t j = 0; j < patch.elements.size(); ++j) {
    const int k = patch.elements[j];
    const int l = patch.local_index(mesh, k);
    const ElementGeometry& geo = mesh.geometry[k];
    const Vec2 dpsi = barycentric_gradient(mesh, k, l);
    for (std::size_t iq = 0; iq < q.size(); ++iq) {
      const Vec2 x = geo.map(q.points[iq]);
      const double psi = q.barycentric[iq][l];
      const double a = psi * data.f(k, x), b = dpsi.dot(data.xi(k, x)), c = dpsi.dot(uh.gradient(k, x));
      fw[iq] = q.weights[iq] * (a - b - c);
      l1 += q.weights[iq] * geo.det * (std::abs(a) + std::abs(b) + std::abs(c));
    }
    g.col(j) = t.values.transpose() * fw;
  }
  if (require_zero_mean) {
    // Round-off in u_h is relative to its global size, hence the second scale term.
    if (uh_energy < 0.0) uh_energy = uh.energy_norm();
    double area = 0.0, grad_max = 0.0;
    for (std::size_t j = 0; j < patch.elements.size(); ++j) {
      const int k = patch.elements[j];
      area += mesh.geometry[k].area();
      grad_max = std::max(grad_max, barycentric_gradient(mesh, k, patch.local_index(mesh, k)).norm());
    }
    const double scale = l1 + std::sqrt(area) * grad_max * uh_energy;
    const double mean = patch_rhs_mean(mesh, patch, g);
    if (std::abs(mean) > tolerance * scale && std::abs(mean) > 1e-300)
      throw CompatibilityError("patch " + std::to_string(patch.center) +
                               ": local Neumann compatibility (g_h^a,1)=0 violated, defect " +
                               std::to_string(std::abs(mean) / std::max(scale, 1e-300)));
    g.row(0).array() -= mean / (std::sqrt(2.0) * area);
  }
  return g;
}

enum class TargetKind {
  Pointwise,  ///< τ = ψ_a (ξ + ∇u_h)
  Projected   ///< τ = Π_hp^RTN(ψ_a ξ) + ψ_a ∇u_h
};

/// Patch target τ as a sampler over global element indices.
inline VectorSampler patch_target(const Mesh& mesh, const Patch& patch, const ProblemData& data,
                                  const PrimalSolution& uh, int p, TargetKind kind) {
  const int center = patch.center;
  const Mesh* m = &mesh;
  auto psi = [m, center](int k, const Vec2& x) {
    const auto& e = m->elements[k];
    const Vec2 xh = m->geometry[k].pullback(x);
    const double lam[3] = {1.0 - xh[0] - xh[1], xh[0], xh[1]};
    for (int l = 0; l < 3; ++l)
      if (e[l] == center) return lam[l];
    return 0.0;
  };
  auto grad_uh = uh.gradient_sampler();
  if (kind == TargetKind::Pointwise) {
    return [psi, xi = data.xi, grad_uh](int k, const Vec2& x) -> Vec2 { return psi(k, x) * (xi(k, x) + grad_uh(k, x)); };
  }
  // Π_hp^RTN(ψ_a ξ) on each patch element
  auto psixi = [psi, xi = data.xi](int k, const Vec2& x) -> Vec2 { return psi(k, x) * xi(k, x); };
  std::map<int, Eigen::VectorXd> proj;
  const int ex = source_exactness(data, p);
  for (int k : patch.elements) proj[k] = project_rtn_element(psixi, p, mesh, k, ex);
  return [psi, grad_uh, proj = std::move(proj), m, p](int k, const Vec2& x) -> Vec2 {
    Vec2 out = psi(k, x) * grad_uh(k, x);
    auto it = proj.find(k);
    if (it != proj.end()) {
      const RTNBasis& basis = rtn_basis(p);
      const ElementGeometry& g = m->geometry[k];
      Eigen::MatrixXd v(2, basis.size());
      Eigen::VectorXd d(basis.size());
      basis.eval(g.pullback(x), v, d);
      out += g.jacobian * (v * it->second) / g.det;
    }
    return out;
  };
}

/// Builds the patch problem for vertex a.
inline PatchProblem make_patch_problem(const Mesh& mesh, const Patch& patch, const ProblemData& data,
                                       const PrimalSolution& uh, int p, FluxSpace space,
                                       TargetKind kind = TargetKind::Pointwise, double uh_energy = -1.0) {
  PatchProblem prob;
  prob.patch = patch;
  prob.space = space;
  prob.degree = p;
  const bool fully_constrained = constrained_faces(patch, space).size() == patch.boundary_faces.size();
  prob.g = patch_rhs(mesh, patch, data, uh, p, fully_constrained, uh_energy);
  prob.tau = patch_target(mesh, patch, data, uh, p, kind);
  const int data_deg = data.data_degree >= 0 ? data.data_degree : p + data.extra_quadrature;
  prob.tau_exactness = std::max(2 * p + 2, p + 2 + std::max(data_deg, uh.degree() - 1));
  return prob;
}

/**
 * @brief σ_h|_K = Σ_{a ∈ V_K} w_a σ_h^a|_K (w_a = 1 unless weights are given).
 *
 * @throws std::invalid_argument if a vertex has no patch flux.
 */
inline RTNField assemble_flux(const std::map<int, PatchFlux>& fluxes, const Mesh& mesh, int p,
                              const std::vector<double>* weights = nullptr) {
  RTNField sigma(p, mesh.num_elements());
  for (std::size_t a = 0; a < mesh.num_vertices(); ++a) {
    auto it = fluxes.find(static_cast<int>(a));
    if (it == fluxes.end()) throw std::invalid_argument("assemble_flux: missing patch for vertex " + std::to_string(a));
    const PatchFlux& pf = it->second;
    if (pf.coeffs.rows() != rtn_dim(p)) throw std::invalid_argument("assemble_flux: degree mismatch");
    const double w = weights ? (*weights)[a] : 1.0;
    if (w == 0.0) continue;
    for (std::size_t j = 0; j < pf.elements.size(); ++j) sigma.coeffs.col(pf.elements[j]) += w * pf.coeffs.col(j);
  }
  return sigma;
}

struct EquilibrationResult {
  RTNField flux;
  std::map<int, PatchFlux> patches;
};

struct EquilibrationOptions {
  FluxSpace space = FluxSpace::Standard;
  TargetKind target = TargetKind::Pointwise;
  SaddleSolver solver = default_saddle_solver;
  bool keep_patches = true;
};

/// All patch problems plus assembly; weights (if given) scale each patch flux.
inline EquilibrationResult equilibrate(const Mesh& mesh, const ProblemData& data, const PrimalSolution& uh, int p,
                                       EquilibrationOptions opts = {}, const std::vector<double>* weights = nullptr) {
  if (p < uh.degree()) throw std::invalid_argument("equilibrate: flux degree must be >= primal degree");
  const auto classes = classify_vertices(mesh, data.partition);
  const double uh_energy = uh.energy_norm();
  std::vector<PatchFlux> out(mesh.num_vertices());
  parallel_for(mesh.num_vertices(), [&](std::size_t a) {
    if (weights && (*weights)[a] == 0.0) {
      out[a].center = static_cast<int>(a);
      out[a].elements = mesh.vertex_elements[a];
      out[a].coeffs = Eigen::MatrixXd::Zero(rtn_dim(p), out[a].elements.size());
      out[a].multiplier = Eigen::MatrixXd::Zero(scalar_dim(p), out[a].elements.size());
      return;
    }
    const Patch patch = vertex_patch(mesh, data.partition, classes, static_cast<int>(a));
    const PatchProblem prob = make_patch_problem(mesh, patch, data, uh, p, opts.space, opts.target, uh_energy);
    out[a] = patch_solve(mesh, prob, opts.solver);
  });
  EquilibrationResult res;
  for (std::size_t a = 0; a < out.size(); ++a) res.patches.emplace(static_cast<int>(a), std::move(out[a]));
  res.flux = assemble_flux(res.patches, mesh, p, weights);
  if (!opts.keep_patches) res.patches.clear();
  return res;
}

/// Constraint residuals of an H(div) flux.
struct EquilibrationReport {
  double max_divergence_residual = 0.0;  // max_K ‖∇·σ - target‖_K
  double max_normal_jump = 0.0;          // max over interior faces of sup |[σ·n]|
  double max_neumann_trace = 0.0;        // max over listed faces of sup |σ·n|
  double data_norm = 0.0;                // ‖target‖

  bool passes(double tol) const {
    return max_divergence_residual <= tol * (1.0 + data_norm) && max_normal_jump <= tol * (1.0 + data_norm) &&
           max_neumann_trace <= tol * (1.0 + data_norm);
  }
};

/// Checks ∇·σ = target (elementwise, both in P_p), normal continuity, and σ·n = 0 on `zero_trace_faces`.
inline EquilibrationReport verify_constraints(const RTNField& sigma, const Mesh& mesh, const PiecewisePoly& target,
                                              const std::vector<int>& zero_trace_faces) {
  EquilibrationReport rep;
  const PiecewisePoly div = divergence(sigma, mesh);
  PiecewisePoly tgt = target;
  if (tgt.degree < div.degree) tgt = tgt.raised(div.degree);
  if (tgt.degree > div.degree) throw std::invalid_argument("verify_constraints: target degree exceeds flux degree");
  double norm2 = 0.0;
  for (std::size_t k = 0; k < mesh.num_elements(); ++k) {
    const double det = mesh.geometry[k].det;
    rep.max_divergence_residual =
        std::max(rep.max_divergence_residual, std::sqrt(det) * (div.coeffs.col(k) - tgt.coeffs.col(k)).norm());
    norm2 += det * tgt.coeffs.col(k).squaredNorm();
  }
  rep.data_norm = std::sqrt(norm2);
  for (std::size_t f = 0; f < mesh.num_faces(); ++f) {
    if (mesh.faces[f].is_boundary()) continue;
    const FaceTrace a = normal_trace(sigma, mesh, static_cast<int>(f), 0);
    const FaceTrace b = normal_trace(sigma, mesh, static_cast<int>(f), 1);
    FaceTrace jump{a.degree, a.coeffs + b.coeffs};
    rep.max_normal_jump = std::max(rep.max_normal_jump, jump.max_abs());
  }
  for (int f : zero_trace_faces)
    rep.max_neumann_trace = std::max(rep.max_neumann_trace, normal_trace(sigma, mesh, f, 0).max_abs());
  return rep;
}

inline std::vector<int> faces_with_marker(const BoundaryPartition& bp, BoundaryMarker m) {
  std::vector<int> out;
  for (std::size_t f = 0; f < bp.marker.size(); ++f)
    if (bp.marker[f] == m) out.push_back(static_cast<int>(f));
  return out;
}

/// Equilibration checks: ∇·σ_h = Π_hp f, normal continuity, σ_h·n = 0 on Γ_N.
inline EquilibrationReport verify_equilibration(const RTNField& sigma, const Mesh& mesh, const ProblemData& data) {
  const int p = sigma.degree;
  const PiecewisePoly pf = project_scalar(data.f, p, mesh, source_exactness(data, p));
  return verify_constraints(sigma, mesh, pf, faces_with_marker(data.partition, BoundaryMarker::Neumann));
}

}  // namespace equiflux
