/**
 * @file primal.hpp
 * @brief H1-conforming hierarchic finite elements for
 *
 *   (∇u_h, ∇v_h) = (f, v_h) - (ξ, ∇v_h)   for all v_h ∈ V_h,
 *
 * with homogeneous Dirichlet conditions on Γ_D, or zero mean when Γ_N = ∂Ω.
 */
#pragma once

#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "fields.hpp"
#include "linsolve.hpp"
#include "mesh.hpp"
#include "polynomial.hpp"

namespace equiflux {

/// Input data are inconsistent with the problem (e.g. pure-Neumann compatibility).
class CompatibilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Source data f, ξ of the model problem together with the boundary partition.
struct ProblemData {
  ScalarSampler f = zero_scalar();
  VectorSampler xi = zero_vector();
  BoundaryPartition partition;
  /// Polynomial degree of f and ξ if they are piecewise polynomial, -1 otherwise.
  int data_degree = -1;
  /// Extra quadrature degree used for non-polynomial data.
  int extra_quadrature = 6;

  int quadrature_for(int p) const { return data_degree >= 0 ? p + data_degree + 2 : p + extra_quadrature + 2; }
};

/**
 * @brief Hierarchic H1 basis: vertex hats, edge functions
 * λ_sλ_t P^{(1,1)}_{k-2}(λ_t - λ_s) with s < t in global numbering, and
 * interior bubbles λ_0λ_1λ_2 φ_m.
 */
class H1Space {
 public:
  H1Space(const Mesh& mesh, int degree) : mesh_(&mesh), degree_(degree) {
    if (degree < 1) throw std::invalid_argument("H1Space: degree must be >= 1");
    edge_dofs_ = degree - 1;
    bubble_dofs_ = scalar_dim(degree - 3);
    num_dofs_ = static_cast<int>(mesh.num_vertices() + mesh.num_faces() * edge_dofs_ +
                                 mesh.num_elements() * bubble_dofs_);
  }

  const Mesh& mesh() const { return *mesh_; }
  int degree() const { return degree_; }
  int num_dofs() const { return num_dofs_; }
  int local_size() const { return scalar_dim(degree_); }

  std::vector<int> element_dofs(int k) const {
    std::vector<int> dofs;
    dofs.reserve(local_size());
    const auto& e = mesh_->elements[k];
    for (int l = 0; l < 3; ++l) dofs.push_back(e[l]);
    const int nv = static_cast<int>(mesh_->num_vertices());
    for (int l = 0; l < 3; ++l)
      for (int j = 0; j < edge_dofs_; ++j) dofs.push_back(nv + mesh_->element_faces[k][l] * edge_dofs_ + j);
    const int off = nv + static_cast<int>(mesh_->num_faces()) * edge_dofs_;
    for (int j = 0; j < bubble_dofs_; ++j) dofs.push_back(off + k * bubble_dofs_ + j);
    return dofs;
  }

  /// Values and physical gradients of the local basis at reference point xhat of element k.
  void eval(int k, const Vec2& xhat, Eigen::Ref<Eigen::VectorXd> val, Eigen::Ref<Eigen::MatrixXd> grad) const {
    const auto& e = mesh_->elements[k];
    const Mat2 BinvT = mesh_->geometry[k].inverse.transpose();
    const double lam[3] = {1.0 - xhat[0] - xhat[1], xhat[0], xhat[1]};
    const Vec2 dlam[3] = {BinvT * Vec2(-1.0, -1.0), BinvT * Vec2(1.0, 0.0), BinvT * Vec2(0.0, 1.0)};
    int idx = 0;
    for (int l = 0; l < 3; ++l, ++idx) {
      val[idx] = lam[l];
      grad.col(idx) = dlam[l];
    }
    for (int l = 0; l < 3; ++l) {
      int s = (l + 1) % 3, t = (l + 2) % 3;
      if (e[s] > e[t]) std::swap(s, t);
      const double arg = lam[t] - lam[s];
      const Vec2 darg = dlam[t] - dlam[s];
      const double prod = lam[s] * lam[t];
      const Vec2 dprod = dlam[s] * lam[t] + lam[s] * dlam[t];
      for (int kk = 2; kk <= degree_; ++kk, ++idx) {
        const auto [pv, pd] = jacobi(kk - 2, 1.0, 1.0, arg);
        val[idx] = prod * pv;
        grad.col(idx) = dprod * pv + prod * pd * darg;
      }
    }
    if (bubble_dofs_ > 0) {
      const ScalarBasis& sb = scalar_basis(degree_ - 3);
      Eigen::VectorXd sv(sb.size());
      Eigen::MatrixXd sg(2, sb.size());
      sb.eval(xhat, sv, sg);
      const double bub = lam[0] * lam[1] * lam[2];
      const Vec2 dbub = dlam[0] * lam[1] * lam[2] + lam[0] * dlam[1] * lam[2] + lam[0] * lam[1] * dlam[2];
      for (int j = 0; j < bubble_dofs_; ++j, ++idx) {
        val[idx] = bub * sv[j];
        grad.col(idx) = dbub * sv[j] + bub * (BinvT * sg.col(j));
      }
    }
  }

  /// DOFs whose basis functions do not vanish on the given boundary faces.
  std::vector<char> dofs_on_faces(const std::vector<int>& faces) const {
    std::vector<char> mark(num_dofs_, 0);
    const int nv = static_cast<int>(mesh_->num_vertices());
    for (int f : faces) {
      for (int v : mesh_->faces[f].vertices) mark[v] = 1;
      for (int j = 0; j < edge_dofs_; ++j) mark[nv + f * edge_dofs_ + j] = 1;
    }
    return mark;
  }

 private:
  const Mesh* mesh_;
  int degree_;
  int edge_dofs_ = 0;
  int bubble_dofs_ = 0;
  int num_dofs_ = 0;
};

/// Discrete solution u_h ∈ V_h.
class PrimalSolution {
 public:
  PrimalSolution(std::shared_ptr<const H1Space> space, Eigen::VectorXd coeffs)
      : space_(std::move(space)), coeffs_(std::move(coeffs)) {}

  int degree() const { return space_->degree(); }
  const H1Space& space() const { return *space_; }
  const Mesh& mesh() const { return space_->mesh(); }
  const Eigen::VectorXd& coefficients() const { return coeffs_; }

  double value(int k, const Vec2& x) const {
    const auto [v, g] = local_eval(k, x);
    return v;
  }
  Vec2 gradient(int k, const Vec2& x) const { return local_eval(k, x).second; }

  ScalarSampler value_sampler() const {
    return [self = *this](int k, const Vec2& x) { return self.value(k, x); };
  }
  VectorSampler gradient_sampler() const {
    return [self = *this](int k, const Vec2& x) { return self.gradient(k, x); };
  }

  /// ‖∇u_h‖
  double energy_norm() const {
    const int ex = 2 * degree();
    const QuadRule& q = quad_rule(ex);
    double s = 0.0;
    for (std::size_t k = 0; k < mesh().num_elements(); ++k) {
      const ElementGeometry& g = mesh().geometry[k];
      for (std::size_t iq = 0; iq < q.size(); ++iq)
        s += q.weights[iq] * g.det * gradient(static_cast<int>(k), g.map(q.points[iq])).squaredNorm();
    }
    return std::sqrt(s);
  }

  /// Gradient ∇u_h projected componentwise to degree p (exact for p >= degree()-1).
  VectorPoly gradient_field(int p) const { return project_vector(gradient_sampler(), p, mesh(), p + degree() + 1); }

 private:
  std::pair<double, Vec2> local_eval(int k, const Vec2& x) const {
    const int n = space_->local_size();
    Eigen::VectorXd v(n);
    Eigen::MatrixXd g(2, n);
    space_->eval(k, mesh().geometry[k].pullback(x), v, g);
    const auto dofs = space_->element_dofs(k);
    double val = 0.0;
    Vec2 grad = Vec2::Zero();
    for (int i = 0; i < n; ++i) {
      val += coeffs_[dofs[i]] * v[i];
      grad += coeffs_[dofs[i]] * g.col(i);
    }
    return {val, grad};
  }

  std::shared_ptr<const H1Space> space_;
  Eigen::VectorXd coeffs_;
};

/// (f,1) / (‖f‖ |Ω|^{1/2}): normalized pure-Neumann compatibility defect.
inline double neumann_compatibility_defect(const Mesh& mesh, const ScalarSampler& f, int exactness) {
  const QuadRule& q = quad_rule(exactness);
  double mean = 0.0, norm2 = 0.0;
  for (std::size_t k = 0; k < mesh.num_elements(); ++k) {
    const ElementGeometry& g = mesh.geometry[k];
    for (std::size_t iq = 0; iq < q.size(); ++iq) {
      const double v = f(static_cast<int>(k), g.map(q.points[iq]));
      mean += q.weights[iq] * g.det * v;
      norm2 += q.weights[iq] * g.det * v * v;
    }
  }
  if (norm2 == 0.0) return 0.0;
  return std::abs(mean) / std::sqrt(norm2 * mesh.area());
}

struct PrimalOptions {
  double compatibility_tolerance = 1e-11;
};

/**
 * @brief Galerkin solve at degree p′.
 *
 * @throws CompatibilityError for pure-Neumann data with (f,1) ≠ 0,
 * SolverError on factorization failure.
 */
inline PrimalSolution solve_primal(const ProblemData& data, const Mesh& mesh, int degree, PrimalOptions opts = {}) {
  auto space = std::make_shared<H1Space>(mesh, degree);
  const int nd = space->num_dofs();
  const int ex = std::max(2 * degree, data.quadrature_for(degree));
  const QuadRule& q = quad_rule(ex);
  const bool pure_neumann = !data.partition.has_dirichlet();
  if (pure_neumann) {
    const double defect = neumann_compatibility_defect(mesh, data.f, ex);
    if (defect > opts.compatibility_tolerance)
      throw CompatibilityError("pure-Neumann compatibility violated: (f,1) != 0 (normalized defect " +
                               std::to_string(defect) + ")");
  }

  std::vector<int> dirichlet_faces;
  for (std::size_t f = 0; f < mesh.num_faces(); ++f)
    if (data.partition.marker[f] == BoundaryMarker::Dirichlet) dirichlet_faces.push_back(static_cast<int>(f));
  const std::vector<char> fixed = space->dofs_on_faces(dirichlet_faces);
  std::vector<int> free_index(nd, -1);
  int nfree = 0;
  for (int i = 0; i < nd; ++i)
    if (!fixed[i]) free_index[i] = nfree++;

  const int nl = space->local_size();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(mesh.num_elements() * nl * nl);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nfree);
  Eigen::VectorXd mean_w = Eigen::VectorXd::Zero(nfree);
  Eigen::VectorXd val(nl);
  Eigen::MatrixXd grad(2, nl);
  for (std::size_t k = 0; k < mesh.num_elements(); ++k) {
    const int ki = static_cast<int>(k);
    const ElementGeometry& g = mesh.geometry[k];
    Eigen::MatrixXd Kloc = Eigen::MatrixXd::Zero(nl, nl);
    Eigen::VectorXd Floc = Eigen::VectorXd::Zero(nl);
    Eigen::VectorXd Wloc = Eigen::VectorXd::Zero(nl);
    for (std::size_t iq = 0; iq < q.size(); ++iq) {
      space->eval(ki, q.points[iq], val, grad);
      const double w = q.weights[iq] * g.det;
      const Vec2 x = g.map(q.points[iq]);
      const double fv = data.f(ki, x);
      const Vec2 xv = data.xi(ki, x);
      Kloc.noalias() += w * grad.transpose() * grad;
      Floc.noalias() += w * (fv * val - grad.transpose() * xv);
      Wloc += w * val;
    }
    const auto dofs = space->element_dofs(ki);
    for (int i = 0; i < nl; ++i) {
      const int gi = free_index[dofs[i]];
      if (gi < 0) continue;
      rhs[gi] += Floc[i];
      mean_w[gi] += Wloc[i];
      for (int j = 0; j < nl; ++j) {
        const int gj = free_index[dofs[j]];
        if (gj >= 0) trip.emplace_back(gi, gj, Kloc(i, j));
      }
    }
  }
  SparseSPD sys;
  sys.A.resize(nfree, nfree);
  sys.A.setFromTriplets(trip.begin(), trip.end());
  if (pure_neumann) {
    Eigen::VectorXd ones = Eigen::VectorXd::Zero(nfree);
    ones.head(static_cast<Eigen::Index>(mesh.num_vertices())).setOnes();
    sys.nullspace = ones;
    sys.mean_weights = mean_w;
  }
  const SpdSolution sol = solve_spd(sys, rhs);
  Eigen::VectorXd coeffs = Eigen::VectorXd::Zero(nd);
  for (int i = 0; i < nd; ++i)
    if (free_index[i] >= 0) coeffs[i] = sol.x[free_index[i]];
  return PrimalSolution(std::move(space), std::move(coeffs));
}

/// ‖∇u_ref - ∇u_h‖ by quadrature with exactness >= 2p′+4.
inline double energy_error(const PrimalSolution& uh, const VectorSampler& reference_gradient, int exactness = -1) {
  if (exactness < 0) exactness = 2 * uh.degree() + 4;
  const Mesh& mesh = uh.mesh();
  const QuadRule& q = quad_rule(exactness);
  double s = 0.0;
  for (std::size_t k = 0; k < mesh.num_elements(); ++k) {
    const int ki = static_cast<int>(k);
    const ElementGeometry& g = mesh.geometry[k];
    for (std::size_t iq = 0; iq < q.size(); ++iq) {
      const Vec2 x = g.map(q.points[iq]);
      s += q.weights[iq] * g.det * (reference_gradient(ki, x) - uh.gradient(ki, x)).squaredNorm();
    }
  }
  return std::sqrt(s);
}

/// Galerkin residual (f,v) - (ξ,∇v) - (∇u_h,∇v) for every free basis function, max-abs relative to ‖rhs‖∞.
inline double galerkin_residual(const PrimalSolution& uh, const ProblemData& data) {
  const H1Space& space = uh.space();
  const Mesh& mesh = uh.mesh();
  const int nl = space.local_size();
  const int ex = std::max(2 * uh.degree(), data.quadrature_for(uh.degree()));
  const QuadRule& q = quad_rule(ex);
  std::vector<int> dirichlet_faces;
  for (std::size_t f = 0; f < mesh.num_faces(); ++f)
    if (data.partition.marker[f] == BoundaryMarker::Dirichlet) dirichlet_faces.push_back(static_cast<int>(f));
  const std::vector<char> fixed = space.dofs_on_faces(dirichlet_faces);
  Eigen::VectorXd res = Eigen::VectorXd::Zero(space.num_dofs());
  Eigen::VectorXd load = Eigen::VectorXd::Zero(space.num_dofs());
  Eigen::VectorXd val(nl);
  Eigen::MatrixXd grad(2, nl);
  for (std::size_t k = 0; k < mesh.num_elements(); ++k) {
    const int ki = static_cast<int>(k);
    const ElementGeometry& g = mesh.geometry[k];
    const auto dofs = space.element_dofs(ki);
    for (std::size_t iq = 0; iq < q.size(); ++iq) {
      space.eval(ki, q.points[iq], val, grad);
      const double w = q.weights[iq] * g.det;
      const Vec2 x = g.map(q.points[iq]);
      Vec2 gu = Vec2::Zero();
      for (int i = 0; i < nl; ++i) gu += uh.coefficients()[dofs[i]] * grad.col(i);
      const double fv = data.f(ki, x);
      const Vec2 xv = data.xi(ki, x);
      for (int i = 0; i < nl; ++i) {
        const double li = w * (fv * val[i] - grad.col(i).dot(xv));
        load[dofs[i]] += std::abs(li);
        res[dofs[i]] += li - w * grad.col(i).dot(gu);
      }
    }
  }
  double worst = 0.0;
  for (int i = 0; i < space.num_dofs(); ++i)
    if (!fixed[i]) worst = std::max(worst, std::abs(res[i]));
  const double scale = std::max(load.maxCoeff(), 1e-300);
  return worst / scale;
}

}  // namespace equiflux
