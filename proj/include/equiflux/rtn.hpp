/**
 * @file rtn.hpp
 * @brief Reference Raviart-Thomas-Nedelec basis RTN_p = P_p^2 + x P_p on the
 * unit triangle.
 *
 * The basis is dual to face moments ∫_F v·n q_k(t) ds (q_k orthonormal
 * Legendre on the face parameter, t running from local vertex l+1 to l+2 of
 * face l) and interior moments against P_{p-1}^2. Consequently a face basis
 * function has vanishing normal trace on the two other faces, and interior
 * functions have vanishing normal trace everywhere.
 */
#pragma once

#include <array>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>

#include <Eigen/Dense>

#include "polynomial.hpp"
#include "quadrature.hpp"

namespace equiflux {

/// Reference-triangle vertices and face data (face l is opposite vertex l).
namespace reference {
inline const std::array<Vec2, 3> kVertices = {Vec2(0.0, 0.0), Vec2(1.0, 0.0), Vec2(0.0, 1.0)};

inline Vec2 face_point(int face, double t) {
  const Vec2& a = kVertices[(face + 1) % 3];
  const Vec2& b = kVertices[(face + 2) % 3];
  return a + t * (b - a);
}

inline double face_length(int face) {
  return (kVertices[(face + 2) % 3] - kVertices[(face + 1) % 3]).norm();
}

inline Vec2 face_normal(int face) {
  const Vec2 e = kVertices[(face + 2) % 3] - kVertices[(face + 1) % 3];
  return Vec2(e[1], -e[0]).normalized();
}
}  // namespace reference

class RTNBasis {
 public:
  explicit RTNBasis(int degree) : degree_(degree), scalar_(degree) {
    if (degree < 0 || degree > kMaxDegree)
      throw std::invalid_argument("RTNBasis: unsupported degree " + std::to_string(degree));
    const int n = rtn_dim(degree);
    const int np = scalar_dim(degree);
    const int npm1 = scalar_dim(degree - 1);

    // Generalized Vandermonde: rows = degrees of freedom, cols = spanning set.
    Eigen::MatrixXd vander = Eigen::MatrixXd::Zero(n, n);
    const LineRule& line = line_rule(2 * degree + 2);
    Eigen::VectorXd val(np);
    Eigen::MatrixXd grad(2, np);
    Eigen::MatrixXd span_vals(2, n);
    Eigen::VectorXd span_div(n);
    for (int f = 0; f < 3; ++f) {
      const Vec2 nrm = reference::face_normal(f);
      const double len = reference::face_length(f);
      for (std::size_t iq = 0; iq < line.points.size(); ++iq) {
        const double t = line.points[iq];
        spanning(reference::face_point(f, t), val, grad, span_vals, span_div);
        const Eigen::RowVectorXd vn = nrm.transpose() * span_vals;
        for (int k = 0; k <= degree; ++k)
          vander.row(face_dof(f, k)) += line.weights[iq] * len * face_legendre(k, t) * vn;
      }
    }
    const QuadRule& q = quad_rule(2 * degree + 1);
    const ScalarBasis low(std::max(degree - 1, 0));
    Eigen::VectorXd lowv(low.size());
    for (std::size_t iq = 0; iq < q.size(); ++iq) {
      spanning(q.points[iq], val, grad, span_vals, span_div);
      if (npm1 == 0) break;
      low.eval(q.points[iq], lowv);
      for (int j = 0; j < npm1; ++j) {
        vander.row(interior_dof(2 * j)) += q.weights[iq] * lowv[j] * span_vals.row(0);
        vander.row(interior_dof(2 * j + 1)) += q.weights[iq] * lowv[j] * span_vals.row(1);
      }
    }
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(vander);
    coeffs_ = lu.inverse();
    vander_rcond_ = lu.rcond();
  }

  int degree() const { return degree_; }
  int size() const { return rtn_dim(degree_); }
  int face_dof(int face, int k) const { return face * (degree_ + 1) + k; }
  int interior_dof(int j) const { return 3 * (degree_ + 1) + j; }
  int num_face_dofs() const { return degree_ + 1; }
  int num_interior_dofs() const { return size() - 3 * (degree_ + 1); }
  double vandermonde_rcond() const { return vander_rcond_; }

  /// Reference values (2 x size) and reference divergences at x̂.
  void eval(const Vec2& x, Eigen::Ref<Eigen::MatrixXd> values, Eigen::Ref<Eigen::VectorXd> div) const {
    const int n = size();
    Eigen::VectorXd val(scalar_.size());
    Eigen::MatrixXd grad(2, scalar_.size());
    Eigen::MatrixXd span_vals(2, n);
    Eigen::VectorXd span_div(n);
    spanning(x, val, grad, span_vals, span_div);
    values = span_vals * coeffs_;
    div = coeffs_.transpose() * span_div;
  }

 private:
  // Spanning set: (φ_i,0), (0,φ_i) for φ_i ∈ P_p, then x φ_i for deg φ_i == p.
  void spanning(const Vec2& x, Eigen::VectorXd& val, Eigen::MatrixXd& grad, Eigen::MatrixXd& vals,
                Eigen::VectorXd& div) const {
    const int np = scalar_dim(degree_);
    const int npm1 = scalar_dim(degree_ - 1);
    scalar_.eval(x, val, grad);
    vals.setZero();
    for (int i = 0; i < np; ++i) {
      vals(0, i) = val[i];
      div[i] = grad(0, i);
      vals(1, np + i) = val[i];
      div[np + i] = grad(1, i);
    }
    for (int i = npm1; i < np; ++i) {
      const int c = 2 * np + (i - npm1);
      vals(0, c) = x[0] * val[i];
      vals(1, c) = x[1] * val[i];
      div[c] = 2.0 * val[i] + x[0] * grad(0, i) + x[1] * grad(1, i);
    }
  }

  int degree_;
  ScalarBasis scalar_;
  Eigen::MatrixXd coeffs_;  // spanning-set coefficients of each basis member (columns)
  double vander_rcond_ = 0.0;
};

inline const RTNBasis& rtn_basis(int degree) {
  static std::mutex mtx;
  static std::map<int, std::unique_ptr<RTNBasis>> cache;
  std::lock_guard lock(mtx);
  auto& slot = cache[degree];
  if (!slot) slot = std::make_unique<RTNBasis>(degree);
  return *slot;
}

/**
 * @brief Reference RTN tables at the points of one triangle rule.
 *
 * `divergence` holds the exact P_p coefficients of each basis member's
 * reference divergence in the orthonormal scalar basis.
 */
struct RTNTable {
  Eigen::MatrixXd vx;          // nq x dim
  Eigen::MatrixXd vy;          // nq x dim
  Eigen::MatrixXd div;         // nq x dim
  Eigen::MatrixXd divergence;  // scalar_dim(p) x dim
};

inline const RTNTable& rtn_table(int degree, int exactness) {
  static std::mutex mtx;
  static std::map<std::pair<int, int>, std::unique_ptr<RTNTable>> cache;
  const RTNBasis& basis = rtn_basis(degree);
  const QuadRule& q = quad_rule(exactness);
  const ScalarTable& st = scalar_table(degree, 2 * degree);
  const QuadRule& qd = quad_rule(2 * degree);
  std::lock_guard lock(mtx);
  auto& slot = cache[{degree, exactness}];
  if (!slot) {
    auto t = std::make_unique<RTNTable>();
    const int n = basis.size();
    t->vx.resize(q.size(), n);
    t->vy.resize(q.size(), n);
    t->div.resize(q.size(), n);
    Eigen::MatrixXd v(2, n);
    Eigen::VectorXd d(n);
    for (std::size_t iq = 0; iq < q.size(); ++iq) {
      basis.eval(q.points[iq], v, d);
      t->vx.row(iq) = v.row(0);
      t->vy.row(iq) = v.row(1);
      t->div.row(iq) = d.transpose();
    }
    t->divergence = Eigen::MatrixXd::Zero(scalar_dim(degree), n);
    for (std::size_t iq = 0; iq < qd.size(); ++iq) {
      basis.eval(qd.points[iq], v, d);
      t->divergence += qd.weights[iq] * st.values.row(iq).transpose() * d.transpose();
    }
    slot = std::move(t);
  }
  return *slot;
}

}  // namespace equiflux
