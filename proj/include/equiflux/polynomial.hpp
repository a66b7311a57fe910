/**
 * @file polynomial.hpp
 * @brief Orthonormal polynomial families: Jacobi recurrences, the Dubiner
 * basis of P_p on the reference triangle, and Legendre polynomials on faces.
 */
#pragma once

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "quadrature.hpp"

namespace equiflux {

/// Highest polynomial degree with validated conditioning diagnostics.
inline constexpr int kMaxDegree = 8;

inline constexpr int scalar_dim(int p) { return p < 0 ? 0 : (p + 1) * (p + 2) / 2; }
inline constexpr int rtn_dim(int p) { return (p + 1) * (p + 3); }

/// Value and derivative of the Jacobi polynomial P_n^{(alpha,beta)} at x.
inline std::pair<double, double> jacobi(int n, double alpha, double beta, double x) {
  if (n == 0) return {1.0, 0.0};
  double p0 = 1.0, d0 = 0.0;
  double p1 = 0.5 * ((alpha + beta + 2.0) * x + (alpha - beta));
  double d1 = 0.5 * (alpha + beta + 2.0);
  for (int k = 2; k <= n; ++k) {
    const double s = 2.0 * k + alpha + beta;
    const double a1 = 2.0 * k * (k + alpha + beta) * (s - 2.0);
    const double a2 = (s - 1.0) * (alpha * alpha - beta * beta);
    const double a3 = (s - 1.0) * s * (s - 2.0);
    const double a4 = 2.0 * (k + alpha - 1.0) * (k + beta - 1.0) * s;
    const double pk = ((a2 + a3 * x) * p1 - a4 * p0) / a1;
    const double dk = ((a2 + a3 * x) * d1 + a3 * p1 - a4 * d0) / a1;
    p0 = p1;
    d0 = d1;
    p1 = pk;
    d1 = dk;
  }
  return {p1, d1};
}

/// Legendre polynomial orthonormal on [0,1]: sqrt(2k+1) P_k(2t-1).
inline double face_legendre(int k, double t) {
  return std::sqrt(2.0 * k + 1.0) * jacobi(k, 0.0, 0.0, 2.0 * t - 1.0).first;
}

/**
 * @brief Orthonormal Dubiner basis of P_p on the reference triangle.
 *
 * Functions are ordered by total degree, so the first scalar_dim(q) members
 * span P_q for every q <= p. Normalization: ∫_ref φ_i φ_j = δ_ij.
 */
class ScalarBasis {
 public:
  explicit ScalarBasis(int degree) : degree_(degree) {
    if (degree < 0 || degree > kMaxDegree + 4)
      throw std::invalid_argument("ScalarBasis: unsupported degree " + std::to_string(degree));
    for (int k = 0; k <= degree; ++k)
      for (int j = 0; j <= k; ++j) index_.emplace_back(k - j, j);
    scale_.assign(index_.size(), 1.0);
    const QuadRule& q = quad_rule(2 * degree);
    std::vector<double> norm2(index_.size(), 0.0);
    Eigen::VectorXd v(size());
    for (std::size_t iq = 0; iq < q.size(); ++iq) {
      eval(q.points[iq], v);
      for (int i = 0; i < size(); ++i) norm2[i] += q.weights[iq] * v[i] * v[i];
    }
    for (int i = 0; i < size(); ++i) scale_[i] = 1.0 / std::sqrt(norm2[i]);
  }

  int degree() const { return degree_; }
  int size() const { return static_cast<int>(index_.size()); }

  void eval(const Vec2& x, Eigen::Ref<Eigen::VectorXd> values) const {
    Eigen::MatrixXd grads(2, size());
    eval(x, values, grads);
  }

  /// Values and reference gradients (2 x size) at a reference point.
  void eval(const Vec2& x, Eigen::Ref<Eigen::VectorXd> values,
            Eigen::Ref<Eigen::MatrixXd> grads) const {
    const int p = degree_;
    const double a = 2.0 * x[0] + x[1] - 1.0;
    const double s = 1.0 - x[1];
    // homogenized Legendre Q_i(a,s) = s^i P_i(a/s)
    std::vector<double> Q(p + 1), Qx(p + 1), Qy(p + 1);
    Q[0] = 1.0;
    Qx[0] = Qy[0] = 0.0;
    if (p >= 1) {
      Q[1] = a;
      Qx[1] = 2.0;
      Qy[1] = 1.0;
    }
    for (int n = 1; n < p; ++n) {
      Q[n + 1] = ((2.0 * n + 1.0) * a * Q[n] - n * s * s * Q[n - 1]) / (n + 1.0);
      Qx[n + 1] = ((2.0 * n + 1.0) * (2.0 * Q[n] + a * Qx[n]) - n * s * s * Qx[n - 1]) / (n + 1.0);
      Qy[n + 1] = ((2.0 * n + 1.0) * (1.0 * Q[n] + a * Qy[n]) -
                   n * (-2.0 * s * Q[n - 1] + s * s * Qy[n - 1])) /
                  (n + 1.0);
    }
    const double eta = 2.0 * x[1] - 1.0;
    for (int b = 0; b < size(); ++b) {
      const auto [i, j] = index_[b];
      const auto [pj, dpj] = jacobi(j, 2.0 * i + 1.0, 0.0, eta);
      values[b] = scale_[b] * Q[i] * pj;
      grads(0, b) = scale_[b] * Qx[i] * pj;
      grads(1, b) = scale_[b] * (Qy[i] * pj + Q[i] * 2.0 * dpj);
    }
  }

 private:
  int degree_;
  std::vector<std::pair<int, int>> index_;
  std::vector<double> scale_;
};

/// Shared immutable basis instance for a degree.
inline const ScalarBasis& scalar_basis(int degree) {
  static std::mutex mtx;
  static std::map<int, std::unique_ptr<ScalarBasis>> cache;
  std::lock_guard lock(mtx);
  auto& slot = cache[degree];
  if (!slot) slot = std::make_unique<ScalarBasis>(degree);
  return *slot;
}

/// Scalar basis values and reference gradients tabulated at quadrature points.
struct ScalarTable {
  Eigen::MatrixXd values;  // nq x dim
  Eigen::MatrixXd dx;      // nq x dim
  Eigen::MatrixXd dy;      // nq x dim
};

inline const ScalarTable& scalar_table(int degree, int exactness) {
  static std::mutex mtx;
  static std::map<std::pair<int, int>, std::unique_ptr<ScalarTable>> cache;
  const ScalarBasis& basis = scalar_basis(degree);
  const QuadRule& q = quad_rule(exactness);
  std::lock_guard lock(mtx);
  auto& slot = cache[{degree, exactness}];
  if (!slot) {
    auto t = std::make_unique<ScalarTable>();
    const int n = basis.size();
    t->values.resize(q.size(), n);
    t->dx.resize(q.size(), n);
    t->dy.resize(q.size(), n);
    Eigen::VectorXd v(n);
    Eigen::MatrixXd g(2, n);
    for (std::size_t iq = 0; iq < q.size(); ++iq) {
      basis.eval(q.points[iq], v, g);
      t->values.row(iq) = v.transpose();
      t->dx.row(iq) = g.row(0);
      t->dy.row(iq) = g.row(1);
    }
    slot = std::move(t);
  }
  return *slot;
}

}  // namespace equiflux
