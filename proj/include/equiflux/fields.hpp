/**
 * @file fields.hpp
 * @brief Broken polynomial fields P_p(T), RTN_p(T), the elementwise L2
 * projectors onto them, divergence and normal traces.
 */
#pragma once

#include <functional>
#include <iomanip>
#include <ostream>

#include <Eigen/Dense>

#include "mesh.hpp"
#include "polynomial.hpp"
#include "quadrature.hpp"
#include "rtn.hpp"

namespace equiflux {

/// Scalar data evaluated at physical point x known to lie in element k.
using ScalarSampler = std::function<double(int k, const Vec2& x)>;
/// Vector data evaluated at physical point x known to lie in element k.
using VectorSampler = std::function<Vec2(int k, const Vec2& x)>;

/// Elementwise polynomial of degree `degree`; column k holds the coefficients on element k.
struct PiecewisePoly {
  int degree = 0;
  Eigen::MatrixXd coeffs;

  PiecewisePoly() = default;
  PiecewisePoly(int p, std::size_t num_elements) : degree(p), coeffs(Eigen::MatrixXd::Zero(scalar_dim(p), num_elements)) {}

  std::size_t num_elements() const { return static_cast<std::size_t>(coeffs.cols()); }

  double eval(const Mesh& mesh, int k, const Vec2& x) const {
    const ScalarBasis& basis = scalar_basis(degree);
    Eigen::VectorXd v(basis.size());
    basis.eval(mesh.geometry[k].pullback(x), v);
    return v.dot(coeffs.col(k));
  }

  /// Sampler bound to `mesh`; element indices are those of `mesh`.
  ScalarSampler sampler(const Mesh& mesh) const {
    return [field = *this, m = &mesh](int k, const Vec2& x) { return field.eval(*m, k, x); };
  }

  /// Same polynomial represented at a higher degree (prefix inclusion of the basis).
  PiecewisePoly raised(int p) const {
    if (p < degree) throw std::invalid_argument("PiecewisePoly::raised: cannot lower degree");
    PiecewisePoly out(p, num_elements());
    out.coeffs.topRows(coeffs.rows()) = coeffs;
    return out;
  }
};

/// Componentwise vector polynomial field.
struct VectorPoly {
  PiecewisePoly x;
  PiecewisePoly y;

  Vec2 eval(const Mesh& mesh, int k, const Vec2& pt) const { return {x.eval(mesh, k, pt), y.eval(mesh, k, pt)}; }
  VectorSampler sampler(const Mesh& mesh) const {
    return [field = *this, m = &mesh](int k, const Vec2& pt) { return field.eval(*m, k, pt); };
  }
};

/// Broken RTN_p field; column k holds coefficients of the Piola-mapped reference basis on element k.
struct RTNField {
  int degree = 0;
  Eigen::MatrixXd coeffs;

  RTNField() = default;
  RTNField(int p, std::size_t num_elements) : degree(p), coeffs(Eigen::MatrixXd::Zero(rtn_dim(p), num_elements)) {}

  std::size_t num_elements() const { return static_cast<std::size_t>(coeffs.cols()); }

  Vec2 eval(const Mesh& mesh, int k, const Vec2& x) const {
    const RTNBasis& basis = rtn_basis(degree);
    const ElementGeometry& g = mesh.geometry[k];
    Eigen::MatrixXd v(2, basis.size());
    Eigen::VectorXd d(basis.size());
    basis.eval(g.pullback(x), v, d);
    return g.jacobian * (v * coeffs.col(k)) / g.det;
  }

  VectorSampler sampler(const Mesh& mesh) const {
    return [field = *this, m = &mesh](int k, const Vec2& x) { return field.eval(*m, k, x); };
  }

  RTNField& operator+=(const RTNField& o) {
    if (o.degree != degree) throw std::invalid_argument("RTNField: degree mismatch");
    coeffs += o.coeffs;
    return *this;
  }
};

/**
 * @brief Piola-mapped RTN values of all basis members at the points of one
 * rule on element k: physical components are rows of vx/vy, physical
 * divergence in div.
 */
struct PhysicalRTN {
  Eigen::MatrixXd vx, vy, div;
};

inline PhysicalRTN physical_rtn(const Mesh& mesh, int k, int p, int exactness) {
  const RTNTable& t = rtn_table(p, exactness);
  const ElementGeometry& g = mesh.geometry[k];
  const Mat2& B = g.jacobian;
  PhysicalRTN out;
  out.vx = (B(0, 0) * t.vx + B(0, 1) * t.vy) / g.det;
  out.vy = (B(1, 0) * t.vx + B(1, 1) * t.vy) / g.det;
  out.div = t.div / g.det;
  return out;
}

/// Default exactness for projecting non-polynomial data at degree p.
inline int default_exactness(int p) { return 2 * p + 6; }

/// Π_hp: elementwise L2 projection onto P_p.
inline PiecewisePoly project_scalar(const ScalarSampler& f, int p, const Mesh& mesh, int exactness = -1) {
  if (exactness < 0) exactness = default_exactness(p);
  const QuadRule& q = quad_rule(exactness);
  const ScalarTable& t = scalar_table(p, exactness);
  PiecewisePoly out(p, mesh.num_elements());
  Eigen::VectorXd fw(q.size());
  for (std::size_t k = 0; k < mesh.num_elements(); ++k) {
    const ElementGeometry& g = mesh.geometry[k];
    for (std::size_t iq = 0; iq < q.size(); ++iq) fw[iq] = q.weights[iq] * f(static_cast<int>(k), g.map(q.points[iq]));
    out.coeffs.col(k) = t.values.transpose() * fw;
  }
  return out;
}

/// Componentwise Π_hp of a vector field.
inline VectorPoly project_vector(const VectorSampler& v, int p, const Mesh& mesh, int exactness = -1) {
  if (exactness < 0) exactness = default_exactness(p);
  const QuadRule& q = quad_rule(exactness);
  const ScalarTable& t = scalar_table(p, exactness);
  VectorPoly out{PiecewisePoly(p, mesh.num_elements()), PiecewisePoly(p, mesh.num_elements())};
  Eigen::VectorXd wx(q.size()), wy(q.size());
  for (std::size_t k = 0; k < mesh.num_elements(); ++k) {
    const ElementGeometry& g = mesh.geometry[k];
    for (std::size_t iq = 0; iq < q.size(); ++iq) {
      const Vec2 val = v(static_cast<int>(k), g.map(q.points[iq]));
      wx[iq] = q.weights[iq] * val[0];
      wy[iq] = q.weights[iq] * val[1];
    }
    out.x.coeffs.col(k) = t.values.transpose() * wx;
    out.y.coeffs.col(k) = t.values.transpose() * wy;
  }
  return out;
}

/// RTN mass matrix of element k at degree p.
inline Eigen::MatrixXd rtn_mass(const Mesh& mesh, int k, int p) {
  const int ex = 2 * p + 2;
  const QuadRule& q = quad_rule(ex);
  const PhysicalRTN v = physical_rtn(mesh, k, p, ex);
  const Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(q.weights.data(), q.size()) * mesh.geometry[k].det;
  return v.vx.transpose() * w.asDiagonal() * v.vx + v.vy.transpose() * w.asDiagonal() * v.vy;
}

/// Π_hp^RTN on a single element: coefficients of the L2 projection of v onto RTN_p(K).
inline Eigen::VectorXd project_rtn_element(const VectorSampler& v, int p, const Mesh& mesh, int k, int exactness) {
  const QuadRule& q = quad_rule(exactness);
  const PhysicalRTN b = physical_rtn(mesh, k, p, exactness);
  const ElementGeometry& g = mesh.geometry[k];
  Eigen::VectorXd wx(q.size()), wy(q.size());
  for (std::size_t iq = 0; iq < q.size(); ++iq) {
    const Vec2 val = v(k, g.map(q.points[iq]));
    wx[iq] = q.weights[iq] * g.det * val[0];
    wy[iq] = q.weights[iq] * g.det * val[1];
  }
  const Eigen::VectorXd rhs = b.vx.transpose() * wx + b.vy.transpose() * wy;
  return rtn_mass(mesh, k, p).llt().solve(rhs);
}

/// Π_hp^RTN: elementwise L2 projection onto RTN_p(T).
inline RTNField project_rtn(const VectorSampler& v, int p, const Mesh& mesh, int exactness = -1) {
  if (exactness < 0) exactness = default_exactness(p);
  RTNField out(p, mesh.num_elements());
  for (std::size_t k = 0; k < mesh.num_elements(); ++k)
    out.coeffs.col(k) = project_rtn_element(v, p, mesh, static_cast<int>(k), exactness);
  return out;
}

/// Exact RTN_q field re-expressed at degree p >= q.
inline RTNField raise_rtn(const RTNField& field, int p, const Mesh& mesh) {
  if (p < field.degree) throw std::invalid_argument("raise_rtn: cannot lower degree");
  if (p == field.degree) return field;
  return project_rtn(field.sampler(mesh), p, mesh, 2 * p + 2);
}

/// Elementwise divergence, exact in P_p.
inline PiecewisePoly divergence(const RTNField& v, const Mesh& mesh) {
  const RTNTable& t = rtn_table(v.degree, 2 * v.degree + 2);
  PiecewisePoly out(v.degree, mesh.num_elements());
  for (std::size_t k = 0; k < mesh.num_elements(); ++k)
    out.coeffs.col(k) = t.divergence * v.coeffs.col(k) / mesh.geometry[k].det;
  return out;
}

/// Normal trace v·n on a face as Legendre coefficients in the face parameter.
struct FaceTrace {
  int degree = 0;
  Eigen::VectorXd coeffs;  // orthonormal Legendre on t ∈ [0,1], t from face.vertices[0] to [1]

  double eval(double t) const {
    double s = 0.0;
    for (int k = 0; k <= degree; ++k) s += coeffs[k] * face_legendre(k, t);
    return s;
  }
  double max_abs(int samples = 0) const {
    // sup over a fine sampling plus the endpoints
    if (samples <= 0) samples = 4 * degree + 8;
    double m = 0.0;
    for (int i = 0; i <= samples; ++i) m = std::max(m, std::abs(eval(static_cast<double>(i) / samples)));
    return m;
  }
};

/**
 * @brief v·n on face f seen from its adjacent element `side` (0 or 1), n the
 * outward unit normal of that element.
 */
inline FaceTrace normal_trace(const RTNField& v, const Mesh& mesh, int f, int side) {
  const Face& face = mesh.faces[f];
  if (side < 0 || side > 1 || face.elements[side] < 0)
    throw std::invalid_argument("normal_trace: face has no element on side " + std::to_string(side));
  const int k = face.elements[side];
  const Vec2 n = mesh.outward_normal(k, face.local[side]);
  const Vec2 a = mesh.vertices[face.vertices[0]];
  const Vec2 b = mesh.vertices[face.vertices[1]];
  const LineRule& line = line_rule(2 * v.degree + 2);
  FaceTrace out;
  out.degree = v.degree;
  out.coeffs = Eigen::VectorXd::Zero(v.degree + 1);
  for (std::size_t iq = 0; iq < line.points.size(); ++iq) {
    const double t = line.points[iq];
    const double vn = v.eval(mesh, k, a + t * (b - a)).dot(n);
    for (int j = 0; j <= v.degree; ++j) out.coeffs[j] += line.weights[iq] * vn * face_legendre(j, t);
  }
  return out;
}

/// CSV rows `element,basis,coefficient`.
inline void write_coefficients_csv(std::ostream& os, const Eigen::MatrixXd& coeffs) {
  os << "element,basis,coefficient\n" << std::setprecision(17);
  for (Eigen::Index k = 0; k < coeffs.cols(); ++k)
    for (Eigen::Index i = 0; i < coeffs.rows(); ++i) os << k << ',' << i << ',' << coeffs(i, k) << '\n';
}

/// ‖a - b‖_K² for two samplers, by quadrature of the given exactness.
inline double l2_distance_sq(const Mesh& mesh, int k, const ScalarSampler& a, const ScalarSampler& b, int exactness) {
  const QuadRule& q = quad_rule(exactness);
  const ElementGeometry& g = mesh.geometry[k];
  double s = 0.0;
  for (std::size_t iq = 0; iq < q.size(); ++iq) {
    const Vec2 x = g.map(q.points[iq]);
    const double d = a(k, x) - b(k, x);
    s += q.weights[iq] * d * d;
  }
  return s * g.det;
}

inline double l2_distance_sq(const Mesh& mesh, int k, const VectorSampler& a, const VectorSampler& b, int exactness) {
  const QuadRule& q = quad_rule(exactness);
  const ElementGeometry& g = mesh.geometry[k];
  double s = 0.0;
  for (std::size_t iq = 0; iq < q.size(); ++iq) {
    const Vec2 x = g.map(q.points[iq]);
    s += q.weights[iq] * (a(k, x) - b(k, x)).squaredNorm();
  }
  return s * g.det;
}

inline ScalarSampler zero_scalar() {
  return [](int, const Vec2&) { return 0.0; };
}
inline VectorSampler zero_vector() {
  return [](int, const Vec2&) { return Vec2::Zero().eval(); };
}

}  // namespace equiflux
