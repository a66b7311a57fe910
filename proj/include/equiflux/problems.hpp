/**
 * @file problems.hpp
 * @brief Registered manufactured problems and weight configurations.
 */
#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "fields.hpp"
#include "lifting.hpp"
#include "mesh.hpp"
#include "primal.hpp"

namespace equiflux {

struct ManufacturedProblem {
  std::string id;
  ProblemData data;
  std::optional<ScalarSampler> u;
  std::optional<VectorSampler> grad_u;
  std::optional<double> energy;  // ‖∇u‖ when known in closed form
  // piecewise-polynomial representation of the data, when available
  std::optional<PiecewisePoly> f_poly;
  std::optional<RTNField> xi_poly;
};

/// (a) u = sin(πx) sin(πy), Dirichlet on ∂Ω.
inline ManufacturedProblem sin_sin_problem(const Mesh& mesh) {
  constexpr double pi = std::numbers::pi;
  ManufacturedProblem pr;
  pr.id = "sin-sin";
  pr.data.partition = BoundaryPartition::uniform(mesh, BoundaryMarker::Dirichlet);
  pr.data.f = [](int, const Vec2& x) { return 2 * pi * pi * std::sin(pi * x[0]) * std::sin(pi * x[1]); };
  pr.u = [](int, const Vec2& x) { return std::sin(pi * x[0]) * std::sin(pi * x[1]); };
  pr.grad_u = [](int, const Vec2& x) -> Vec2 {
    return {pi * std::cos(pi * x[0]) * std::sin(pi * x[1]), pi * std::sin(pi * x[0]) * std::cos(pi * x[1])};
  };
  pr.energy = pi / std::sqrt(2.0);
  return pr;
}

/// (b) constant ξ = c, f = 0, pure Neumann; u = -c·x up to a constant.
inline ManufacturedProblem constant_flux_problem(const Mesh& mesh, Vec2 c = Vec2(1.0, 0.5)) {
  ManufacturedProblem pr;
  pr.id = "constant-flux";
  pr.data.partition = BoundaryPartition::uniform(mesh, BoundaryMarker::Neumann);
  pr.data.xi = [c](int, const Vec2&) -> Vec2 { return c; };
  pr.data.data_degree = 0;
  pr.u = [c](int, const Vec2& x) { return -c.dot(x); };
  pr.grad_u = [c](int, const Vec2&) -> Vec2 { return -c; };
  pr.energy = c.norm() * std::sqrt(mesh.area());
  pr.f_poly = PiecewisePoly(0, mesh.num_elements());
  pr.xi_poly = project_rtn(pr.data.xi, 0, mesh, 2);
  return pr;
}

/// Random global polynomial of total degree `deg` in (x - 1/2, y - 1/2), coefficients in [-1, 1].
struct RandomPolynomial {
  int degree = 0;
  std::vector<double> coeffs;  // graded ordering x^i y^j, i + j ≤ degree

  RandomPolynomial(int deg, std::mt19937_64& rng) : degree(deg) {
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    for (int s = 0; s <= deg; ++s)
      for (int j = 0; j <= s; ++j) coeffs.push_back(unif(rng));
  }
  double operator()(const Vec2& x) const {
    const double X = x[0] - 0.5, Y = x[1] - 0.5;
    double v = 0.0;
    std::size_t idx = 0;
    for (int s = 0; s <= degree; ++s)
      for (int j = 0; j <= s; ++j) v += coeffs[idx++] * std::pow(X, s - j) * std::pow(Y, j);
    return v;
  }
};

/**
 * @brief (c) seeded random data f ∈ P_{p-1}, ξ ∈ [P_{p-1}]² ⊂ RTN_{p-1}.
 *
 * The data are global polynomials, so they are smooth across element
 * boundaries; elementwise they lie in the required discrete spaces.
 */
inline ManufacturedProblem random_polynomial_problem(const Mesh& mesh, int p, std::uint64_t seed,
                                                     BoundaryMarker marker = BoundaryMarker::Dirichlet) {
  if (p < 1) throw std::invalid_argument("random_polynomial_problem: p >= 1");
  std::mt19937_64 rng(seed);
  const RandomPolynomial fp(p - 1, rng), x0(p - 1, rng), x1(p - 1, rng);
  ManufacturedProblem pr;
  pr.id = "random-poly";
  pr.data.partition = BoundaryPartition::uniform(mesh, marker);
  pr.data.data_degree = p - 1;
  pr.data.xi = [x0, x1](int, const Vec2& x) -> Vec2 { return {x0(x), x1(x)}; };
  const int ex = 2 * p + 2;
  if (marker == BoundaryMarker::Neumann) {
    PiecewisePoly raw = project_scalar([fp](int, const Vec2& x) { return fp(x); }, p - 1, mesh, ex);
    double mean = 0.0;
    for (std::size_t k = 0; k < mesh.num_elements(); ++k)
      mean += mesh.geometry[k].det * raw.coeffs(0, k) * std::sqrt(2.0) / 2.0;
    mean /= mesh.area();
    pr.data.f = [fp, mean](int, const Vec2& x) { return fp(x) - mean; };
  } else {
    pr.data.f = [fp](int, const Vec2& x) { return fp(x); };
  }
  pr.f_poly = project_scalar(pr.data.f, p - 1, mesh, ex);
  pr.xi_poly = project_rtn(pr.data.xi, p - 1, mesh, ex);
  return pr;
}

/// (d) u = x(1-x)y(1-y), Dirichlet on ∂Ω.
inline ManufacturedProblem bubble_problem(const Mesh& mesh) {
  ManufacturedProblem pr;
  pr.id = "bubble";
  pr.data.partition = BoundaryPartition::uniform(mesh, BoundaryMarker::Dirichlet);
  pr.data.data_degree = 2;
  pr.data.f = [](int, const Vec2& x) { return 2.0 * (x[1] * (1 - x[1]) + x[0] * (1 - x[0])); };
  pr.u = [](int, const Vec2& x) { return x[0] * (1 - x[0]) * x[1] * (1 - x[1]); };
  pr.grad_u = [](int, const Vec2& x) -> Vec2 {
    return {(1 - 2 * x[0]) * x[1] * (1 - x[1]), x[0] * (1 - x[0]) * (1 - 2 * x[1])};
  };
  pr.energy = std::sqrt(1.0 / 45.0);  // ‖∇u‖² = 2·(1/3)·(1/30)
  return pr;
}

/// f = 1, ξ = 0 (the unit-source lifting datum).
inline ManufacturedProblem unit_source_problem(const Mesh& mesh, BoundaryMarker marker = BoundaryMarker::Dirichlet) {
  ManufacturedProblem pr;
  pr.id = "unit-source";
  pr.data.partition = BoundaryPartition::uniform(mesh, marker);
  pr.data.f = [](int, const Vec2&) { return 1.0; };
  pr.data.data_degree = 0;
  pr.f_poly = project_scalar(pr.data.f, 0, mesh, 2);
  pr.xi_poly = RTNField(0, mesh.num_elements());
  return pr;
}

/**
 * @brief Seeded lifting data fixed across degrees: elementwise-constant f with
 * values in [-1, 1] and ξ = a + b x ∈ RTN_0 (a ∈ [-1,1]², b ∈ [-1,1]).
 */
inline ManufacturedProblem seeded_lift_problem(const Mesh& mesh, std::uint64_t seed,
                                               BoundaryMarker marker = BoundaryMarker::Dirichlet) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  ManufacturedProblem pr;
  pr.id = "seeded-lift";
  pr.data.partition = BoundaryPartition::uniform(mesh, marker);
  pr.data.data_degree = 1;
  PiecewisePoly f(0, mesh.num_elements());
  for (std::size_t k = 0; k < mesh.num_elements(); ++k) f.coeffs(0, k) = unif(rng) / std::sqrt(2.0);
  const Vec2 a(unif(rng), unif(rng));
  const double b = unif(rng);
  pr.data.xi = [a, b](int, const Vec2& x) -> Vec2 { return a + b * x; };
  pr.xi_poly = project_rtn(pr.data.xi, 0, mesh, 2);
  if (marker == BoundaryMarker::Neumann) {
    double mean = 0.0;
    for (std::size_t k = 0; k < mesh.num_elements(); ++k) mean += mesh.geometry[k].area() * f.coeffs(0, k);
    f.coeffs.row(0).array() -= mean / mesh.area();
  }
  pr.data.f = f.sampler(mesh);
  pr.f_poly = f;
  return pr;
}

inline ManufacturedProblem make_problem(const std::string& id, const Mesh& mesh, int p, std::uint64_t seed) {
  if (id == "sin-sin" || id == "a") return sin_sin_problem(mesh);
  if (id == "constant-flux" || id == "b") return constant_flux_problem(mesh);
  if (id == "random-poly" || id == "c") return random_polynomial_problem(mesh, p, seed);
  if (id == "bubble" || id == "d") return bubble_problem(mesh);
  if (id == "unit-source") return unit_source_problem(mesh);
  if (id == "seeded-lift") return seeded_lift_problem(mesh, seed);
  throw std::invalid_argument("unknown problem '" + id + "'");
}

/**
 * @brief Max over test functions v (H1 basis of degree `degree`, vanishing on
 * Γ_D) of |(∇u,∇v) + (ξ,∇v) - (f,v)| / (‖∇v‖ scale), i.e. the weak residual.
 */
inline double consistency_residual(const ManufacturedProblem& pr, const Mesh& mesh, int degree, int exactness = 20) {
  if (!pr.grad_u) throw std::invalid_argument("consistency_residual: exact gradient required");
  const H1Space space(mesh, degree);
  const QuadRule& q = quad_rule(exactness);
  const int n = space.local_size();
  Eigen::VectorXd r = Eigen::VectorXd::Zero(space.num_dofs());
  Eigen::VectorXd scale = Eigen::VectorXd::Zero(space.num_dofs());
  Eigen::VectorXd val(n);
  Eigen::MatrixXd grad(2, n);
  for (std::size_t k = 0; k < mesh.num_elements(); ++k) {
    const ElementGeometry& g = mesh.geometry[k];
    const auto dofs = space.element_dofs(static_cast<int>(k));
    for (std::size_t iq = 0; iq < q.size(); ++iq) {
      space.eval(static_cast<int>(k), q.points[iq], val, grad);
      const Vec2 x = g.map(q.points[iq]);
      const double w = q.weights[iq] * g.det;
      const Vec2 flux = (*pr.grad_u)(static_cast<int>(k), x) + pr.data.xi(static_cast<int>(k), x);
      const double f = pr.data.f(static_cast<int>(k), x);
      for (int i = 0; i < n; ++i) {
        const double a = flux.dot(grad.col(i)), b = f * val[i];
        r[dofs[i]] += w * (a - b);
        scale[dofs[i]] += w * (std::abs(a) + std::abs(b));
      }
    }
  }
  const auto dirichlet = space.dofs_on_faces(faces_with_marker(pr.data.partition, BoundaryMarker::Dirichlet));
  double worst = 0.0;
  for (int i = 0; i < space.num_dofs(); ++i)
    if (!dirichlet[i] && scale[i] > 0.0) worst = std::max(worst, std::abs(r[i]) / scale[i]);
  return worst;
}

// ψ† configurations -----------------------------------------------------------

inline WeightedLiftConfig psi_constant(const Mesh& mesh, double value = 1.0) {
  WeightedLiftConfig c;
  c.weights.assign(mesh.num_vertices(), value);
  return c;
}

inline int nearest_vertex(const Mesh& mesh, const Vec2& x) {
  int best = 0;
  for (std::size_t a = 1; a < mesh.num_vertices(); ++a)
    if ((mesh.vertices[a] - x).norm() < (mesh.vertices[best] - x).norm()) best = static_cast<int>(a);
  return best;
}

inline WeightedLiftConfig psi_hat(const Mesh& mesh, int vertex) {
  WeightedLiftConfig c;
  c.weights.assign(mesh.num_vertices(), 0.0);
  c.weights.at(vertex) = 1.0;
  return c;
}

template <class Fn>
WeightedLiftConfig psi_nodal(const Mesh& mesh, Fn&& fn) {
  WeightedLiftConfig c;
  for (const auto& v : mesh.vertices) c.weights.push_back(fn(v));
  return c;
}

/**
 * @brief Returns f - α 1_{supp ψ†} with α chosen so that (f,ψ†) = (ξ,∇ψ†).
 *
 * The shift is piecewise constant, so f keeps its polynomial degree.
 */
inline PiecewisePoly make_weighted_compatible(const Mesh& mesh, const WeightedLiftConfig& cfg, const PiecewisePoly& f,
                                              const RTNField& xi) {
  const int ex = 2 * std::max(f.degree, xi.degree + 1) + 4;
  const double defect = weighted_compatibility(mesh, cfg, f.sampler(mesh), xi.sampler(mesh), ex).first;
  double mass = 0.0;  // (1, ψ†)
  std::vector<char> support(mesh.num_elements(), 0);
  for (std::size_t k = 0; k < mesh.num_elements(); ++k) {
    double s = 0.0;
    for (int v : mesh.elements[k]) s += cfg.weights[v];
    mass += mesh.geometry[k].det / 6.0 * s;
    for (int v : mesh.elements[k]) support[k] |= cfg.weights[v] != 0.0;
  }
  if (mass == 0.0) throw std::invalid_argument("make_weighted_compatible: (1,psi) = 0");
  const double alpha = defect / mass;
  PiecewisePoly out = f;
  for (std::size_t k = 0; k < mesh.num_elements(); ++k)
    if (support[k]) out.coeffs(0, k) -= alpha / std::sqrt(2.0);
  return out;
}

}  // namespace equiflux
