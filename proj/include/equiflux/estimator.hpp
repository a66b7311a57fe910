/**
 * @file estimator.hpp
 * @brief Guaranteed error estimator, data oscillation, and efficiency ratios.
 *
 *   ‖∇(u - u_h)‖² ≤ Σ_K (‖σ_h + ξ + ∇u_h‖_K + (h_K/π)‖f - Π_hp f‖_K)²
 */
#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

#include "concurrency.hpp"
#include "fields.hpp"
#include "mesh.hpp"
#include "primal.hpp"

namespace equiflux {

namespace detail {

// ‖v - Π_p v‖²_K for a scalar sampler, using the orthonormal reference basis.
inline double projection_defect_sq(const Mesh& mesh, int k, const ScalarSampler& v, int p, int exactness) {
  const QuadRule& q = quad_rule(exactness);
  const ScalarTable& t = scalar_table(p, exactness);
  const ElementGeometry& g = mesh.geometry[k];
  Eigen::VectorXd vals(q.size());
  for (std::size_t iq = 0; iq < q.size(); ++iq) vals[iq] = v(k, g.map(q.points[iq]));
  const Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(q.weights.data(), q.size());
  const Eigen::VectorXd c = t.values.transpose() * w.cwiseProduct(vals);
  const Eigen::VectorXd r = vals - t.values * c;
  return g.det * w.dot(r.cwiseProduct(r));
}

inline double rtn_projection_defect_sq(const Mesh& mesh, int k, const VectorSampler& v, int p, int exactness) {
  const Eigen::VectorXd c = project_rtn_element(v, p, mesh, k, exactness);
  const QuadRule& q = quad_rule(exactness);
  const PhysicalRTN phys = physical_rtn(mesh, k, p, exactness);
  const Eigen::VectorXd px = phys.vx * c, py = phys.vy * c;
  const ElementGeometry& g = mesh.geometry[k];
  double s = 0.0;
  for (std::size_t iq = 0; iq < q.size(); ++iq)
    s += q.weights[iq] * g.det * (v(k, g.map(q.points[iq])) - Vec2(px[iq], py[iq])).squaredNorm();
  return s;
}

}  // namespace detail

struct ElementTerms {
  double flux = 0.0;         // ‖σ_h + ξ + ∇u_h‖_K
  double oscillation = 0.0;  // (h_K/π)‖f - Π_hp f‖_K
};

inline int estimator_exactness(const ProblemData& data, int p, int pprime) {
  return std::max({2 * p + 4, 2 * pprime + 4, data.quadrature_for(p) + 2});
}

inline ElementTerms element_estimator(const RTNField& sigma, const ProblemData& data, const PrimalSolution& uh, int k) {
  const Mesh& mesh = uh.mesh();
  const int p = sigma.degree;
  const int ex = estimator_exactness(data, p, uh.degree());
  const QuadRule& q = quad_rule(ex);
  const ElementGeometry& g = mesh.geometry[k];
  const PhysicalRTN v = physical_rtn(mesh, k, p, ex);
  const Eigen::VectorXd sx = v.vx * sigma.coeffs.col(k), sy = v.vy * sigma.coeffs.col(k);
  double s = 0.0;
  for (std::size_t iq = 0; iq < q.size(); ++iq) {
    const Vec2 x = g.map(q.points[iq]);
    s += q.weights[iq] * g.det * (Vec2(sx[iq], sy[iq]) + data.xi(k, x) + uh.gradient(k, x)).squaredNorm();
  }
  ElementTerms t;
  t.flux = std::sqrt(s);
  t.oscillation = mesh.diameters[k] / std::numbers::pi * std::sqrt(std::max(0.0, detail::projection_defect_sq(mesh, k, data.f, p, ex)));
  return t;
}

struct GlobalEstimate {
  double eta = 0.0;
  bool guaranteed = true;  // eta >= error
  double slack = 0.0;      // eta - error
};

inline double aggregate_estimator(const std::vector<ElementTerms>& terms) {
  double s = 0.0;
  for (const auto& t : terms) s += (t.flux + t.oscillation) * (t.flux + t.oscillation);
  return std::sqrt(s);
}

/// η and the verdict η ≥ error; `error` should already include any oracle margin.
inline GlobalEstimate global_estimate(const std::vector<ElementTerms>& terms, std::optional<double> error = std::nullopt) {
  GlobalEstimate g;
  g.eta = aggregate_estimator(terms);
  if (error) {
    g.slack = g.eta - *error;
    g.guaranteed = g.slack >= 0.0;
  }
  return g;
}

/**
 * @brief η_osc^a: sqrt of Σ_{K∈T^a} (h_K²/p²)‖ψ_a f - Π(ψ_a f)‖² + ‖ξ - Πξ‖² + ‖ψ_a ξ - Π^RTN(ψ_a ξ)‖².
 */
inline double vertex_oscillation(const Mesh& mesh, const Patch& patch, const ProblemData& data, int p) {
  const int ex = std::max(2 * p + 4, data.quadrature_for(p) + 2);
  double s = 0.0;
  for (int k : patch.elements) {
    const int l = patch.local_index(mesh, k);
    const ElementGeometry& g = mesh.geometry[k];
    auto psi = [&g, l](const Vec2& x) {
      const Vec2 xh = g.pullback(x);
      const double lam[3] = {1.0 - xh[0] - xh[1], xh[0], xh[1]};
      return lam[l];
    };
    const ScalarSampler psif = [&](int kk, const Vec2& x) { return psi(x) * data.f(kk, x); };
    const ScalarSampler xi0 = [&](int kk, const Vec2& x) { return data.xi(kk, x)[0]; };
    const ScalarSampler xi1 = [&](int kk, const Vec2& x) { return data.xi(kk, x)[1]; };
    const VectorSampler psixi = [&](int kk, const Vec2& x) -> Vec2 { return psi(x) * data.xi(kk, x); };
    const double h = mesh.diameters[k];
    s += h * h / (p * p) * detail::projection_defect_sq(mesh, k, psif, p, ex);
    s += detail::projection_defect_sq(mesh, k, xi0, p, ex) + detail::projection_defect_sq(mesh, k, xi1, p, ex);
    s += detail::rtn_projection_defect_sq(mesh, k, psixi, p, ex);
  }
  return std::sqrt(std::max(0.0, s));
}

inline std::vector<double> vertex_oscillations(const Mesh& mesh, const ProblemData& data, int p) {
  const auto classes = classify_vertices(mesh, data.partition);
  std::vector<double> out(mesh.num_vertices());
  parallel_for(mesh.num_vertices(), [&](std::size_t a) {
    out[a] = vertex_oscillation(mesh, vertex_patch(mesh, data.partition, classes, static_cast<int>(a)), data, p);
  });
  return out;
}

struct EstimatorReport {
  std::vector<ElementTerms> elements;
  std::vector<double> vertex_oscillation;
  double eta = 0.0;
  double flux_norm = 0.0;  // ‖σ_h + ξ + ∇u_h‖
  double oscillation_norm = 0.0;  // sqrt Σ_a (η_osc^a)²
  std::optional<double> error;
  std::optional<std::vector<double>> element_error;  // ‖∇(u - u_h)‖_K

  std::optional<double> efficiency_index() const {
    if (!error || *error <= 1e-14) return std::nullopt;
    return eta / *error;
  }
};

inline EstimatorReport estimate(const RTNField& sigma, const ProblemData& data, const PrimalSolution& uh) {
  const Mesh& mesh = uh.mesh();
  EstimatorReport rep;
  rep.elements.resize(mesh.num_elements());
  parallel_for(mesh.num_elements(),
               [&](std::size_t k) { rep.elements[k] = element_estimator(sigma, data, uh, static_cast<int>(k)); });
  rep.eta = aggregate_estimator(rep.elements);
  double fl = 0.0;
  for (const auto& t : rep.elements) fl += t.flux * t.flux;
  rep.flux_norm = std::sqrt(fl);
  rep.vertex_oscillation = vertex_oscillations(mesh, data, sigma.degree);
  double os = 0.0;
  for (double o : rep.vertex_oscillation) os += o * o;
  rep.oscillation_norm = std::sqrt(os);
  return rep;
}

struct EfficiencyReport {
  std::vector<std::optional<double>> local;  // nullopt: denominator ≤ 1e-14 ("exact")
  double max_local = 0.0;
  std::optional<double> global;
  int exact_elements = 0;
};

/**
 * @brief Local ratios ‖σ_h+ξ+∇u_h‖_K / Σ_{a∈V_K}(‖∇(u-u_h)‖_{ω_a} + η_osc^a) and
 * the global ratio ‖σ_h+ξ+∇u_h‖ / (‖∇(u-u_h)‖ + sqrt Σ_a (η_osc^a)²).
 */
inline EfficiencyReport efficiency_report(const Mesh& mesh, const EstimatorReport& rep,
                                          const std::vector<double>& element_error) {
  std::vector<double> patch_err(mesh.num_vertices(), 0.0);
  for (std::size_t a = 0; a < mesh.num_vertices(); ++a) {
    double s = 0.0;
    for (int k : mesh.vertex_elements[a]) s += element_error[k] * element_error[k];
    patch_err[a] = std::sqrt(s);
  }
  EfficiencyReport out;
  out.local.resize(mesh.num_elements());
  double total_err = 0.0;
  for (std::size_t k = 0; k < mesh.num_elements(); ++k) {
    total_err += element_error[k] * element_error[k];
    double denom = 0.0;
    for (int a : mesh.elements[k]) denom += patch_err[a] + rep.vertex_oscillation[a];
    if (denom <= 1e-14) {
      ++out.exact_elements;
      continue;
    }
    out.local[k] = rep.elements[k].flux / denom;
    out.max_local = std::max(out.max_local, *out.local[k]);
  }
  const double denom = std::sqrt(total_err) + rep.oscillation_norm;
  if (denom > 1e-14) out.global = rep.flux_norm / denom;
  return out;
}

}  // namespace equiflux
