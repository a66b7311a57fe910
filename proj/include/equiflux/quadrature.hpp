/**
 * @file quadrature.hpp
 * @brief Gauss rules on [0,1] and collapsed (Duffy) product rules on the
 * reference triangle (0,0),(1,0),(0,1).
 */
#pragma once

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace equiflux {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Gauss-Legendre rule on the unit interval.
struct LineRule {
  std::vector<double> points;
  std::vector<double> weights;
  int exactness = 0;
};

/**
 * @brief Quadrature on the reference triangle.
 *
 * Points are stored in reference coordinates (x̂, ŷ) together with their
 * barycentric coordinates; weights sum to the reference area 1/2.
 */
struct QuadRule {
  std::vector<Vec2> points;
  std::vector<Eigen::Vector3d> barycentric;
  std::vector<double> weights;
  int exactness = 0;

  std::size_t size() const { return points.size(); }
};

namespace detail {

inline LineRule make_gauss_legendre(int npts) {
  LineRule rule;
  rule.points.resize(npts);
  rule.weights.resize(npts);
  rule.exactness = 2 * npts - 1;
  for (int i = 0; i < npts; ++i) {
    // Chebyshev initial guess, Newton on P_n over [-1,1]
    double x = std::cos(std::numbers::pi * (i + 0.75) / (npts + 0.5));
    double pn = 0.0, dp = 1.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= npts; ++k) {
        const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      pn = p1;
      dp = npts * (x * p1 - p0) / (x * x - 1.0);
      const double dx = pn / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.points[npts - 1 - i] = 0.5 * (x + 1.0);
    rule.weights[npts - 1 - i] = 0.5 * w;
  }
  return rule;
}

inline QuadRule make_collapsed_rule(int exactness) {
  // ∫_T g = ∫_0^1 ∫_0^1 g((1-t)s, t) (1-t) ds dt; in t the integrand has
  // degree exactness+1.
  const int n = std::max(1, (exactness + 2 + 1) / 2);
  const LineRule line = make_gauss_legendre(n);
  QuadRule rule;
  rule.exactness = 2 * n - 2;
  for (int j = 0; j < n; ++j) {
    const double t = line.points[j];
    for (int i = 0; i < n; ++i) {
      const double s = line.points[i];
      const double x = (1.0 - t) * s;
      const double y = t;
      rule.points.emplace_back(x, y);
      rule.barycentric.emplace_back(1.0 - x - y, x, y);
      rule.weights.push_back(line.weights[i] * line.weights[j] * (1.0 - t));
    }
  }
  return rule;
}

}  // namespace detail

/// Gauss-Legendre rule on [0,1] exact for polynomials of degree `exactness`.
inline const LineRule& line_rule(int exactness) {
  static std::mutex mtx;
  static std::map<int, std::unique_ptr<LineRule>> cache;
  const int n = std::max(1, (std::max(exactness, 0) + 2) / 2);
  std::lock_guard lock(mtx);
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<LineRule>(detail::make_gauss_legendre(n));
  return *slot;
}

/// Triangle rule exact for all polynomials of total degree <= exactness.
inline const QuadRule& quad_rule(int exactness) {
  if (exactness < 0) exactness = 0;
  static std::mutex mtx;
  static std::map<int, std::unique_ptr<QuadRule>> cache;
  std::lock_guard lock(mtx);
  auto& slot = cache[exactness];
  if (!slot) slot = std::make_unique<QuadRule>(detail::make_collapsed_rule(exactness));
  return *slot;
}

}  // namespace equiflux
