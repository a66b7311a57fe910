#include <gtest/gtest.h>

#include "support/fixtures.hpp"

using namespace equiflux;

namespace {

EstimatorReport run(const Mesh& mesh, const ManufacturedProblem& pr, int p, int pp) {
  const PrimalSolution uh = solve_primal(pr.data, mesh, pp);
  const RTNField sigma = equilibrate(mesh, pr.data, uh, p).flux;
  EstimatorReport rep = estimate(sigma, pr.data, uh);
  if (pr.grad_u) {
    rep.element_error = exact_element_errors(uh, *pr.grad_u, 2 * pp + 12);
    double s = 0.0;
    for (double e : *rep.element_error) s += e * e;
    rep.error = std::sqrt(s);
  }
  return rep;
}

}  // namespace

TEST(Estimator, GuaranteedUpperBoundSinSin) {
  const auto [mesh, bp] = test_support::unstructured_mesh();
  const ManufacturedProblem pr = sin_sin_problem(mesh);
  for (int p = 1; p <= 3; ++p)
    for (int pp = 1; pp <= p; ++pp) {
      const EstimatorReport r = run(mesh, pr, p, pp);
      const GlobalEstimate g = global_estimate(r.elements, r.error);
      EXPECT_TRUE(g.guaranteed) << "p=" << p << " p'=" << pp;
      EXPECT_LT(*r.efficiency_index(), 3.0);
      EXPECT_GE(*r.efficiency_index(), 1.0);
    }
}

// ξ = -∇u makes the total flux vanish: f = 0 and homogeneous Neumann data on any Γ_N
TEST(Estimator, MixedBoundaryBound) {
  const auto [mesh, bp] = test_support::unstructured_mesh();
  ManufacturedProblem pr = sin_sin_problem(mesh);
  pr.data.partition = mark_boundary(mesh, [](const Vec2& m) { return m[0] < 1e-12 || m[1] < 1e-12; });
  pr.data.xi = [grad = *pr.grad_u](int k, const Vec2& x) -> Vec2 { return -grad(k, x); };
  pr.data.f = [](int, const Vec2&) { return 0.0; };
  for (int p = 1; p <= 3; ++p) {
    const EstimatorReport r = run(mesh, pr, p, p);
    EXPECT_TRUE(global_estimate(r.elements, r.error).guaranteed) << "p=" << p;
    EXPECT_GT(*r.error, 0.0);
  }
}

TEST(Estimator, ZeroOscillationForPolynomialData) {
  const auto [mesh, bp] = test_support::unstructured_mesh();
  for (int p = 1; p <= 3; ++p) {
    const ManufacturedProblem pr = random_polynomial_problem(mesh, p, 4);
    const EstimatorReport r = run(mesh, pr, p, p);
    EXPECT_LT(r.oscillation_norm, 1e-10);
    for (const auto& t : r.elements) EXPECT_LT(t.oscillation, 1e-12);
  }
  const ManufacturedProblem sin = sin_sin_problem(mesh);
  EXPECT_GT(run(mesh, sin, 1, 1).oscillation_norm, 1e-4);
}

TEST(Estimator, ExactDiscreteSolution) {
  const auto [mesh, bp] = test_support::unstructured_mesh();
  const ManufacturedProblem pr = constant_flux_problem(mesh);
  const EstimatorReport r = run(mesh, pr, 1, 1);
  EXPECT_LT(r.eta, 1e-11);
  EXPECT_FALSE(r.efficiency_index().has_value());
  const EfficiencyReport e = efficiency_report(mesh, r, *r.element_error);
  EXPECT_EQ(e.exact_elements, static_cast<int>(mesh.num_elements()));
  EXPECT_FALSE(e.global.has_value());
}

TEST(Estimator, LocalEfficiencyRatiosBounded) {
  const auto [mesh, bp] = test_support::unstructured_mesh();
  for (int p = 1; p <= 3; ++p) {
    const EstimatorReport r = run(mesh, bubble_problem(mesh), p, p);
    const EfficiencyReport e = efficiency_report(mesh, r, *r.element_error);
    EXPECT_GT(e.max_local, 0.0);
    EXPECT_LT(e.max_local, 5.0);
    ASSERT_TRUE(e.global.has_value());
    EXPECT_LT(*e.global, 3.0);
  }
}

TEST(Estimator, OscillationVanishesForProjectedData) {
  const auto [mesh, bp] = structured_square(4);
  const Patch patch = vertex_patch(mesh, bp, 12);
  ProblemData d;
  d.partition = bp;
  d.f = [](int, const Vec2&) { return 1.0; };
  d.xi = [](int, const Vec2& x) -> Vec2 { return {x[1], 2.0}; };
  d.data_degree = 1;
  EXPECT_LT(vertex_oscillation(mesh, patch, d, 2), 1e-12);
  d.f = [](int, const Vec2& x) { return std::exp(3 * x[0]); };
  d.data_degree = -1;
  EXPECT_GT(vertex_oscillation(mesh, patch, d, 1), 1e-5);
}
