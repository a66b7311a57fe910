#include <gtest/gtest.h>

#include <numbers>

#include "equiflux/oracle.hpp"
#include "equiflux/primal.hpp"
#include "equiflux/problems.hpp"
#include "support/fixtures.hpp"

using namespace equiflux;

TEST(H1Space, AffineExactnessAndContinuity) {
  const auto [mesh, bp] = test_support::unstructured_mesh();
  for (int p = 1; p <= 5; ++p) {
    const ManufacturedProblem pr = constant_flux_problem(mesh);
    const PrimalSolution uh = solve_primal(pr.data, mesh, p);
    // u = -c·x + const is in every space; gradient must be exact
    EXPECT_LT(energy_error(uh, *pr.grad_u), 1e-10) << "p=" << p;
    // values agree across faces
    for (std::size_t f = 0; f < mesh.num_faces(); f += 5) {
      const Face& face = mesh.faces[f];
      if (face.is_boundary()) continue;
      const Vec2 x = 0.3 * mesh.vertices[face.vertices[0]] + 0.7 * mesh.vertices[face.vertices[1]];
      EXPECT_NEAR(uh.value(face.elements[0], x), uh.value(face.elements[1], x), 1e-11);
    }
  }
}

TEST(Primal, ReproducesPolynomialSolution) {
  const auto [mesh, bp] = test_support::unstructured_mesh();
  const ManufacturedProblem pr = bubble_problem(mesh);
  const PrimalSolution u4 = solve_primal(pr.data, mesh, 4);
  EXPECT_LT(energy_error(u4, *pr.grad_u, 12), 1e-10);
  EXPECT_NEAR(u4.energy_norm(), std::sqrt(1.0 / 45.0), 1e-11);
  const PrimalSolution u1 = solve_primal(pr.data, mesh, 1);
  EXPECT_GT(energy_error(u1, *pr.grad_u, 12), 1e-3);
}

TEST(Primal, FrozenSinSinEnergy) {
  const auto [mesh, bp] = structured_square(16);
  const ManufacturedProblem pr = sin_sin_problem(mesh);
  const PrimalSolution uh = solve_primal(pr.data, mesh, 3);
  EXPECT_NEAR(uh.energy_norm(), std::numbers::pi / std::sqrt(2.0), 1e-5);
  EXPECT_LT(galerkin_residual(uh, pr.data), 1e-11);
}

TEST(Primal, MixedBoundaryGalerkinOrthogonality) {
  const auto [mesh, bp0] = test_support::unstructured_mesh();
  ManufacturedProblem pr = random_polynomial_problem(mesh, 3, 5);
  pr.data.partition = mark_boundary(mesh, [](const Vec2& m) { return m[0] < 1e-12; });
  for (int p = 1; p <= 3; ++p) EXPECT_LT(galerkin_residual(solve_primal(pr.data, mesh, p), pr.data), 1e-11);
}

TEST(Primal, PureNeumannCompatibility) {
  const auto [mesh, bp] = structured_square(4, BoundaryMarker::Neumann);
  ProblemData d;
  d.partition = bp;
  d.f = [](int, const Vec2&) { return 1.0; };
  d.data_degree = 0;
  EXPECT_THROW(solve_primal(d, mesh, 2), CompatibilityError);
  d.f = [](int, const Vec2& x) { return x[0] - 0.5; };
  d.data_degree = 1;
  const PrimalSolution uh = solve_primal(d, mesh, 2);
  EXPECT_LT(galerkin_residual(uh, d), 1e-11);
  // zero-mean normalization
  const QuadRule& q = quad_rule(4);
  double mean = 0.0;
  for (std::size_t k = 0; k < mesh.num_elements(); ++k)
    for (std::size_t i = 0; i < q.size(); ++i)
      mean += q.weights[i] * mesh.geometry[k].det * uh.value(static_cast<int>(k), mesh.geometry[k].map(q.points[i]));
  EXPECT_NEAR(mean, 0.0, 1e-12);
}

TEST(Problems, WeakFormConsistency) {
  const auto [mesh, bp] = structured_square(3);
  EXPECT_LT(consistency_residual(sin_sin_problem(mesh), mesh, 3), 1e-12);
  EXPECT_LT(consistency_residual(constant_flux_problem(mesh), mesh, 3), 1e-12);
  EXPECT_LT(consistency_residual(bubble_problem(mesh), mesh, 3), 1e-12);
}

TEST(Problems, SeededDataIsDeterministic) {
  const auto [mesh, bp] = structured_square(3);
  const auto a = random_polynomial_problem(mesh, 3, 42), b = random_polynomial_problem(mesh, 3, 42),
             c = random_polynomial_problem(mesh, 3, 43);
  EXPECT_EQ(a.f_poly->coeffs, b.f_poly->coeffs);
  EXPECT_EQ(a.xi_poly->coeffs, b.xi_poly->coeffs);
  EXPECT_NE(a.f_poly->coeffs, c.f_poly->coeffs);
  EXPECT_EQ(a.f_poly->degree, 2);
  const auto s = seeded_lift_problem(mesh, 9), t = seeded_lift_problem(mesh, 9);
  EXPECT_EQ(s.f_poly->coeffs, t.f_poly->coeffs);
  EXPECT_EQ(s.xi_poly->degree, 0);
  EXPECT_THROW(make_problem("nope", mesh, 1, 1), std::invalid_argument);
}

TEST(Problems, NeumannVariantsHaveZeroMean) {
  const auto [mesh, bp] = test_support::unstructured_mesh();
  const auto r = random_polynomial_problem(mesh, 3, 1, BoundaryMarker::Neumann);
  EXPECT_LT(neumann_compatibility_defect(mesh, r.data.f, 8), 1e-13);
  const auto s = seeded_lift_problem(mesh, 1, BoundaryMarker::Neumann);
  EXPECT_LT(neumann_compatibility_defect(mesh, s.data.f, 2), 1e-13);
  EXPECT_NO_THROW(solve_primal(r.data, mesh, 2));
}

TEST(Oracle, DualNormOfSinSin) {
  const auto [mesh, bp] = structured_square(2);
  const ManufacturedProblem pr = sin_sin_problem(mesh);
  const OracleValue o = dual_norm_oracle(mesh, pr.data, 2, {.extra_degree = 3, .target_margin = 1e-4});
  EXPECT_TRUE(o.converged);
  EXPECT_NEAR(o.value, *pr.energy, 1e-4 * *pr.energy);
}

TEST(Oracle, ErrorOracleMatchesExactError) {
  const auto [mesh, bp] = structured_square(4, BoundaryMarker::Dirichlet, 0.2, 3);
  const ManufacturedProblem pr = sin_sin_problem(mesh);
  const PrimalSolution uh = solve_primal(pr.data, mesh, 1);
  const ErrorOracle eo = error_oracle(uh, pr.data);
  const auto exact = exact_element_errors(uh, *pr.grad_u, 14);
  const double e = energy_error(uh, *pr.grad_u, 14);
  EXPECT_LE(eo.error, e * (1 + 1e-9));
  EXPECT_GE(eo.upper, e * (1 - 1e-6));
  EXPECT_NEAR(eo.error, e, 1e-3 * e);
  for (std::size_t k = 0; k < exact.size(); ++k) EXPECT_NEAR(eo.element_error[k], exact[k], 2e-2 * exact[k] + 1e-6);
}

TEST(Oracle, TransplantedDataFollowsAncestors) {
  const auto [mesh, bp] = structured_square(2);
  ProblemData d;
  d.partition = bp;
  d.f = [](int k, const Vec2&) { return static_cast<double>(k); };
  const RefinementLevel l2 = refine_level(refine_level(base_level(mesh, bp)));
  const ProblemData t = transplant(d, l2);
  for (std::size_t k = 0; k < l2.mesh.num_elements(); ++k) {
    const Vec2 c = l2.mesh.geometry[k].map(Vec2(1.0 / 3, 1.0 / 3));
    EXPECT_EQ(t.f(static_cast<int>(k), c), l2.ancestor[k]);
    // the ancestor contains the child
    const Vec2 xh = mesh.geometry[l2.ancestor[k]].pullback(c);
    EXPECT_GT(std::min({xh[0], xh[1], 1 - xh[0] - xh[1]}), -1e-12);
  }
}
