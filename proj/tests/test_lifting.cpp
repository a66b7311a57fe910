#include <gtest/gtest.h>

#include <numbers>

#include "support/fixtures.hpp"

using namespace equiflux;

namespace {

const std::pair<Mesh, BoundaryPartition>& small_mesh() {
  static const auto m = structured_square(4, BoundaryMarker::Dirichlet, 0.2, 8);
  return m;
}

}  // namespace

TEST(Lift, UnitSourceConstraintsAndRatio) {
  const auto& [mesh, bp] = small_mesh();
  const ManufacturedProblem pr = unit_source_problem(mesh);
  for (int p = 1; p <= 3; ++p) {
    LiftResult r = lift(mesh, *pr.f_poly, *pr.xi_poly, bp, p);
    EXPECT_TRUE(r.constraints.passes(1e-10));
    ProblemData od = pr.data;
    r.oracle = dual_norm_oracle(mesh, od, p).value;
    const StabilityRatio sr = stability_ratio(r);
    ASSERT_TRUE(sr.raw.has_value());
    // the minimal-energy lifting cannot beat the dual norm by more than the oracle's own error
    EXPECT_GT(*sr.raw, 0.99);
    EXPECT_LT(*sr.raw, 2.0);
  }
}

TEST(Lift, NeumannCompatibility) {
  const auto [mesh, bp] = structured_square(4, BoundaryMarker::Neumann);
  const ManufacturedProblem pr = unit_source_problem(mesh, BoundaryMarker::Neumann);
  EXPECT_THROW(lift(mesh, *pr.f_poly, *pr.xi_poly, bp, 2), CompatibilityError);
  const ManufacturedProblem ok = seeded_lift_problem(mesh, 2, BoundaryMarker::Neumann);
  const LiftResult r = lift(mesh, *ok.f_poly, *ok.xi_poly, bp, 2);
  EXPECT_TRUE(r.constraints.passes(1e-10));
}

TEST(Lift, ValidatesDegrees) {
  const auto& [mesh, bp] = small_mesh();
  const ManufacturedProblem pr = random_polynomial_problem(mesh, 3, 1);
  EXPECT_THROW(lift(mesh, *pr.f_poly, *pr.xi_poly, bp, 2), std::invalid_argument);
  EXPECT_THROW(lift(mesh, *pr.f_poly, *pr.xi_poly, bp, 3, {.pprime = 4}), std::invalid_argument);
  EXPECT_NO_THROW(lift(mesh, *pr.f_poly, *pr.xi_poly, bp, 3, {.pprime = 2}));
}

TEST(Lift, ZeroDataGivesZeroFlux) {
  const auto& [mesh, bp] = small_mesh();
  LiftResult r = lift(mesh, PiecewisePoly(0, mesh.num_elements()), RTNField(0, mesh.num_elements()), bp, 2);
  EXPECT_LT(r.flux.coeffs.cwiseAbs().maxCoeff(), 1e-14);
  r.oracle = 0.0;
  EXPECT_TRUE(stability_ratio(r).exact);
}

TEST(WeightedLift, StabilityConstant) {
  const auto& [mesh, bp] = small_mesh();
  const WeightedLiftConfig one = psi_constant(mesh);
  EXPECT_DOUBLE_EQ(one.stability_constant(mesh), 1.0);
  EXPECT_FALSE(one.pure_dagger_neumann(mesh));
  EXPECT_TRUE(one.dagger_faces(mesh).empty());
  const WeightedLiftConfig hat = psi_hat(mesh, nearest_vertex(mesh, Vec2(0.5, 0.5)));
  EXPECT_TRUE(hat.pure_dagger_neumann(mesh));
  EXPECT_NEAR(hat.poincare_constant(mesh), 1.0 / std::numbers::pi, 1e-15);
  EXPECT_NEAR(hat.stability_constant(mesh),
              1.0 + mesh.domain_diameter() / std::numbers::pi * hat.gradient_sup_norm(mesh), 1e-12);
  WeightedLiftConfig nonconvex = hat;
  nonconvex.convex_domain = false;
  EXPECT_DOUBLE_EQ(nonconvex.poincare_constant(mesh), 1.0);
  nonconvex.poincare = 0.25;
  EXPECT_DOUBLE_EQ(nonconvex.poincare_constant(mesh), 0.25);
}

class WeightedLiftDegree : public ::testing::TestWithParam<int> {};

TEST_P(WeightedLiftDegree, ConstraintsForEachWeight) {
  const int p = GetParam();
  const auto& [mesh, bp] = small_mesh();
  const ManufacturedProblem pr = seeded_lift_problem(mesh, 21);
  const std::vector<WeightedLiftConfig> cfgs = {
      psi_constant(mesh), psi_hat(mesh, nearest_vertex(mesh, Vec2(0.5, 0.5))),
      psi_nodal(mesh, [](const Vec2& x) { return x[0]; }), psi_nodal(mesh, [](const Vec2& x) { return 1 + x[0] - x[1]; })};
  for (const auto& c : cfgs) {
    const PiecewisePoly f = c.pure_dagger_neumann(mesh) ? make_weighted_compatible(mesh, c, *pr.f_poly, *pr.xi_poly)
                                                         : *pr.f_poly;
    const LiftResult r = lift_weighted(mesh, c, f, *pr.xi_poly, p);
    EXPECT_TRUE(r.constraints.passes(1e-10))
        << "div " << r.constraints.max_divergence_residual << " jump " << r.constraints.max_normal_jump << " trace "
        << r.constraints.max_neumann_trace;
    EXPECT_GT(r.objective, 0.0);
  }
}

INSTANTIATE_TEST_SUITE_P(Degrees, WeightedLiftDegree, ::testing::Values(1, 2, 3));

TEST(WeightedLift, CompatibilityTriggersExactlyWhenViolated) {
  const auto& [mesh, bp] = small_mesh();
  const WeightedLiftConfig hat = psi_hat(mesh, nearest_vertex(mesh, Vec2(0.5, 0.5)));
  const ManufacturedProblem pr = seeded_lift_problem(mesh, 5);
  EXPECT_THROW(lift_weighted(mesh, hat, *pr.f_poly, *pr.xi_poly, 2), CompatibilityError);
  const PiecewisePoly f = make_weighted_compatible(mesh, hat, *pr.f_poly, *pr.xi_poly);
  const auto d = weighted_compatibility(mesh, hat, f.sampler(mesh), pr.xi_poly->sampler(mesh), 4);
  EXPECT_LT(std::abs(d.first), 1e-14 * (1 + d.second));
  EXPECT_NO_THROW(lift_weighted(mesh, hat, f, *pr.xi_poly, 2));
  // ψ ≡ 1 has no pure Neumann part, so the same data are accepted
  EXPECT_NO_THROW(lift_weighted(mesh, psi_constant(mesh), *pr.f_poly, *pr.xi_poly, 2));
  WeightedLiftConfig wrong = hat;
  wrong.weights.pop_back();
  EXPECT_THROW(lift_weighted(mesh, wrong, f, *pr.xi_poly, 2), std::invalid_argument);
}

TEST(WeightedLift, ConstantWeightMatchesDivergenceConstraints) {
  const auto& [mesh, bp] = small_mesh();
  const ManufacturedProblem pr = seeded_lift_problem(mesh, 8);
  const LiftResult weighted = lift_weighted(mesh, psi_constant(mesh), *pr.f_poly, *pr.xi_poly, 2);
  const LiftResult plain = lift(mesh, *pr.f_poly, *pr.xi_poly, bp, 2);
  const PiecewisePoly dw = divergence(weighted.flux, mesh), dp = divergence(plain.flux, mesh);
  EXPECT_LT((dw.coeffs - dp.coeffs).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_NEAR(weighted.correction_norm, 0.0, 1e-14);
}
