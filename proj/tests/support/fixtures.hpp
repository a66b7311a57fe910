// Shared meshes and problem setups.
#pragma once

#include <random>

#include <Eigen/Dense>

#include "equiflux/equiflux.hpp"

namespace equiflux::test_support {

/// 200-element perturbed unit-square mesh with randomized diagonals.
inline std::pair<Mesh, BoundaryPartition> unstructured_mesh(BoundaryMarker marker = BoundaryMarker::Dirichlet) {
  return structured_square(10, marker, 0.3, 20240611);
}

/// All patch problems of one equilibration, kept for inspection.
struct PatchSet {
  std::vector<PatchProblem> problems;
};

inline PatchSet patch_problems(const Mesh& mesh, const ProblemData& data, const PrimalSolution& uh, int p,
                               FluxSpace space = FluxSpace::Standard) {
  PatchSet out;
  const auto classes = classify_vertices(mesh, data.partition);
  const double e = uh.energy_norm();
  for (std::size_t a = 0; a < mesh.num_vertices(); ++a) {
    const Patch patch = vertex_patch(mesh, data.partition, classes, static_cast<int>(a));
    out.problems.push_back(make_patch_problem(mesh, patch, data, uh, p, space, TargetKind::Pointwise, e));
  }
  return out;
}

/// Random well-posed saddle system: SPD M, full-rank B (or rank m-1 with a mean row).
inline SaddleSystem random_saddle(std::mt19937_64& rng, int n, int m, bool with_mean) {
  std::normal_distribution<double> g;
  auto rnd = [&](int r, int c) {
    Eigen::MatrixXd A(r, c);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) A(i, j) = g(rng);
    return A;
  };
  SaddleSystem s;
  const Eigen::MatrixXd A = rnd(n, n);
  s.M = A * A.transpose() + n * Eigen::MatrixXd::Identity(n, n);
  s.B = rnd(m, n);
  s.b = rnd(n, 1);
  if (with_mean) {
    // rows sum to zero against the weights e: eᵀB = 0, c compatible
    const Eigen::VectorXd e = rnd(m, 1).cwiseAbs().array() + 0.5;
    s.B.row(m - 1) = -(e.head(m - 1).transpose() * s.B.topRows(m - 1)) / e[m - 1];
    const Eigen::VectorXd x = rnd(n, 1);
    s.c = s.B * x;
    s.mean_row = e;
  } else {
    s.c = rnd(m, 1);
  }
  return s;
}

}  // namespace equiflux::test_support
