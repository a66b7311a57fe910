// Solve -Δu = f with u = sin(πx)sin(πy), reconstruct an equilibrated flux,
// and print the guaranteed bound next to the true error for a few degrees.

#include <cstdio>

#include "equiflux/equiflux.hpp"

using namespace equiflux;

int main() {
  const auto [mesh, bp] = structured_square(8, BoundaryMarker::Dirichlet, 0.25, 1);
  const ManufacturedProblem pr = sin_sin_problem(mesh);
  std::printf("%2s %12s %12s %8s\n", "p", "eta", "error", "I_eff");
  for (int p = 1; p <= 4; ++p) {
    const PrimalSolution uh = solve_primal(pr.data, mesh, p);
    const RTNField sigma = equilibrate(mesh, pr.data, uh, p).flux;
    const EstimatorReport est = estimate(sigma, pr.data, uh);
    const double err = energy_error(uh, *pr.grad_u, 2 * p + 10);
    std::printf("%2d %12.5e %12.5e %8.4f\n", p, est.eta, err, est.eta / err);

    // the element with the largest indicator is where refinement would start
    std::size_t worst = 0;
    for (std::size_t k = 1; k < est.elements.size(); ++k)
      if (est.elements[k].flux > est.elements[worst].flux) worst = k;
    const Vec2 c = mesh.geometry[worst].map(Vec2(1.0 / 3, 1.0 / 3));
    std::printf("   largest indicator on element %zu near (%.2f, %.2f)\n", worst, c[0], c[1]);
  }
}
