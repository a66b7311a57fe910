// Acceptance suite: one PASS/FAIL line per criterion.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "support/fixtures.hpp"
#include "support/kkt_oracle.hpp"

using namespace equiflux;
using namespace equiflux::test_support;

namespace {

struct Verdict {
  bool pass = true;
  std::ostringstream detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

int failures = 0;

void report(int id, const std::string& title, const std::function<void(Verdict&)>& body) {
  Verdict v;
  try {
    body(v);
  } catch (const std::exception& e) {
    v.pass = false;
    v.detail << " [exception: " << e.what() << "]";
  }
  if (!v.pass) ++failures;
  std::cout << (v.pass ? "PASS" : "FAIL") << " criterion " << id << ": " << title << " --" << v.detail.str()
            << std::endl;
}

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

double spread(const std::vector<double>& v) {
  return *std::max_element(v.begin(), v.end()) / *std::min_element(v.begin(), v.end());
}

// interior vertex nearest the origin whose patch has a face on the boundary
int boundary_touching_vertex(const Mesh& mesh, const BoundaryPartition& bp) {
  const auto classes = classify_vertices(mesh, BoundaryPartition::uniform(mesh, BoundaryMarker::Dirichlet));
  int best = -1;
  for (std::size_t a = 0; a < mesh.num_vertices(); ++a) {
    if (classes[a] != VertexClass::Interior) continue;
    const Patch patch = vertex_patch(mesh, bp, static_cast<int>(a));
    const bool touches = std::any_of(patch.gamma_faces.begin(), patch.gamma_faces.end(),
                                     [&](int f) { return mesh.faces[f].is_boundary(); });
    if (touches && (best < 0 || mesh.vertices[a].norm() < mesh.vertices[best].norm())) best = static_cast<int>(a);
  }
  return best;
}

}  // namespace

int main() {
  const auto [mesh, bp] = unstructured_mesh();
  const std::vector<std::string> c1_problems = {"a", "b", "c"};
  constexpr std::uint64_t seed = 17;

  report(1, "equilibration exactness", [&](Verdict& v) {
    double div = 0.0, jump = 0.0, trace = 0.0;
    for (const auto& id : c1_problems)
      for (int p = 1; p <= 3; ++p) {
        const ManufacturedProblem pr = make_problem(id, mesh, p, seed);
        const PrimalSolution uh = solve_primal(pr.data, mesh, p);
        const RTNField sigma = equilibrate(mesh, pr.data, uh, p).flux;
        const EquilibrationReport r = verify_equilibration(sigma, mesh, pr.data);
        div = std::max(div, r.max_divergence_residual / (1.0 + r.data_norm));
        jump = std::max(jump, r.max_normal_jump);
        trace = std::max(trace, r.max_neumann_trace);
      }
    v.detail << " " << mesh.num_elements() << " elements, p=1..3, max div " << sci(div) << ", jump " << sci(jump)
             << ", Neumann trace " << sci(trace);
    v.require(mesh.num_elements() == 200, "200 elements");
    v.require(div <= 1e-10 && jump <= 1e-10 && trace <= 1e-10, "residuals <= 1e-10");
  });

  report(2, "guaranteed upper bound", [&](Verdict& v) {
    const auto [m2, bp2] = structured_square(4, BoundaryMarker::Dirichlet, 0.3, 5);
    double min_slack = 1e300;
    for (const std::string id : {"a", "c", "d"})
      for (int p = 1; p <= 3; ++p) {
        const ManufacturedProblem pr = make_problem(id, m2, p, seed);
        const PrimalSolution uh = solve_primal(pr.data, m2, p);
        const RTNField sigma = equilibrate(m2, pr.data, uh, p).flux;
        const EstimatorReport est = estimate(sigma, pr.data, uh);
        double err_upper;
        if (pr.grad_u) {
          err_upper = energy_error(uh, *pr.grad_u, 2 * p + 12);
        } else {
          const ErrorOracle eo = error_oracle(uh, pr.data);
          v.require(eo.reference.margin <= 1e-3, id + " oracle margin <= 0.1%");
          // zero-oscillation case: slack must survive the full 0.1% oracle margin
          err_upper = std::max(eo.upper, eo.error * 1.001);
          v.require(est.oscillation_norm <= 1e-10 * (1.0 + est.eta), "problem c has zero oscillation");
        }
        const double slack = est.eta - err_upper;
        min_slack = std::min(min_slack, slack / err_upper);
        v.require(slack >= 0.0, id + " p=" + std::to_string(p) + " error <= eta");
      }
    v.detail << " problems a,c,d, p=p'=1..3, min relative slack " << sci(min_slack);
  });

  report(3, "p-robust efficiency", [&](Verdict& v) {
    const auto [m3, bp3] = structured_square(8);
    std::vector<double> ieff;
    for (int p = 1; p <= 5; ++p) {
      const ManufacturedProblem pr = random_polynomial_problem(m3, p, seed);
      const PrimalSolution uh = solve_primal(pr.data, m3, p);
      const RTNField sigma = equilibrate(m3, pr.data, uh, p).flux;
      const EstimatorReport est = estimate(sigma, pr.data, uh);
      const ErrorOracle eo = error_oracle(uh, pr.data);
      ieff.push_back(est.eta / eo.error);
      v.detail << " I(" << p << ")=" << std::setprecision(4) << ieff.back();
    }
    v.require(m3.num_elements() == 128, "128 elements");
    v.require(spread(ieff) <= 2.0, "max/min <= 2");
    v.require(*std::max_element(ieff.begin(), ieff.end()) <= 10.0, "max <= 10");
  });

  report(4, "divergence lifting stability", [&](Verdict& v) {
    double resid = 0.0, worst = 0.0, var = 0.0;
    for (const std::string id : {"unit-source", "seeded-lift"}) {
      const ManufacturedProblem pr = make_problem(id, mesh, 1, seed);
      std::vector<double> ratios;
      for (int p = 1; p <= 5; ++p) {
        LiftResult r = lift(mesh, *pr.f_poly, *pr.xi_poly, pr.data.partition, p);
        ProblemData od;
        od.f = pr.f_poly->sampler(mesh);
        od.xi = pr.xi_poly->sampler(mesh);
        od.partition = pr.data.partition;
        od.data_degree = 1;
        r.oracle = dual_norm_oracle(mesh, od, p).value;
        const auto sr = stability_ratio(r);
        v.require(sr.raw.has_value() && std::isfinite(*sr.raw), id + " finite ratio");
        ratios.push_back(sr.raw.value_or(1e300));
        const auto& c = r.constraints;
        resid = std::max({resid, c.max_divergence_residual, c.max_normal_jump, c.max_neumann_trace});
      }
      worst = std::max(worst, *std::max_element(ratios.begin(), ratios.end()));
      var = std::max(var, spread(ratios) - 1.0);
      v.detail << " " << id << " ratios " << std::setprecision(4) << ratios.front() << ".." << ratios.back() << ";";
    }
    v.detail << " residual " << sci(resid) << ", max ratio " << worst << ", variation " << var;
    v.require(resid <= 1e-10, "residuals <= 1e-10");
    v.require(worst <= 10.0, "ratio <= 10");
    v.require(var <= 0.5, "variation <= 50%");
  });

  report(5, "weighted lifting", [&](Verdict& v) {
    const ManufacturedProblem pr = seeded_lift_problem(mesh, seed);
    const int touch = boundary_touching_vertex(mesh, bp);
    v.require(touch >= 0, "boundary-touching interior vertex exists");
    struct Case {
      std::string name;
      WeightedLiftConfig cfg;
    };
    const std::vector<Case> cases = {{"one", psi_constant(mesh)},
                                     {"interior-hat", psi_hat(mesh, nearest_vertex(mesh, Vec2(0.5, 0.5)))},
                                     {"touching-hat", psi_hat(mesh, touch)}};
    double resid = 0.0, worst = 0.0, var = 0.0;
    int triggers_ok = 0, trigger_cases = 0;
    for (const auto& c : cases) {
      const bool pure = c.cfg.pure_dagger_neumann(mesh);
      v.require(pure == (c.name != "one"), c.name + " boundary classification");
      // the check must trigger on incompatible data and stay silent otherwise
      const auto defect = weighted_compatibility(mesh, c.cfg, pr.f_poly->sampler(mesh), pr.xi_poly->sampler(mesh), 6);
      const bool incompatible = std::abs(defect.first) > 1e-9 * (1.0 + defect.second);
      bool threw = false;
      try {
        lift_weighted(mesh, c.cfg, *pr.f_poly, *pr.xi_poly, 1);
      } catch (const CompatibilityError&) {
        threw = true;
      }
      ++trigger_cases;
      if (threw == (pure && incompatible)) ++triggers_ok;
      const PiecewisePoly f = pure ? make_weighted_compatible(mesh, c.cfg, *pr.f_poly, *pr.xi_poly) : *pr.f_poly;
      std::vector<double> ratios;
      for (int p = 1; p <= 4; ++p) {
        LiftResult r = lift_weighted(mesh, c.cfg, f, *pr.xi_poly, p);
        ProblemData od;
        od.f = f.sampler(mesh);
        od.xi = pr.xi_poly->sampler(mesh);
        od.partition = BoundaryPartition::uniform(mesh, BoundaryMarker::Dirichlet);
        od.data_degree = 1;
        r.oracle = dual_norm_oracle(mesh, od, p).value;
        const auto sr = stability_ratio(r);
        v.require(sr.normalized.has_value(), c.name + " normalized ratio defined");
        ratios.push_back(sr.normalized.value_or(1e300));
        const auto& k = r.constraints;
        resid = std::max({resid, k.max_divergence_residual, k.max_normal_jump, k.max_neumann_trace});
      }
      worst = std::max(worst, *std::max_element(ratios.begin(), ratios.end()));
      var = std::max(var, spread(ratios) - 1.0);
      v.detail << " " << c.name << " " << std::setprecision(4) << ratios.front() << ".." << ratios.back() << ";";
    }
    v.detail << " residual " << sci(resid) << ", compatibility checks " << triggers_ok << "/" << trigger_cases
             << ", max normalized " << worst << ", variation " << var;
    v.require(resid <= 1e-10, "residuals <= 1e-10");
    v.require(triggers_ok == trigger_cases, "compatibility check triggers exactly on incompatible data");
    v.require(worst <= 10.0, "normalized ratio <= 10");
    v.require(var <= 0.5, "variation <= 50%");
  });

  report(6, "saddle solver vs nullspace oracle", [&](Verdict& v) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> size(4, 40);
    double worst = 0.0;
    int systems = 0;
    for (int t = 0; t < 30; ++t) {
      const int n = size(rng) + 5;
      const int m = std::max(2, n / 3);
      const SaddleSystem s = random_saddle(rng, n, m, t % 2 == 1);
      const SaddleSolution a = solve_saddle(s), b = kkt_oracle(s);
      worst = std::max(worst, relative_difference(stacked(a), stacked(b)));
      ++systems;
    }
    const int random_systems = systems;
    for (const auto& id : c1_problems)
      for (int p = 1; p <= 3; ++p) {
        const ManufacturedProblem pr = make_problem(id, mesh, p, seed);
        const PrimalSolution uh = solve_primal(pr.data, mesh, p);
        for (const PatchProblem& prob : patch_problems(mesh, pr.data, uh, p).problems) {
          const SaddleSystem s = patch_system(mesh, prob, make_patch_space(mesh, prob.patch, prob.space, p));
          const SaddleSolution a = solve_saddle(s), b = kkt_oracle(s);
          worst = std::max(worst, relative_difference(stacked(a), stacked(b)));
          ++systems;
        }
      }
    v.detail << " " << random_systems << " random + " << systems - random_systems << " patch systems, max rel diff "
             << sci(worst);
    v.require(random_systems >= 20, ">= 20 random systems");
    v.require(worst <= 1e-9, "agreement to 1e-9");
  });

  report(7, "primal convergence", [&](Verdict& v) {
    constexpr double exact = std::numbers::pi / std::numbers::sqrt2;
    for (int pp = 1; pp <= 2; ++pp) {
      auto [m, b] = structured_square(4);
      double prev = 0.0, h_prev = 0.0, norm = 0.0;
      v.detail << " p'=" << pp << " rates";
      for (int level = 0; level <= 3; ++level) {
        if (level > 0) {
          RefinedMesh r = refine_uniform(m, b);
          m = std::move(r.mesh);
          b = std::move(r.partition);
        }
        const ManufacturedProblem pr = sin_sin_problem(m);
        const PrimalSolution uh = solve_primal(pr.data, m, pp);
        const double err = energy_error(uh, *pr.grad_u, 2 * pp + 12);
        const double h = *std::max_element(m.diameters.begin(), m.diameters.end());
        if (level > 0) {
          const double rate = std::log(prev / err) / std::log(h_prev / h);
          v.detail << " " << std::setprecision(3) << rate;
          v.require(std::abs(rate - pp) <= 0.15, "rate within 0.15 of p'");
        }
        prev = err;
        h_prev = h;
        norm = uh.energy_norm();
      }
      const double rel = std::abs(norm - exact) / exact;
      v.detail << ", |grad u_h| rel dev " << sci(rel) << ";";
      v.require(rel <= 0.005, "energy norm within 0.5%");
    }
  });

  report(8, "patch minimality", [&](Verdict& v) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    constexpr int p = 2;
    double worst = -1e300, feas = 0.0;
    int probes = 0;
    for (const auto& id : c1_problems) {
      const ManufacturedProblem pr = make_problem(id, mesh, p, seed);
      const PrimalSolution uh = solve_primal(pr.data, mesh, p);
      for (const PatchProblem& prob : patch_problems(mesh, pr.data, uh, p).problems) {
        const PatchSpace ps = make_patch_space(mesh, prob.patch, prob.space, p);
        const SaddleSystem s = patch_system(mesh, prob, ps);
        const PatchFlux opt = patch_solve(mesh, prob);
        const Eigen::MatrixXd Z = nullspace(s.B).basis;
        const double xnorm = 1.0 + opt.algebra.x.norm();
        for (int t = 0; t < 50; ++t) {
          Eigen::VectorXd z(Z.cols());
          for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = g(rng);
          const double scale = std::pow(10.0, -(t % 4)) * xnorm / std::max(1e-300, z.norm());
          const Eigen::VectorXd x = opt.algebra.x + scale * (Z * z);
          feas = std::max(feas, (s.B * x - s.c).norm() / (1.0 + s.c.norm()));
          Eigen::MatrixXd coeffs(rtn_dim(p), ps.elements.size());
          for (std::size_t j = 0; j < ps.elements.size(); ++j) coeffs.col(j) = ps.local(j, x);
          const double obj = flux_target_norm(mesh, opt.elements, coeffs, p, prob.tau, prob.tau_exactness);
          worst = std::max(worst, opt.objective - obj);
          ++probes;
        }
      }
    }
    v.detail << " " << probes << " probes, max objective decrease " << sci(worst) << ", feasibility " << sci(feas);
    v.require(worst <= 1e-9, "no feasible perturbation improves the objective");
    v.require(feas <= 1e-10, "perturbations are feasible");
  });

  std::cout << (failures == 0 ? "ALL PASS" : std::to_string(failures) + " FAILED") << std::endl;
  return failures == 0 ? 0 : 1;
}
