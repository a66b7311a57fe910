// equiflux command-line driver.
//
//   equiflux <kind> --config <path> [--p N] [--pprime N] [--mesh <base>|--square N] [--out DIR] [--seed S]
//
// Exit codes: 0 ok, 1 usage/input error, 2 check failure, 3 numerical failure.

#include <chrono>
#include <iostream>

#include <CLI11.hpp>

#include "equiflux/experiment.hpp"

namespace {

constexpr int kUsage = 1, kCheck = 2, kNumerical = 3;

void warn_components(const equiflux::ExperimentConfig& c) {
  using namespace equiflux;
  if (!c.mesh_file) return;
  const auto [mesh, bp] = read_mesh(*c.mesh_file);
  for (BoundaryMarker m : {BoundaryMarker::Dirichlet, BoundaryMarker::Neumann}) {
    const int n = marker_components(mesh, bp, m);
    if (n > 1)
      std::cerr << "warning: " << (m == BoundaryMarker::Dirichlet ? "Dirichlet" : "Neumann") << " boundary has " << n
                << " connected components\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Equilibrated flux reconstruction and a posteriori estimation"};
  std::string kind, config, mesh, out;
  std::optional<int> p, pprime, square;
  std::optional<std::uint64_t> seed;
  app.add_option("kind", kind, "solve | estimate | lift | lift-weighted | convergence | p-sweep")
      ->required()
      ->check(CLI::IsMember({"solve", "estimate", "lift", "lift-weighted", "convergence", "p-sweep"}));
  app.add_option("--config", config, "experiment configuration (JSON)")->required();
  app.add_option("--p", p, "flux degree");
  app.add_option("--pprime", pprime, "primal degree");
  auto* mesh_opt = app.add_option("--mesh", mesh, "mesh basename (<base>.node/.ele/.bnd)");
  app.add_option("--square", square, "structured unit-square mesh with N x N cells")->excludes(mesh_opt);
  app.add_option("--out", out, "output directory");
  app.add_option("--seed", seed, "random seed for generated data");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    equiflux::ExperimentConfig c = equiflux::load_config(config);
    c.kind = equiflux::parse_kind(kind);
    if (p) {
      c.p = *p;
      if (!pprime && c.pprime > c.p) c.pprime = c.p;
    }
    if (pprime) c.pprime = *pprime;
    if (!mesh.empty()) c.mesh_file = mesh;
    if (square) {
      c.mesh_file.reset();
      c.square = *square;
    }
    if (!out.empty()) c.out = out;
    if (seed) c.seed = *seed;
    c.validate();
    warn_components(c);

    const auto t0 = std::chrono::steady_clock::now();
    const equiflux::RunResult r = equiflux::run(c);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cerr << kind << ": " << r.report.value("status", "") << " (" << secs << " s, " << equiflux::worker_count()
              << " workers), output in " << c.out << '\n';
    for (const auto& f : r.failures) std::cerr << "check failed: " << f << '\n';
    return r.exit_code;
  } catch (const equiflux::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const equiflux::MeshError& e) {
    std::cerr << "mesh error: " << e.what() << '\n';
    return kUsage;
  } catch (const equiflux::CompatibilityError& e) {
    std::cerr << "compatibility check failed: " << e.what() << '\n';
    return kCheck;
  } catch (const equiflux::SolverError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  }
}
