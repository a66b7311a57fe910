#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "equiflux/experiment.hpp"

using namespace equiflux;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("equiflux-test-" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path write_config(const fs::path& dir, const nlohmann::json& j) {
  const fs::path p = dir / "config.json";
  std::ofstream(p) << j.dump();
  return p;
}

int cli(const std::string& args) {
  const std::string cmd = std::string(EQUIFLUX_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Config, ParsesAndValidates) {
  const ExperimentConfig c = parse_config(nlohmann::json::parse(R"({
    "kind": "p-sweep", "problem": "c", "mesh": {"square": 3, "perturb": 0.1, "seed": 4},
    "p_min": 2, "p_max": 3, "flux_space": "modified", "target": "projected",
    "psi": {"kind": "hat", "point": [0.2, 0.3], "make_compatible": true},
    "oracle": {"max_levels": 3}, "tolerances": {"constraint": 1e-9}})"));
  EXPECT_EQ(c.kind, ExperimentKind::PSweep);
  EXPECT_EQ(c.square, 3);
  EXPECT_EQ(c.space, FluxSpace::Modified);
  EXPECT_EQ(c.target, TargetKind::Projected);
  EXPECT_EQ(c.psi.point, Vec2(0.2, 0.3));
  EXPECT_TRUE(c.psi.make_compatible);
  EXPECT_EQ(c.oracle.max_levels, 3);
  EXPECT_DOUBLE_EQ(c.constraint_tolerance, 1e-9);
  EXPECT_NO_THROW(c.validate());

  EXPECT_THROW(parse_config(nlohmann::json::parse(R"({"kind": "bogus"})")), ConfigError);
  EXPECT_THROW(parse_config(nlohmann::json::parse(R"({"p": "two"})")), ConfigError);
  EXPECT_THROW(parse_config(nlohmann::json::parse(R"({"flux_space": "other"})")), ConfigError);
  ExperimentConfig bad;
  bad.p = 2;
  bad.pprime = 3;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad.pprime = 1;
  bad.mesh_file = "/nonexistent/mesh";
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(Run, EstimateWritesReportsDeterministically) {
  const fs::path dir = scratch("estimate");
  ExperimentConfig c;
  c.kind = ExperimentKind::Estimate;
  c.problem = "bubble";
  c.square = 3;
  c.p = 2;
  c.pprime = 2;
  c.out = (dir / "a").string();
  const RunResult r = run(c);
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_TRUE(r.report["result"]["bound_holds"].get<bool>());
  c.out = (dir / "b").string();
  run(c);
  for (const char* f : {"report.json", "elements.csv"}) {
    ASSERT_TRUE(fs::exists(dir / "a" / f));
    EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
  }
  const auto rep = nlohmann::json::parse(slurp(dir / "a" / "report.json"));
  EXPECT_EQ(rep["status"], "ok");
  EXPECT_EQ(rep["mesh"]["elements"], 18);
}

TEST(Run, EveryKindProducesOutput) {
  const fs::path dir = scratch("kinds");
  const std::vector<std::pair<ExperimentKind, std::string>> kinds = {
      {ExperimentKind::Solve, "elements.csv"},      {ExperimentKind::Lift, "flux.csv"},
      {ExperimentKind::LiftWeighted, "flux.csv"},   {ExperimentKind::Convergence, "convergence.csv"},
      {ExperimentKind::PSweep, "psweep.csv"}};
  for (const auto& [kind, file] : kinds) {
    ExperimentConfig c;
    c.kind = kind;
    c.problem = kind == ExperimentKind::LiftWeighted || kind == ExperimentKind::Lift ? "seeded-lift" : "sin-sin";
    c.square = 2;
    c.p = 2;
    c.refinements = 2;
    c.p_max = 2;
    c.psi.kind = "affine";
    c.out = (dir / kind_name(kind)).string();
    const RunResult r = run(c);
    EXPECT_EQ(r.exit_code, 0) << kind_name(kind);
    EXPECT_TRUE(fs::exists(dir / kind_name(kind) / file)) << kind_name(kind);
    EXPECT_TRUE(fs::exists(dir / kind_name(kind) / "report.json"));
  }
}

TEST(Run, MeshFileInput) {
  const fs::path dir = scratch("meshfile");
  const auto [mesh, bp0] = structured_square(3, BoundaryMarker::Dirichlet, 0.2, 1);
  const BoundaryPartition bp = mark_boundary(mesh, [](const Vec2& m) { return m[0] < 1e-12; });
  write_mesh(mesh, bp, (dir / "m").string());
  ExperimentConfig c;
  c.kind = ExperimentKind::Estimate;
  c.problem = "random-poly";
  c.boundary = "file";
  c.mesh_file = (dir / "m").string();
  c.p = 2;
  c.pprime = 2;
  c.out = (dir / "out").string();
  const RunResult r = run(c);
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_EQ(r.report["mesh"]["elements"], 18);

  // a relative mesh path inside a config resolves against the config's directory
  write_config(dir, {{"mesh", {{"file", "m"}}}, {"boundary", "file"}});
  const ExperimentConfig loaded = load_config((dir / "config.json").string());
  ASSERT_TRUE(loaded.mesh_file.has_value());
  EXPECT_EQ(fs::path(*loaded.mesh_file), dir / "m");
  EXPECT_NO_THROW(loaded.validate());
}

TEST(Cli, ExitCodes) {
  const fs::path dir = scratch("cli");
  const fs::path ok = write_config(dir, {{"problem", "bubble"}, {"mesh", {{"square", 2}}}, {"p", 1}});
  EXPECT_EQ(cli("estimate --config " + ok.string() + " --out " + (dir / "o").string()), 0);
  EXPECT_TRUE(fs::exists(dir / "o" / "report.json"));
  EXPECT_EQ(cli("estimate --config " + ok.string() + " --p 2 --pprime 2 --square 3 --seed 4 --out " +
                (dir / "o2").string()),
            0);
  EXPECT_EQ(cli(""), 1);                                                    // missing kind
  EXPECT_EQ(cli("estimate"), 1);                                            // missing config
  EXPECT_EQ(cli("frobnicate --config " + ok.string()), 1);                  // unknown kind
  EXPECT_EQ(cli("estimate --config " + (dir / "missing.json").string()), 1);
  EXPECT_EQ(cli("estimate --config " + ok.string() + " --p 0"), 1);
  EXPECT_EQ(cli("estimate --config " + ok.string() + " --mesh " + (dir / "nomesh").string()), 1);
  EXPECT_EQ(cli("estimate --config " + ok.string() + " --mesh a --square 2"), 1);
  std::ofstream(dir / "broken.json") << "{ not json";
  EXPECT_EQ(cli("estimate --config " + (dir / "broken.json").string()), 1);

  // f = 1 with a pure Neumann boundary violates the compatibility condition
  const fs::path incompatible = write_config(
      dir, {{"problem", "unit-source"}, {"boundary", "neumann"}, {"mesh", {{"square", 2}}}, {"p", 1}});
  EXPECT_EQ(cli("lift --config " + incompatible.string() + " --out " + (dir / "o3").string()), 2);
}
