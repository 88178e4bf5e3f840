#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <json.hpp>
#include <sys/wait.h>

#include "magshift/config_io.hpp"
#include "magshift/plot.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CliRun {
  int code = -1;
  std::string out;
};

CliRun run(const std::string &args) {
  const std::string cmd = std::string(MAGSHIFT_CLI) + " " + args + " 2>/dev/null";
  CliRun r;
  FILE *pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string cfg(const std::string &name) { return "--config " + oracle::config_path(name); }

std::string slurp(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string &name) {
  const fs::path p = fs::temp_directory_path() / ("magshift_cli_" + name);
  fs::remove_all(p);
  return p;
}

// Everything after the first '{' is the JSON document.
json json_of(const CliRun &r) { return json::parse(r.out.substr(r.out.find('{'))); }

}  // namespace

TEST(Cli, AnalyzeWorkedExample) {
  const CliRun r = run("analyze " + cfg("example_bump.json"));
  ASSERT_EQ(r.code, 0);
  const json j = json_of(r);
  const json &b = j["bumps"][0];
  EXPECT_NEAR(b["R_plus"].get<double>(), 0.8873, 1e-4);
  EXPECT_NEAR(b["R_minus"].get<double>(), 0.1127, 1e-4);
  EXPECT_NEAR(b["I_plus"].get<double>(), -0.946, 1e-3);
  EXPECT_DOUBLE_EQ(b["E_circ"].get<double>(), 3.125);
}

TEST(Cli, ValidationFailuresExitWithTwo) {
  EXPECT_EQ(run("analyze --config /nonexistent.json").code, 2);
  EXPECT_EQ(run("analyze " + cfg("example_bump.json") + " --energy 4").code, 2);
  EXPECT_EQ(run("analyze " + cfg("example_bump.json") + " --energy -1").code, 2);
  EXPECT_EQ(run("shoot " + cfg("reference_pair.json") + " --word 1,3").code, 2);
  EXPECT_EQ(run("shoot " + cfg("reference_triangle_shrunk.json") + " --word 1,2").code, 2);
  EXPECT_EQ(run("no-such-command").code, 2);

  const fs::path dir = scratch("overlap");
  fs::create_directories(dir);
  std::ofstream(dir / "overlap.json")
      << R"({"bumps":[{"center":[0,0],"profile":{"type":"piecewise_linear","nodes":[[0,1],[1,0]]}},
                      {"center":[1.5,0],"profile":{"type":"piecewise_linear","nodes":[[0,1],[1,0]]}}]})";
  EXPECT_EQ(run("analyze --config " + (dir / "overlap.json").string()).code, 2);
}

TEST(Cli, NumericalFailureExitsWithThree) {
  // Three hits in one passage of the slowly winding bump are out of reach.
  EXPECT_EQ(run("shoot " + cfg("example_pair.json") + " --word 1,1,1").code, 3);
}

TEST(Cli, CheckGpReportsViolationsAsData) {
  const CliRun ok = run("check-gp " + cfg("reference_triangle.json"));
  ASSERT_EQ(ok.code, 0);
  EXPECT_TRUE(json_of(ok)["holds"].get<bool>());
  EXPECT_EQ(json_of(ok)["anchors"].size(), 3u);
  const CliRun bad = run("check-gp " + cfg("reference_triangle_shrunk.json"));
  ASSERT_EQ(bad.code, 0);
  EXPECT_FALSE(json_of(bad)["holds"].get<bool>());
  EXPECT_FALSE(json_of(bad)["violations"].empty());
}

TEST(Cli, ShootTrajectoryVisitsDiscsInOrder) {
  const fs::path dir = scratch("shoot");
  const CliRun r = run("shoot " + cfg("reference_triangle.json") +
                    " --word 1,2,3,3,2 --trajectory --out " + dir.string());
  ASSERT_EQ(r.code, 0);
  EXPECT_TRUE(json_of(r)["verified"].get<bool>());
  for (const char *f : {"shoot.json", "shoot_trajectory.csv", "shoot_trajectory.svg"}) {
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  }
  std::ifstream in(dir / "shoot_trajectory.csv");
  std::string line, crossings;
  while (std::getline(in, line)) {
    const std::string ev = line.substr(line.rfind(',') + 1);
    if (ev.rfind("cross_section:", 0) == 0) crossings += ev.substr(14, 1);
  }
  EXPECT_EQ(crossings.substr(0, 5), "12332");
}

TEST(Cli, OutputsAreDeterministic) {
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  for (const fs::path &d : {a, b}) {
    ASSERT_EQ(run("shoot " + cfg("reference_pair.json") + " --word 1,2,2 --trajectory --out " +
                  d.string())
                  .code,
              0);
    ASSERT_EQ(run("section " + cfg("reference_pair.json") + " --samples 6 --out " + d.string()).code,
              0);
    ASSERT_EQ(run("check-gp " + cfg("reference_triangle.json") + " --out " + d.string()).code, 0);
  }
  std::size_t compared = 0;
  for (const auto &entry : fs::directory_iterator(a)) {
    const fs::path other = b / entry.path().filename();
    ASSERT_TRUE(fs::exists(other)) << other;
    EXPECT_EQ(slurp(entry.path()), slurp(other)) << entry.path().filename();
    ++compared;
  }
  EXPECT_GE(compared, 6u);
}

TEST(Cli, SectionWritesCrossingTable) {
  const fs::path dir = scratch("section");
  ASSERT_EQ(run("section " + cfg("reference_bump.json") + " --samples 8 --out " + dir.string()).code,
            0);
  std::ifstream in(dir / "section.csv");
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "i,k,lambda,direction,t");
  int rows = 0;
  std::string line;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cols;
    while (std::getline(ss, cell, ',')) cols.push_back(cell);
    ASSERT_EQ(cols.size(), 5u);
    const double lambda = std::stod(cols[2]);
    EXPECT_GT(lambda, 0.0);
    EXPECT_LT(lambda, 1.0);
    ++rows;
  }
  EXPECT_GT(rows, 8);
  EXPECT_TRUE(fs::exists(dir / "section.svg"));
}

TEST(Cli, LevelSetThroughOuterCircularOrbit) {
  const fs::path dir = scratch("levelsets");
  const CliRun r = run("levelsets " + cfg("example_bump.json") + " --out " + dir.string());
  ASSERT_EQ(r.code, 0);
  const json j = json_of(r);
  EXPECT_TRUE(j["critical_contour_within_cell"].get<bool>());
  EXPECT_LE(j["critical_contour_distance"].get<double>(), j["cell_diagonal"].get<double>());
  EXPECT_TRUE(fs::exists(dir / "levelsets.svg"));
}

TEST(Cli, SimulateWritesTrajectory) {
  const fs::path dir = scratch("simulate");
  const CliRun r = run("simulate " + cfg("example_pair.json") +
                    " --q -3,0.2 --v 1,0 --out " + dir.string());
  ASSERT_EQ(r.code, 0);
  EXPECT_TRUE(fs::exists(dir / "trajectory.csv"));
  EXPECT_TRUE(fs::exists(dir / "trajectory.svg"));
}

TEST(Plots, LevelSetOracle) {
  // The level I+ = -R+ - F(R+), from the closed-form flux, passes within one
  // grid cell of (R+, 0).
  const magshift::FieldConfig c = oracle::load("example_bump.json");
  const magshift::LevelGrid g = magshift::momentum_grid(c.bump(0), 1, 0.5, 201, 201);
  const double ip = -0.8872983346207416 - oracle::example_flux(0.8872983346207416);
  const auto segs = magshift::contour_segments(g, ip);
  const double cell = std::hypot(g.r_at(1) - g.r_at(0), g.v_at(1) - g.v_at(0));
  EXPECT_LE(magshift::distance_to_contour(segs, {0.8872983346207416, 0.0}), cell);
  EXPECT_NEAR(magshift::momentum_polar(c.bump(0), 1, 0.5, 0.5, 0.0),
              -0.5 - oracle::example_flux(0.5), 1e-14);
  EXPECT_TRUE(std::isnan(magshift::momentum_polar(c.bump(0), 1, 0.5, 0.5, 1.5)));
}

TEST(Plots, EmptyTrajectoryPlotHasAxesOnly) {
  const magshift::FieldConfig c = oracle::load("example_bump.json");
  const magshift::Trajectory empty;
  const std::string svg = magshift::render_trajectory_svg(c, nullptr, &empty);
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
  EXPECT_EQ(svg.find("<polyline"), std::string::npos);
  EXPECT_EQ(svg, magshift::render_trajectory_svg(c, nullptr, &empty));
}
