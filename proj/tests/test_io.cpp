#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "gpelab/cli.hpp"
#include "gpelab/gpelab.hpp"
#include "gpelab/output.hpp"
#include "gpelab/plan_io.hpp"

using namespace gpelab;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("gpelab_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct CliResult {
  int code;
  std::string out, err;
};

CliResult cli(std::vector<std::string> args) {
  args.insert(args.begin(), "gpelab");
  std::vector<const char*> argv;
  for (auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

const char* kTinyPlan = R"(schema_version: 1
label: tiny
grid: {x_min: -20, x_max: 20, n_points: 256}
stepper: {dt: 1e-3, method: rk4}
init:
  gaussian: {center: 0, width: 1, momentum: 0}
stages:
  - name: expand
    duration: 0.1pi
    snapshot_every: 50
    potential: zero
    nonlinearity: {constant: {cn: 5}}
  - name: interact
    duration: 0.1pi
    snapshot_every: 50
    potential: {sinusoidal: {amplitude: 1, wavenumber: 2}}
    nonlinearity: {constant: {cn: 5}}
)";

}  // namespace

TEST(PlanIo, CanonicalFig2FileEqualsPreset) {
  EXPECT_EQ(load_plan(std::string(GPELAB_SOURCE_DIR) + "/plans/fig2.yaml"), preset("fig2"));
}

TEST(PlanIo, ShippedPlansMatchPresets) {
  for (const auto& name : preset_names()) {
    const auto path = fs::path(GPELAB_SOURCE_DIR) / "plans" / (name + ".yaml");
    ASSERT_TRUE(fs::exists(path)) << path;
    EXPECT_EQ(load_plan(path.string()), preset(name)) << name;
  }
}

TEST(PlanIo, RoundTripAllPresets) {
  for (const auto& name : preset_names()) {
    const auto text = emit_plan(preset(name));
    EXPECT_EQ(parse_plan(text), preset(name)) << name;
    EXPECT_EQ(emit_plan(parse_plan(text)), text) << name;
  }
  auto gauss = parse_plan(kTinyPlan);
  EXPECT_EQ(parse_plan(emit_plan(gauss)), gauss);
}

TEST(PlanIo, TinyPlanFields) {
  auto p = parse_plan(kTinyPlan);
  EXPECT_EQ(p.label, "tiny");
  EXPECT_EQ(p.grid, make_grid(-20, 20, 256));
  EXPECT_DOUBLE_EQ(p.stages[0].duration, 0.1 * pi);
  EXPECT_EQ(p.stages[1].potential, PotentialSpec(SinusoidalPotential{1, 2}));
  EXPECT_EQ(p.stepper.dt, 1e-3);
  EXPECT_EQ(p.kinetic_coeff, 0.5);
}

namespace {
std::string parse_error(const std::string& text) {
  try {
    parse_plan(text);
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), ErrorCategory::parse) << e.what();
    return e.what();
  }
  ADD_FAILURE() << "plan was accepted";
  return {};
}

std::string replace(std::string s, const std::string& from, const std::string& to) {
  s.replace(s.find(from), from.size(), to);
  return s;
}
}  // namespace

TEST(PlanIo, NegativeDurationNamesField) {
  auto msg = parse_error(replace(kTinyPlan, "duration: 0.1pi\n    snapshot_every: 50\n    potential: {",
                                 "duration: -1\n    snapshot_every: 50\n    potential: {"));
  EXPECT_NE(msg.find("stages[1].duration"), std::string::npos) << msg;
  EXPECT_NE(msg.find("line"), std::string::npos) << msg;
}

TEST(PlanIo, UnknownVariantIsNamed) {
  auto msg = parse_error(replace(kTinyPlan, "{sinusoidal: {amplitude", "{gaussian_bump: {amplitude"));
  EXPECT_NE(msg.find("gaussian_bump"), std::string::npos) << msg;
}

TEST(PlanIo, OtherErrors) {
  parse_error(replace(kTinyPlan, "schema_version: 1", "schema_version: 2"));
  parse_error(replace(kTinyPlan, "n_points: 256", "n_points: 200"));
  parse_error(replace(kTinyPlan, "label: tiny", "label: tiny\ncolour: blue"));
  parse_error(replace(kTinyPlan, "method: rk4", "method: euler"));
  parse_error(replace(kTinyPlan, "width: 1,", "width: abc,"));
  parse_error("stages: [");
  parse_error(replace(kTinyPlan, "wavenumber: 2", "wavenumber: 0"));
  parse_error(std::string(kTinyPlan).substr(0, std::string(kTinyPlan).find("stages:")) + "stages: []\n");
  try {
    load_plan("/nonexistent/plan.yaml");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), ErrorCategory::io);
  }
}

TEST(PlanIo, Override) {
  auto p = override_plan_field(kTinyPlan, "stages.1.duration", "0.25pi");
  EXPECT_DOUBLE_EQ(p.stages[1].duration, 0.25 * pi);
  auto q = override_plan_field(kTinyPlan, "stages.1.potential.sinusoidal.amplitude", "3");
  EXPECT_EQ(q.stages[1].potential, PotentialSpec(SinusoidalPotential{3, 2}));
  EXPECT_THROW(override_plan_field(kTinyPlan, "stages.7.duration", "1"), Error);
  EXPECT_THROW(override_plan_field(kTinyPlan, "stages.1.speed", "1"), Error);
  EXPECT_THROW(override_plan_field(kTinyPlan, "grid", "1"), Error);
}

TEST(Csv, RoundTrip) {
  auto dir = scratch("csv");
  auto g = default_grid();
  auto psi = gaussian_packet(g, 0.3, 1.7, 2.1);
  auto path = dir / snapshot_filename(3, 1.25);
  write_snapshot_csv(path, psi);
  EXPECT_EQ(path.filename().string(), "snap_00003_1.250000.csv");
  auto text = slurp(path);
  EXPECT_EQ(text.rfind("x,re,im,density\n", 0), 0u);
  EXPECT_EQ(text.find('\r'), std::string::npos);
  auto rec = read_snapshot_csv(path);
  EXPECT_EQ(rec.t, 1.25);
  ASSERT_EQ(rec.density.size(), g.size());
  auto n = density(psi);
  for (std::size_t i = 0; i < g.size(); ++i) {
    EXPECT_EQ(rec.x[i], g.x(i));
    EXPECT_EQ(rec.re[i], psi[i].real());
    EXPECT_EQ(rec.im[i], psi[i].imag());
    EXPECT_LE(std::abs(rec.density[i] - n[i]), 1e-15 * std::max(n[i], 1e-300));
  }
  EXPECT_EQ(grid_from_record(rec), g);
}

TEST(Output, EmptyTrajectoryRejected) {
  Trajectory t{"x", WaveFunction(default_grid()), {}, {}, 0.0};
  EXPECT_THROW(emit_outputs(t, {}, scratch("empty"), {}), Error);
}

TEST(Output, ManifestForTinyRun) {
  auto dir = scratch("manifest");
  auto plan = parse_plan(kTinyPlan);
  auto traj = run_experiment(plan);
  auto m = emit_outputs(traj, analyze(traj), dir, {});
  EXPECT_GE(m.snapshots.size(), 3u);
  for (const auto& f : m.snapshots) EXPECT_TRUE(fs::exists(dir / f)) << f;
  for (const auto& f : {m.metrics, m.plot_script, m.schedule, m.height_series})
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  EXPECT_TRUE(fs::exists(dir / "manifest.json"));
  auto metrics = nlohmann::json::parse(slurp(dir / m.metrics));
  EXPECT_EQ(metrics["label"], "tiny");
  EXPECT_TRUE(metrics.contains("final"));
  EXPECT_EQ(metrics["max_height_series"].size(), traj.snapshots.size());
  auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
  EXPECT_EQ(manifest["snapshots"].size(), m.snapshots.size());
}

TEST(Output, StrideLimitsFileCount) {
  auto dir = scratch("stride");
  auto traj = run_experiment(parse_plan(kTinyPlan));
  EmitOptions o;
  o.snapshot_stride = 4;
  auto m = emit_outputs(traj, analyze(traj), dir, o);
  EXPECT_EQ(m.snapshots.size(), (traj.snapshots.size() - 1) / 4 + 1 + ((traj.snapshots.size() - 1) % 4 ? 1 : 0));
  EXPECT_NE(m.snapshots.back().find(snapshot_filename(traj.snapshots.size() - 1, traj.snapshots.back().t)),
            std::string::npos);
}

TEST(Cli, ValidateAcceptsAndRejects) {
  auto dir = scratch("cli_validate");
  std::ofstream(dir / "ok.yaml") << kTinyPlan;
  std::ofstream(dir / "bad.yaml") << replace(kTinyPlan, "n_points: 256", "n_points: 100");
  auto ok = cli({"validate", "--plan", (dir / "ok.yaml").string()});
  EXPECT_EQ(ok.code, 0) << ok.err;
  auto bad = cli({"validate", "--plan", (dir / "bad.yaml").string()});
  EXPECT_NE(bad.code, 0);
  EXPECT_EQ(bad.err.rfind("error: parse: ", 0), 0u) << bad.err;
  EXPECT_EQ(std::count(bad.err.begin(), bad.err.end(), '\n'), 1);
  auto runbad = cli({"run", "--plan", (dir / "bad.yaml").string(), "--out", (dir / "o").string()});
  EXPECT_EQ(runbad.code, bad.code);
  EXPECT_EQ(runbad.err, bad.err);
}

TEST(Cli, ErrorCategories) {
  auto missing = cli({"validate", "--plan", "/nonexistent.yaml"});
  EXPECT_EQ(missing.err.rfind("error: io: ", 0), 0u) << missing.err;
  auto usage = cli({"run", "--plan"});
  EXPECT_NE(usage.code, 0);
  EXPECT_EQ(usage.err.rfind("error: usage: ", 0), 0u) << usage.err;
  auto unknown = cli({"preset", "--name", "nope", "--out", "/tmp/x"});
  EXPECT_NE(unknown.code, 0);
  EXPECT_EQ(unknown.err.rfind("error: usage: ", 0), 0u) << unknown.err;
  auto none = cli({});
  EXPECT_NE(none.code, 0);
  auto method = cli({"run", "--plan", "x.yaml", "--out", "o", "--method", "euler"});
  EXPECT_NE(method.code, 0);
}

TEST(Cli, RunWithOverrides) {
  auto dir = scratch("cli_run");
  std::ofstream(dir / "tiny.yaml") << kTinyPlan;
  auto r = cli({"run", "--plan", (dir / "tiny.yaml").string(), "--out", (dir / "out").string(), "--dt",
                "5e-4", "--method", "splitstep"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir / "out" / "manifest.json"));
  EXPECT_TRUE(fs::exists(dir / "out" / "metrics.json"));
}

TEST(Cli, PresetEmitPlan) {
  auto dir = scratch("cli_emit");
  auto r = cli({"preset", "--name", "fig5", "--amplitude-factor", "2", "--emit-plan", (dir / "p.yaml").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(load_plan((dir / "p.yaml").string()), amplitude_variant(preset("fig5"), 2));
  auto k = cli({"preset", "--name", "fig2", "--k", "1", "--emit-plan", (dir / "k.yaml").string()});
  ASSERT_EQ(k.code, 0) << k.err;
  EXPECT_EQ(load_plan((dir / "k.yaml").string()), wavenumber_variant(preset("fig2"), 1));
  auto neither = cli({"preset", "--name", "fig2"});
  EXPECT_EQ(neither.err.rfind("error: invalid_argument: ", 0), 0u) << neither.err;
  auto novar = cli({"preset", "--name", "fig7", "--amplitude-factor", "2", "--emit-plan", (dir / "x.yaml").string()});
  EXPECT_EQ(novar.err.rfind("error: invalid_argument: ", 0), 0u) << novar.err;
}

TEST(Cli, SweepAndAnalyze) {
  auto dir = scratch("cli_sweep");
  std::ofstream(dir / "tiny.yaml") << kTinyPlan;
  auto r = cli({"sweep", "--plan", (dir / "tiny.yaml").string(), "--param", "stages.1.duration", "--values",
                "0.05pi,0.1pi,0.15pi", "--out", (dir / "sw").string(), "--jobs", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* d : {"run_000", "run_001", "run_002"}) EXPECT_TRUE(fs::exists(dir / "sw" / d / "manifest.json"));
  auto sweep = nlohmann::json::parse(slurp(dir / "sw" / "sweep.json"));
  EXPECT_EQ(sweep["runs"].size(), 3u);

  auto a = cli({"analyze", "--snapshots", (dir / "sw" / "run_001").string(), "--rel-threshold", "0.3", "--min-sep",
                "0.5"});
  ASSERT_EQ(a.code, 0) << a.err;
  auto j = nlohmann::json::parse(a.out);
  EXPECT_TRUE(j.contains("final"));
  EXPECT_GE(j["snapshots"].get<int>(), 3);
  auto empty = cli({"analyze", "--snapshots", dir.string()});
  EXPECT_EQ(empty.err.rfind("error: io: ", 0), 0u) << empty.err;
}

TEST(Cli, SweepBadParam) {
  auto dir = scratch("cli_sweep_bad");
  std::ofstream(dir / "tiny.yaml") << kTinyPlan;
  auto r = cli({"sweep", "--plan", (dir / "tiny.yaml").string(), "--param", "stages.9.duration", "--values", "1",
                "--out", (dir / "sw").string()});
  EXPECT_EQ(r.err.rfind("error: invalid_argument: ", 0), 0u) << r.err;
  auto neg = cli({"sweep", "--plan", (dir / "tiny.yaml").string(), "--param", "stages.1.duration", "--values", "-1",
                  "--out", (dir / "sw").string()});
  EXPECT_EQ(neg.err.rfind("error: parse: ", 0), 0u) << neg.err;
}
