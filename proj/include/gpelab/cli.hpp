#pragma once

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "gpelab/analysis.hpp"
#include "gpelab/error.hpp"
#include "gpelab/output.hpp"
#include "gpelab/pipeline.hpp"
#include "gpelab/plan_io.hpp"

namespace gpelab {

namespace cli_detail {

inline int exit_code(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::invalid_argument: return 2;
    case ErrorCategory::parse: return 3;
    case ErrorCategory::integration: return 4;
    case ErrorCategory::analysis: return 5;
    case ErrorCategory::io: return 6;
  }
  return 1;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCategory::io, "cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCategory::io, "cannot write '" + path + "'");
  out << text;
}

struct AnalysisFlags {
  double rel_threshold = 0.25;
  double min_sep = 1.0;
  std::vector<double> vis_region;

  void attach(CLI::App* app) {
    app->add_option("--rel-threshold", rel_threshold, "Peak threshold relative to the maximum");
    app->add_option("--min-sep", min_sep, "Minimum peak separation (oscillator units)");
    app->add_option("--vis-region", vis_region, "Visibility window lo,hi")->delimiter(',')->expected(2);
  }

  AnalysisOptions options() const {
    AnalysisOptions o;
    o.peaks.rel_threshold = rel_threshold;
    o.peaks.min_separation = min_sep;
    if (vis_region.size() == 2) {
      require(vis_region[0] < vis_region[1], "--vis-region: lo must be below hi");
      o.visibility_region = Interval{vis_region[0], vis_region[1]};
    }
    return o;
  }
};

struct StepperFlags {
  std::optional<double> dt;
  std::optional<std::string> method;

  void attach(CLI::App* app) {
    app->add_option("--dt", dt, "Time step override");
    app->add_option("--method", method, "rk4 or splitstep")->check(CLI::IsMember({"rk4", "splitstep"}));
  }

  void apply(ExperimentPlan& plan) const {
    if (dt) {
      require(*dt > 0.0, "--dt must be positive");
      plan.stepper.dt = *dt;
    }
    if (method) plan.stepper.method = *method == "rk4" ? Method::rk4_spectral : Method::split_step;
  }
};

struct RunSummary {
  Manifest manifest;
  AnalysisReport report;
};

inline RunSummary run_and_emit(const ExperimentPlan& plan, const std::string& out_dir,
                               const AnalysisOptions& analysis, std::size_t stride) {
  const Trajectory traj = run_experiment(plan);
  RunSummary s;
  s.report = analyze(traj, analysis);
  EmitOptions eo;
  eo.analysis = analysis;
  eo.snapshot_stride = stride;
  s.manifest = emit_outputs(traj, s.report, out_dir, eo);
  return s;
}

inline void print_summary(std::ostream& out, const std::string& label, const RunSummary& s) {
  out << label << ": wrote " << s.manifest.directory.string() << " (" << s.manifest.snapshots.size()
      << " snapshots) peaks=" << s.report.peaks.size() << " max_height=" << s.report.max_height;
  if (s.report.visibility) out << " visibility=" << *s.report.visibility;
  out << "\n";
}

inline std::vector<std::string> split_values(const std::string& list) {
  std::vector<std::string> out;
  std::stringstream ss(list);
  for (std::string v; std::getline(ss, v, ',');) {
    v.erase(0, v.find_first_not_of(" \t"));
    v.erase(v.find_last_not_of(" \t") + 1);
    if (!v.empty()) out.push_back(v);
  }
  return out;
}

inline std::size_t default_jobs() {
  if (const char* env = std::getenv("GPELAB_JOBS")) {
    try {
      const long v = std::stol(env);
      if (v > 0) return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
    }
  }
  return 1;
}

}  // namespace cli_detail

/// Entry point for the `gpelab` tool. Returns the process exit status; on
/// failure prints one line `error: <category>: <message>` to `err`.
inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  using namespace cli_detail;
  CLI::App app{"1D Gross-Pitaevskii atom-optics simulator", "gpelab"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "Run a plan file");
  std::string run_plan, run_out;
  std::size_t run_stride = 0;
  StepperFlags run_step;
  AnalysisFlags run_an;
  run->add_option("--plan", run_plan, "Plan file")->required();
  run->add_option("--out", run_out, "Output directory")->required();
  run->add_option("--snapshot-stride", run_stride, "Write every n-th snapshot (0: automatic)");
  run_step.attach(run);
  run_an.attach(run);

  // preset
  auto* pre = app.add_subcommand("preset", "Run a named preset experiment");
  std::string pre_name, pre_out, pre_emit;
  std::optional<double> pre_amp, pre_k;
  bool pre_steep = false;
  std::size_t pre_stride = 0;
  StepperFlags pre_step;
  AnalysisFlags pre_an;
  pre->add_option("--name", pre_name, "Preset name")->required()->check(CLI::IsMember(preset_names()));
  pre->add_option("--out", pre_out, "Output directory");
  pre->add_option("--amplitude-factor", pre_amp, "Scale the modulation amplitude");
  pre->add_option("--k", pre_k, "Override the modulation wavenumber");
  pre->add_flag("--steep-parabola-demo", pre_steep,
                "Replace the modulated stage by a steep parabolic Cn (demonstration only)");
  pre->add_option("--emit-plan", pre_emit, "Write the preset as a plan file");
  pre->add_option("--snapshot-stride", pre_stride, "Write every n-th snapshot (0: automatic)");
  pre_step.attach(pre);
  pre_an.attach(pre);

  // sweep
  auto* sw = app.add_subcommand("sweep", "Run a plan over a list of values for one field");
  std::string sw_plan, sw_param, sw_values, sw_out;
  std::size_t sw_jobs = default_jobs();
  std::size_t sw_stride = 0;
  AnalysisFlags sw_an;
  sw->add_option("--plan", sw_plan, "Plan file")->required();
  sw->add_option("--param", sw_param, "Dotted field path, e.g. stages.1.duration")->required();
  sw->add_option("--values", sw_values, "Comma-separated values (pi suffix allowed)")->required();
  sw->add_option("--out", sw_out, "Output directory")->required();
  sw->add_option("--jobs", sw_jobs, "Parallel runs (default: $GPELAB_JOBS or 1)");
  sw->add_option("--snapshot-stride", sw_stride, "Write every n-th snapshot (0: automatic)");
  sw_an.attach(sw);

  // analyze
  auto* an = app.add_subcommand("analyze", "Analyse snapshot CSVs in a directory");
  std::string an_dir;
  AnalysisFlags an_an;
  an->add_option("--snapshots", an_dir, "Directory with snap_*.csv files")->required();
  an_an.attach(an);

  // validate
  auto* val = app.add_subcommand("validate", "Parse and check a plan file");
  std::string val_plan;
  val->add_option("--plan", val_plan, "Plan file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    err << "error: usage: " << msg << "\n";
    return 64;
  }

  try {
    if (*run) {
      ExperimentPlan plan = load_plan(run_plan);
      run_step.apply(plan);
      auto s = run_and_emit(plan, run_out, run_an.options(), run_stride);
      print_summary(out, plan.label, s);
    } else if (*pre) {
      ExperimentPlan plan = preset(pre_name);
      if (pre_amp) plan = amplitude_variant(plan, *pre_amp);
      if (pre_k) plan = wavenumber_variant(plan, *pre_k);
      if (pre_steep) plan = steep_parabola_variant(plan);
      pre_step.apply(plan);
      if (!pre_emit.empty()) write_file(pre_emit, emit_plan(plan));
      if (pre_out.empty()) {
        if (pre_emit.empty())
          throw Error(ErrorCategory::invalid_argument, "preset: --out or --emit-plan is required");
        return 0;
      }
      auto s = run_and_emit(plan, pre_out, pre_an.options(), pre_stride);
      print_summary(out, plan.label, s);
    } else if (*sw) {
      require(sw_jobs >= 1, "--jobs must be at least 1");
      const std::string text = read_file(sw_plan);
      const auto values = split_values(sw_values);
      require(!values.empty(), "--values: no values given");
      std::vector<ExperimentPlan> plans;
      for (const auto& v : values) plans.push_back(override_plan_field(text, sw_param, v));
      const auto analysis = sw_an.options();

      std::vector<std::optional<RunSummary>> results(plans.size());
      std::vector<std::exception_ptr> errors(plans.size());
      std::atomic<std::size_t> next{0};
      auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < plans.size();) {
          try {
            char dir[32];
            std::snprintf(dir, sizeof dir, "run_%03zu", i);
            results[i] = run_and_emit(plans[i], (fs::path(sw_out) / dir).string(), analysis, sw_stride);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      };
      const std::size_t n_threads = std::min(sw_jobs, plans.size());
      std::vector<std::thread> pool;
      for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(worker);
      worker();
      for (auto& t : pool) t.join();

      nlohmann::json jm;
      jm["param"] = sw_param;
      jm["runs"] = nlohmann::json::array();
      for (std::size_t i = 0; i < plans.size(); ++i) {
        nlohmann::json r;
        r["index"] = i;
        r["value"] = values[i];
        if (results[i]) {
          r["directory"] = fs::path(results[i]->manifest.directory).filename().string();
          r["report"] = to_json(results[i]->report);
        } else {
          r["error"] = true;
        }
        jm["runs"].push_back(r);
      }
      fs::create_directories(sw_out);
      write_file((fs::path(sw_out) / "sweep.json").string(), jm.dump(2) + "\n");
      for (auto& e : errors)
        if (e) std::rethrow_exception(e);
      for (std::size_t i = 0; i < plans.size(); ++i)
        print_summary(out, sw_param + "=" + values[i], *results[i]);
    } else if (*an) {
      std::vector<fs::path> files;
      if (!fs::is_directory(an_dir)) throw Error(ErrorCategory::io, "not a directory: '" + an_dir + "'");
      for (const auto& e : fs::directory_iterator(an_dir)) {
        const auto name = e.path().filename().string();
        if (name.rfind("snap_", 0) == 0 && e.path().extension() == ".csv") files.push_back(e.path());
      }
      if (files.empty()) throw Error(ErrorCategory::io, "no snap_*.csv files in '" + an_dir + "'");
      std::sort(files.begin(), files.end());
      const auto opts = an_an.options();
      nlohmann::json j;
      j["snapshots"] = files.size();
      j["max_height_series"] = nlohmann::json::array();
      SnapshotRecord last;
      for (const auto& f : files) {
        last = read_snapshot_csv(f);
        const double h = *std::max_element(last.density.begin(), last.density.end());
        j["max_height_series"].push_back({last.t, h});
      }
      const Grid1D grid = grid_from_record(last);
      j["final"] = to_json(analyze_density(last.density, grid, opts));
      j["final_file"] = files.back().filename().string();
      out << j.dump(2) << "\n";
    } else if (*val) {
      const auto plan = load_plan(val_plan);
      out << "ok: " << (plan.label.empty() ? val_plan : plan.label) << " (" << plan.stages.size()
          << " stages, " << plan.total_duration() << " time units)\n";
    }
  } catch (const Error& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    err << "error: " << to_string(e.category()) << ": " << msg << "\n";
    return exit_code(e.category());
  } catch (const std::exception& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    err << "error: internal: " << msg << "\n";
    return 1;
  }
  return 0;
}

}  // namespace gpelab
