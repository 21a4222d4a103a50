#pragma once

#include <nlohmann/json.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "gpelab/analysis.hpp"
#include "gpelab/error.hpp"
#include "gpelab/pipeline.hpp"

namespace gpelab {

namespace fs = std::filesystem;

/// 17 significant digits, enough to round-trip any double.
inline std::string format_g17(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, p);
}

/// One CSV snapshot: header `x,re,im,density`, LF line endings.
struct SnapshotRecord {
  double t = 0.0;
  std::vector<double> x, re, im, density;
};

inline std::string snapshot_filename(std::size_t index, double t) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "snap_%05zu_%.6f.csv", index, t);
  return buf;
}

inline void write_snapshot_csv(const fs::path& path, const WaveFunction& psi) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCategory::io, "cannot write '" + path.string() + "'");
  std::string buf = "x,re,im,density\n";
  for (std::size_t i = 0; i < psi.size(); ++i) {
    const auto a = psi[i];
    buf += format_g17(psi.grid().x(i));
    buf += ',';
    buf += format_g17(a.real());
    buf += ',';
    buf += format_g17(a.imag());
    buf += ',';
    buf += format_g17(std::norm(a));
    buf += '\n';
  }
  out << buf;
  if (!out) throw Error(ErrorCategory::io, "write failed for '" + path.string() + "'");
}

/// Reads a snapshot CSV; t is recovered from a snap_<index>_<t>.csv name when present.
inline SnapshotRecord read_snapshot_csv(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCategory::io, "cannot open '" + path.string() + "'");
  SnapshotRecord rec;
  std::string line;
  if (!std::getline(in, line) || line != "x,re,im,density")
    throw Error(ErrorCategory::parse, path.string() + ": expected header 'x,re,im,density'");
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    double vals[4];
    const char* p = line.data();
    const char* end = line.data() + line.size();
    for (int c = 0; c < 4; ++c) {
      auto [q, ec] = std::from_chars(p, end, vals[c]);
      if (ec != std::errc() || !std::isfinite(vals[c]) || (c < 3 && (q == end || *q != ',')) ||
          (c == 3 && q != end))
        throw Error(ErrorCategory::parse,
                    path.string() + ": malformed row at line " + std::to_string(lineno));
      p = q + 1;
    }
    rec.x.push_back(vals[0]);
    rec.re.push_back(vals[1]);
    rec.im.push_back(vals[2]);
    rec.density.push_back(vals[3]);
  }
  const auto stem = path.stem().string();
  if (stem.rfind("snap_", 0) == 0) {
    const auto us = stem.rfind('_');
    double t = 0.0;
    auto [q, ec] = std::from_chars(stem.data() + us + 1, stem.data() + stem.size(), t);
    if (ec == std::errc()) rec.t = t;
  }
  return rec;
}

/// Rebuilds a grid from snapshot x columns (uniform spacing, periodic).
inline Grid1D grid_from_record(const SnapshotRecord& rec) {
  if (rec.x.size() < 2) throw Error(ErrorCategory::parse, "snapshot has fewer than two rows");
  const double dx = rec.x[1] - rec.x[0];
  return Grid1D(rec.x.front(), rec.x.front() + dx * static_cast<double>(rec.x.size()), rec.x.size());
}

inline nlohmann::json to_json(const Peak& p) {
  return {{"position", p.position}, {"height", p.height}, {"fwhm", p.fwhm}, {"area", p.area}};
}

inline nlohmann::json to_json(const AnalysisReport& r) {
  nlohmann::json j;
  j["peaks"] = nlohmann::json::array();
  for (const auto& p : r.peaks) j["peaks"].push_back(to_json(p));
  j["peak_count"] = r.peaks.size();
  j["visibility"] = r.visibility ? nlohmann::json(*r.visibility) : nlohmann::json(nullptr);
  j["max_height"] = r.max_height;
  j["notes"] = r.notes;
  return j;
}

struct EmitOptions {
  /// Write every n-th snapshot (the last one always). 0 picks a stride that
  /// keeps the file count at or below max_snapshot_files.
  std::size_t snapshot_stride = 0;
  std::size_t max_snapshot_files = 400;
  AnalysisOptions analysis;
};

struct Manifest {
  fs::path directory;
  std::vector<std::string> snapshots;
  std::vector<std::string> stage_states;
  std::string metrics;
  std::string plot_script;
  std::string schedule;
  std::string height_series;
};

namespace output_detail {

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCategory::io, "cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw Error(ErrorCategory::io, "write failed for '" + path.string() + "'");
}

// Last stage whose schedules vary in space; its shape is drawn dotted.
inline std::size_t shape_stage(const Trajectory& traj) {
  std::size_t pick = traj.stages.size() - 1;
  for (std::size_t i = 0; i < traj.stages.size(); ++i) {
    const auto& s = traj.stages[i];
    auto varies = [](const std::vector<double>& v) {
      return std::adjacent_find(v.begin(), v.end(), std::not_equal_to<>()) != v.end();
    };
    if (varies(s.nonlinearity) || (varies(s.potential) && traj.stages.size() > 1)) pick = i;
  }
  return pick;
}

inline constexpr const char* kPlotScript = R"PY(#!/usr/bin/env python3
# Renders the run: density solid, the state just
# before the modulated stage dashed, the modulation shape dotted (rescaled).
import csv, json, os, sys
import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(__file__))
manifest = json.load(open(os.path.join(here, "manifest.json")))

def load(name):
    with open(os.path.join(here, name)) as f:
        rows = list(csv.DictReader(f))
    return [float(r["x"]) for r in rows], rows

x, final = load(manifest["stage_states"][-1])
dens = [float(r["density"]) for r in final]
peak = max(dens)
fig, ax = plt.subplots(figsize=(7, 4))
ax.plot(x, dens, "-", color="k", label="final")
pre = manifest.get("pre_modulation_state")
if pre:
    _, rows = load(pre)
    ax.plot(x, [float(r["density"]) for r in rows], "--", color="k", label="before modulation")
sx, sched = load(manifest["schedule"])
shape = [float(r["potential"]) + float(r["nonlinearity"]) for r in sched]
lo, hi = min(shape), max(shape)
if hi > lo:
    ax.plot(sx, [peak * (s - lo) / (hi - lo) for s in shape], ":", color="k", label="modulation shape")
ax.set_xlim(-25, 25)
ax.set_xlabel("x (oscillator units)")
ax.set_ylabel("|psi|^2")
ax.legend(frameon=False)
fig.tight_layout()
fig.savefig(os.path.join(here, "density.png"), dpi=150)

with open(os.path.join(here, manifest["height_series"])) as f:
    rows = list(csv.DictReader(f))
fig, ax = plt.subplots(figsize=(7, 3))
ax.plot([float(r["t"]) for r in rows], [float(r["max_height"]) for r in rows], "-", color="k")
ax.set_xlabel("t (1/omega)")
ax.set_ylabel("max |psi|^2")
fig.tight_layout()
fig.savefig(os.path.join(here, "max_height.png"), dpi=150)
)PY";

}  // namespace output_detail

/// Writes snapshots, stage-boundary states, the modulation schedule, the
/// max-height series, metrics.json, plot.py and manifest.json into `out_dir`.
inline Manifest emit_outputs(const Trajectory& traj, const AnalysisReport& report,
                             const fs::path& out_dir, const EmitOptions& opts = {}) {
  using output_detail::write_text;
  if (traj.empty()) throw Error(ErrorCategory::invalid_argument, "emit_outputs: empty trajectory");
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorCategory::io, "cannot create '" + out_dir.string() + "': " + ec.message());

  Manifest m;
  m.directory = out_dir;
  const std::size_t count = traj.snapshots.size();
  std::size_t stride = opts.snapshot_stride;
  if (stride == 0)
    stride = std::max<std::size_t>(1, (count + opts.max_snapshot_files - 1) / opts.max_snapshot_files);
  for (std::size_t i = 0; i < count; ++i) {
    if (i % stride != 0 && i + 1 != count) continue;
    const auto name = snapshot_filename(i, traj.snapshots[i].t);
    write_snapshot_csv(out_dir / name, traj.snapshots[i].psi);
    m.snapshots.push_back(name);
  }

  write_snapshot_csv(out_dir / "stage_initial.csv", traj.initial);
  m.stage_states.push_back("stage_initial.csv");
  for (std::size_t i = 0; i < traj.stages.size(); ++i) {
    const auto name = "stage_" + std::to_string(i) + "_" + traj.stages[i].name + ".csv";
    write_snapshot_csv(out_dir / name, traj.stages[i].end_state);
    m.stage_states.push_back(name);
  }

  nlohmann::json manifest_extra;
  if (!traj.stages.empty()) {
    const auto k = output_detail::shape_stage(traj);
    const auto& st = traj.stages[k];
    std::string csv = "x,potential,nonlinearity\n";
    const auto& g = traj.initial.grid();
    for (std::size_t i = 0; i < g.size(); ++i)
      csv += format_g17(g.x(i)) + "," + format_g17(st.potential[i]) + "," +
             format_g17(st.nonlinearity[i]) + "\n";
    m.schedule = "schedule.csv";
    write_text(out_dir / m.schedule, csv);
    // state entering the modulated stage
    if (k > 0) manifest_extra["pre_modulation_state"] = m.stage_states[k];
  }

  const auto series = max_height_series(traj);
  {
    std::string csv = "t,max_height\n";
    for (const auto& s : series) csv += format_g17(s.t) + "," + format_g17(s.h) + "\n";
    m.height_series = "max_height.csv";
    write_text(out_dir / m.height_series, csv);
  }

  nlohmann::json metrics;
  metrics["label"] = traj.plan_label;
  metrics["final"] = to_json(report);
  metrics["max_norm_drift"] = traj.max_norm_drift;
  metrics["stages"] = nlohmann::json::array();
  for (const auto& st : traj.stages) {
    nlohmann::json js;
    js["name"] = st.name;
    js["t_start"] = st.t_start;
    js["t_end"] = st.t_end;
    js["norm"] = norm_sq(st.end_state);
    js["analysis"] = to_json(analyze_density(density(st.end_state), st.end_state.grid(), opts.analysis));
    metrics["stages"].push_back(js);
  }
  metrics["max_height_series"] = nlohmann::json::array();
  for (const auto& s : series) metrics["max_height_series"].push_back({s.t, s.h});
  if (opts.analysis.visibility_region)
    metrics["visibility_region"] = {opts.analysis.visibility_region->lo,
                                    opts.analysis.visibility_region->hi};
  m.metrics = "metrics.json";
  write_text(out_dir / m.metrics, metrics.dump(2) + "\n");

  m.plot_script = "plot.py";
  write_text(out_dir / m.plot_script, output_detail::kPlotScript);
  fs::permissions(out_dir / m.plot_script, fs::perms::owner_exec, fs::perm_options::add, ec);

  nlohmann::json jm = manifest_extra;
  jm["label"] = traj.plan_label;
  jm["snapshots"] = m.snapshots;
  jm["stage_states"] = m.stage_states;
  jm["schedule"] = m.schedule;
  jm["height_series"] = m.height_series;
  jm["metrics"] = m.metrics;
  jm["plot_script"] = m.plot_script;
  write_text(out_dir / "manifest.json", jm.dump(2) + "\n");
  return m;
}

}  // namespace gpelab
