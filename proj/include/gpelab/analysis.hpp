#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gpelab/error.hpp"
#include "gpelab/grid.hpp"
#include "gpelab/pipeline.hpp"
#include "gpelab/wavefunction.hpp"

namespace gpelab {

struct Peak {
  double position = 0.0;
  double height = 0.0;
  double fwhm = 0.0;
  /// Fraction of the total density owned by this peak (valley to valley).
  double area = 0.0;
  std::size_t index = 0;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double x) const noexcept { return x >= lo && x <= hi; }
};

struct PeakOptions {
  double rel_threshold = 0.25;
  double min_separation = 1.0;
};

namespace detail {

inline std::size_t wrap(long long i, std::size_t n) {
  const auto m = static_cast<long long>(n);
  return static_cast<std::size_t>(((i % m) + m) % m);
}

// Offset (in samples) from `peak` to the half-height crossing when walking
// towards `valley_offset` (signed); falls back to the valley itself.
inline double half_height_offset(std::span<const double> n, std::size_t peak, long long valley_offset) {
  const double half = 0.5 * n[peak];
  const long long dir = valley_offset < 0 ? -1 : 1;
  double prev = n[peak];
  for (long long m = dir; m != valley_offset + dir; m += dir) {
    const double cur = n[wrap(static_cast<long long>(peak) + m, n.size())];
    if (cur < half) {
      const double frac = (prev - half) / (prev - cur);
      return static_cast<double>(m - dir) + static_cast<double>(dir) * frac;
    }
    prev = cur;
  }
  return static_cast<double>(valley_offset);
}

}  // namespace detail

/// Local maxima of a density sampled on a periodic grid, at least
/// `rel_threshold * max` high and `min_separation` apart (the higher of a
/// conflicting pair wins). Sorted by position.
inline std::vector<Peak> detect_peaks(std::span<const double> n, const Grid1D& grid,
                                      const PeakOptions& opts = {}) {
  require(opts.rel_threshold > 0.0 && opts.rel_threshold < 1.0,
          "detect_peaks: rel_threshold must lie in (0, 1)");
  require(opts.min_separation > 0.0, "detect_peaks: min_separation must be positive");
  require(n.size() == grid.size(), "detect_peaks: density does not match grid");
  const std::size_t size = n.size();
  const double nmax = *std::max_element(n.begin(), n.end());
  if (!(nmax > 0.0)) fail(ErrorCategory::analysis, "detect_peaks: density is identically zero");

  std::vector<std::size_t> cand;
  for (std::size_t i = 0; i < size; ++i) {
    const double l = n[detail::wrap(static_cast<long long>(i) - 1, size)];
    const double r = n[detail::wrap(static_cast<long long>(i) + 1, size)];
    if (n[i] > l && n[i] >= r && n[i] >= opts.rel_threshold * nmax) cand.push_back(i);
  }
  std::stable_sort(cand.begin(), cand.end(),
                   [&](std::size_t a, std::size_t b) { return n[a] > n[b]; });

  const double period = grid.length();
  std::vector<std::size_t> kept;
  for (auto i : cand) {
    const bool clear = std::all_of(kept.begin(), kept.end(), [&](std::size_t j) {
      const double d = std::abs(grid.x(i) - grid.x(j));
      return std::min(d, period - d) >= opts.min_separation;
    });
    if (clear) kept.push_back(i);
  }
  std::sort(kept.begin(), kept.end());
  if (kept.empty()) return {};

  double total = 0.0;
  for (double v : n) total += v;

  // Valley after each kept peak (cyclically, up to the next kept peak).
  const std::size_t m = kept.size();
  std::vector<long long> valley_after(m);
  for (std::size_t p = 0; p < m; ++p) {
    const long long a = static_cast<long long>(kept[p]);
    long long b = static_cast<long long>(kept[(p + 1) % m]);
    if (b <= a) b += static_cast<long long>(size);
    long long best = a + 1;
    for (long long i = a + 1; i < b; ++i)
      if (n[detail::wrap(i, size)] < n[detail::wrap(best, size)]) best = i;
    if (b == a + 1) best = a;  // adjacent peaks share no interior valley
    valley_after[p] = best - a;  // offset from peak p, in (0, b-a)
  }

  std::vector<Peak> peaks;
  peaks.reserve(m);
  for (std::size_t p = 0; p < m; ++p) {
    const std::size_t i = kept[p];
    const std::size_t prev = (p + m - 1) % m;
    // Left valley as an offset from this peak (negative).
    const long long prev_peak = static_cast<long long>(kept[prev]);
    long long left_abs = prev_peak + valley_after[prev];
    long long left = left_abs - static_cast<long long>(i);
    if (left >= 0) left -= static_cast<long long>(size);
    const long long right = valley_after[p];

    double area = 0.0;
    for (long long o = left + 1; o <= right; ++o)
      area += n[detail::wrap(static_cast<long long>(i) + o, size)];

    const double lo = detail::half_height_offset(n, i, left);
    const double hi = detail::half_height_offset(n, i, right);
    peaks.push_back({grid.x(i), n[i], (hi - lo) * grid.dx(), area / total, i});
  }
  return peaks;
}

/// (P_max - P_min) / (P_max + P_min) over the detected peaks inside `region`
/// (default: all peaks, i.e. the span between the outermost ones). P_min is
/// the lowest valley between consecutive peaks in the region.
inline double fringe_visibility(std::span<const double> n, const Grid1D& grid,
                                std::optional<Interval> region = std::nullopt,
                                const PeakOptions& opts = {}) {
  auto peaks = detect_peaks(n, grid, opts);
  if (region)
    std::erase_if(peaks, [&](const Peak& p) { return !region->contains(p.position); });
  if (peaks.size() < 2)
    fail(ErrorCategory::analysis, "fringe_visibility: fewer than 2 peaks, visibility undefined");
  double pmax = 0.0;
  for (const auto& p : peaks) pmax = std::max(pmax, p.height);
  double pmin = pmax;
  for (std::size_t k = 0; k + 1 < peaks.size(); ++k)
    for (std::size_t i = peaks[k].index + 1; i < peaks[k + 1].index; ++i) pmin = std::min(pmin, n[i]);
  return (pmax - pmin) / (pmax + pmin);
}

struct HeightSample {
  double t = 0.0;
  double h = 0.0;
};

inline std::vector<HeightSample> max_height_series(const Trajectory& traj) {
  std::vector<HeightSample> out;
  out.reserve(traj.snapshots.size());
  for (const auto& s : traj.snapshots) {
    double h = 0.0;
    for (const auto& a : s.psi.amplitudes()) h = std::max(h, std::norm(a));
    out.push_back({s.t, h});
  }
  return out;
}

/// Indices of strict interior local maxima of a series.
inline std::vector<std::size_t> interior_maxima(std::span<const HeightSample> series) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 1; i + 1 < series.size(); ++i)
    if (series[i].h > series[i - 1].h && series[i].h >= series[i + 1].h) idx.push_back(i);
  return idx;
}

struct AnalysisOptions {
  PeakOptions peaks;
  std::optional<Interval> visibility_region;
};

struct AnalysisReport {
  std::vector<Peak> peaks;
  /// Empty when fewer than two peaks exist.
  std::optional<double> visibility;
  double max_height = 0.0;
  std::string notes;
};

inline AnalysisReport analyze_density(std::span<const double> n, const Grid1D& grid,
                                      const AnalysisOptions& opts = {}) {
  AnalysisReport r;
  r.peaks = detect_peaks(n, grid, opts.peaks);
  for (const auto& p : r.peaks) r.max_height = std::max(r.max_height, p.height);
  try {
    r.visibility = fringe_visibility(n, grid, opts.visibility_region, opts.peaks);
  } catch (const Error& e) {
    r.notes += std::string(e.what()) + "; ";
  }
  return r;
}

/// Report on the final state of a trajectory, with notes on nonstandard
/// schedules (negative constant Cn).
inline AnalysisReport analyze(const Trajectory& traj, const AnalysisOptions& opts = {}) {
  require(!traj.empty(), "analyze: empty trajectory");
  const auto& psi = traj.final_state();
  AnalysisReport r = analyze_density(density(psi), psi.grid(), opts);
  for (const auto& st : traj.stages) {
    const bool uniform = std::adjacent_find(st.nonlinearity.begin(), st.nonlinearity.end(),
                                            std::not_equal_to<>()) == st.nonlinearity.end();
    if (uniform && !st.nonlinearity.empty() && st.nonlinearity.front() < 0.0)
      r.notes += "stage '" + st.name + "' uses a negative constant Cn (nonstandard); ";
  }
  return r;
}

}  // namespace gpelab
