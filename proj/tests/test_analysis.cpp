#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "gpelab/gpelab.hpp"

using namespace gpelab;

namespace {

std::vector<double> sample(const Grid1D& g, double (*f)(double)) {
  std::vector<double> n(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) n[i] = f(g.x(i));
  return n;
}

std::vector<double> three_bumps(const Grid1D& g) {
  std::vector<double> n(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double x = g.x(i);
    n[i] = std::exp(-(x + 4.3) * (x + 4.3)) + 0.6 * std::exp(-(x - 1.1) * (x - 1.1) / 0.5) +
           0.8 * std::exp(-(x - 6.2) * (x - 6.2) / 2) + 0.02;
  }
  return n;
}

}  // namespace

TEST(Peaks, SingleGaussian) {
  auto g = default_grid();
  const double w = 1.3;
  std::vector<double> n(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) n[i] = std::exp(-std::pow(g.x(i) - 2.0, 2) / (w * w));
  auto p = detect_peaks(n, g);
  ASSERT_EQ(p.size(), 1u);
  EXPECT_NEAR(p[0].position, 2.0, g.dx());
  EXPECT_NEAR(p[0].fwhm, 2 * std::sqrt(std::log(2.0)) * w, 2 * g.dx());
  EXPECT_NEAR(p[0].area, 1.0, 1e-9);
}

TEST(Peaks, CosineSquared) {
  auto g = make_grid(-2 * pi, 2 * pi, 512);
  auto p = detect_peaks(sample(g, [](double x) { return std::cos(x) * std::cos(x); }), g);
  ASSERT_EQ(p.size(), 4u);
  for (const auto& q : p) {
    EXPECT_NEAR(q.height, p[0].height, 1e-9);
    EXPECT_NEAR(q.area, 0.25, 1e-3);
  }
}

TEST(Peaks, ThresholdAndSeparation) {
  auto g = default_grid();
  auto n = three_bumps(g);
  EXPECT_EQ(detect_peaks(n, g).size(), 3u);
  EXPECT_EQ(detect_peaks(n, g, {0.7, 1.0}).size(), 2u);
  auto wide = detect_peaks(n, g, {0.25, 6.0});
  ASSERT_EQ(wide.size(), 2u);  // the 0.6 bump loses to the taller neighbour
  EXPECT_NEAR(wide[0].position, -4.3, g.dx());
  EXPECT_NEAR(wide[1].position, 6.2, g.dx());
}

TEST(Peaks, ReflectionEquivariance) {
  auto g = default_grid();
  auto n = three_bumps(g);
  std::vector<double> m(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) m[i] = n[(g.size() - i) % g.size()];
  auto a = detect_peaks(n, g), b = detect_peaks(m, g);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_NEAR(b[b.size() - 1 - i].position, -a[i].position, g.dx());
    EXPECT_NEAR(b[b.size() - 1 - i].height, a[i].height, 1e-15);
  }
}

TEST(Peaks, AreasSumToAtMostOne) {
  auto g = default_grid();
  auto p = detect_peaks(three_bumps(g), g);
  double s = 0;
  for (const auto& q : p) {
    EXPECT_GT(q.area, 0.0);
    EXPECT_GT(q.fwhm, 0.0);
    s += q.area;
  }
  EXPECT_LE(s, 1.0 + 1e-9);
}

TEST(Peaks, Errors) {
  auto g = default_grid();
  std::vector<double> zero(g.size(), 0.0);
  try {
    detect_peaks(zero, g);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), ErrorCategory::analysis);
  }
  auto n = three_bumps(g);
  EXPECT_THROW(detect_peaks(n, g, {0.0, 1.0}), Error);
  EXPECT_THROW(detect_peaks(n, g, {0.5, 0.0}), Error);
}

TEST(Visibility, PerfectNulls) {
  auto g = make_grid(-2 * pi, 2 * pi, 512);
  EXPECT_NEAR(fringe_visibility(sample(g, [](double x) { return std::cos(x) * std::cos(x); }), g), 1.0, 1e-12);
}

TEST(Visibility, KnownContrast) {
  auto g = make_grid(-2 * pi, 2 * pi, 512);
  // heights 1.5, valleys 0.5 -> (1.5 - 0.5) / 2
  EXPECT_NEAR(fringe_visibility(sample(g, [](double x) { return 1.0 + 0.5 * std::cos(2 * x); }), g), 0.5, 1e-12);
}

TEST(Visibility, FlatDensityIsUndefined) {
  auto g = default_grid();
  std::vector<double> flat(g.size(), 0.3);
  try {
    fringe_visibility(flat, g);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), ErrorCategory::analysis);
  }
}

TEST(Visibility, ScaleInvariant) {
  auto g = default_grid();
  auto n = three_bumps(g);
  const double v = fringe_visibility(n, g);
  for (double s : {0.25, 2.0, 1024.0}) {
    auto m = n;
    for (auto& x : m) x *= s;
    EXPECT_EQ(fringe_visibility(m, g), v);
  }
  auto m = n;
  for (auto& x : m) x *= 3.7;
  EXPECT_NEAR(fringe_visibility(m, g), v, 1e-15);
}

TEST(Visibility, RegionRestrictsPeaks) {
  auto g = default_grid();
  auto n = three_bumps(g);
  const double full = fringe_visibility(n, g);
  const double part = fringe_visibility(n, g, Interval{0.0, 10.0});
  EXPECT_NE(full, part);
  EXPECT_THROW(fringe_visibility(n, g, Interval{5.0, 10.0}), Error);
}

TEST(HeightSeries, StationaryGroundState) {
  ExperimentPlan p;
  p.init = GroundStateInit{HarmonicPotential{0.5}, ConstantNonlinearity{20}, 1e-10};
  p.stages = {{"hold", 0.1 * pi, HarmonicPotential{0.5}, ConstantNonlinearity{20}, 200}};
  auto s = max_height_series(run_experiment(p));
  ASSERT_GE(s.size(), 5u);
  for (const auto& h : s) EXPECT_NEAR(h.h, s[0].h, 1e-6);
}

TEST(HeightSeries, InteriorMaxima) {
  std::vector<HeightSample> s{{0, 1}, {1, 2}, {2, 1}, {3, 3}, {4, 3}, {5, 0}, {6, 5}};
  auto m = interior_maxima(s);
  EXPECT_EQ(m, (std::vector<std::size_t>{1, 3}));
}

TEST(Report, NotesNegativeConstant) {
  ExperimentPlan p;
  p.init = GaussianInit{0, 1, 0};
  p.stages = {{"s", 0.01, ZeroPotential{}, ConstantNonlinearity{-1}, 100}};
  auto r = analyze(run_experiment(p));
  EXPECT_NE(r.notes.find("negative"), std::string::npos) << r.notes;
  EXPECT_FALSE(r.visibility.has_value());
  EXPECT_EQ(r.peaks.size(), 1u);
  EXPECT_EQ(r.max_height, r.peaks[0].height);
}

TEST(Units, TimeOfHalfPeriod) {
  PhysicalParams p;
  EXPECT_NEAR(unit_convert(p, pi, Quantity::time) * 1e3, 27.78, 0.01);
}

TEST(Units, LengthScale) {
  PhysicalParams p;
  const double l = unit_convert(p, 1.0, Quantity::length);
  EXPECT_NEAR(l * 1e6, 4.94, 0.01);
  auto q = p;
  q.trap_omega *= 2;
  EXPECT_NEAR(unit_convert(q, 1.0, Quantity::length), l / std::sqrt(2.0), 1e-18);
  // kinetic coefficient 1 rescales lengths by 1/sqrt(2)
  EXPECT_NEAR(unit_convert(p, 2.0, Quantity::length, 1.0) * 1e6, 6.99, 0.01);
}

TEST(Units, CouplingConversion) {
  PhysicalParams p;
  p.n_atoms = 1e4;
  p.a_intrinsic = 2.75e-9;
  const double area = 1e-12;
  const double expected = 4 * pi * 1e4 * constants::hbar * constants::hbar * 2.75e-9 / p.atom_mass / area /
                          (constants::hbar * p.trap_omega * oscillator_length(p));
  EXPECT_NEAR(unit_convert(p, area, Quantity::cn_si_to_ho) / expected, 1.0, 1e-12);
  EXPECT_THROW(unit_convert(p, 0.0, Quantity::cn_si_to_ho), Error);
}

TEST(Units, InvalidParams) {
  PhysicalParams p;
  p.atom_mass = 0;
  EXPECT_THROW(unit_convert(p, 1.0, Quantity::length), Error);
  p = PhysicalParams{};
  p.trap_omega = -1;
  EXPECT_THROW(unit_convert(p, 1.0, Quantity::time), Error);
}

TEST(Heating, Formula) {
  EXPECT_EQ(heating_rate(1, 0, 100).rate, 0.0);
  auto h = heating_rate(10, 1, 100);
  EXPECT_EQ(h.rate, 1e-3);
  EXPECT_TRUE(h.in_validity_regime);
  auto w = heating_rate(1, 1, 5);
  EXPECT_NEAR(w.rate, 0.04, 1e-15);
  EXPECT_FALSE(w.in_validity_regime);
  EXPECT_FALSE(w.warning.empty());
  EXPECT_THROW(heating_rate(1, 1, 0), Error);
}
