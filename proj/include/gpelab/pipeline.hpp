#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <variant>
#include <vector>

#include "gpelab/error.hpp"
#include "gpelab/grid.hpp"
#include "gpelab/integrator.hpp"
#include "gpelab/schedules.hpp"
#include "gpelab/wavefunction.hpp"

namespace gpelab {

inline constexpr double pi = std::numbers::pi;

/// A time interval with fixed schedules. Switching between stages is instantaneous.
struct Stage {
  std::string name;
  double duration = 0.0;
  PotentialSpec potential;
  NonlinearitySpec nonlinearity;
  std::size_t snapshot_every = 1000;

  bool operator==(const Stage&) const = default;
};

struct GroundStateInit {
  PotentialSpec potential;
  NonlinearitySpec nonlinearity;
  double tol = 1e-10;
  bool operator==(const GroundStateInit&) const = default;
};

struct GaussianInit {
  double center = 0.0;
  double width = 1.0;
  double momentum = 0.0;
  bool operator==(const GaussianInit&) const = default;
};

using InitSpec = std::variant<GroundStateInit, GaussianInit>;

struct ExperimentPlan {
  std::string label;
  Grid1D grid = default_grid();
  double kinetic_coeff = kStandardKinetic;
  InitSpec init = GaussianInit{};
  std::vector<Stage> stages;
  StepperConfig stepper;

  double total_duration() const {
    double t = 0.0;
    for (const auto& s : stages) t += s.duration;
    return t;
  }

  bool operator==(const ExperimentPlan&) const = default;
};

inline void validate(const ExperimentPlan& plan) {
  require(!plan.stages.empty(), "plan: stages must be non-empty");
  require(plan.kinetic_coeff > 0.0, "plan: kinetic_coeff must be positive");
  plan.stepper.validate();
  if (const auto* gs = std::get_if<GroundStateInit>(&plan.init)) {
    validate(gs->potential);
    validate(gs->nonlinearity);
    require(harmonic_strength(gs->potential) > 0.0,
            "plan: ground-state init needs a confining (harmonic) potential");
    require(gs->tol > 0.0, "plan: ground-state tol must be positive");
  } else {
    const auto& g = std::get<GaussianInit>(plan.init);
    require(g.width > 0.0, "plan: gaussian width must be positive");
  }
  for (std::size_t i = 0; i < plan.stages.size(); ++i) {
    const auto& s = plan.stages[i];
    require(s.duration >= 0.0 && std::isfinite(s.duration),
            "plan: stages[" + std::to_string(i) + "].duration must be >= 0");
    validate(s.potential);
    validate(s.nonlinearity);
  }
}

struct StageRecord {
  std::string name;
  double t_start = 0.0;
  double t_end = 0.0;
  WaveFunction end_state;
  std::vector<double> potential;
  std::vector<double> nonlinearity;
};

struct Trajectory {
  std::string plan_label;
  WaveFunction initial;
  std::vector<Snapshot> snapshots;
  std::vector<StageRecord> stages;
  double max_norm_drift = 0.0;

  bool empty() const noexcept { return snapshots.empty(); }
  const WaveFunction& final_state() const { return stages.empty() ? initial : stages.back().end_state; }
};

inline WaveFunction prepare_initial_state(const ExperimentPlan& plan) {
  if (const auto* gs = std::get_if<GroundStateInit>(&plan.init)) {
    GroundStateOptions opts;
    opts.tol = gs->tol;
    return solve_ground_state(gs->potential, gs->nonlinearity, plan.grid, opts, plan.kinetic_coeff)
        .psi;
  }
  const auto& g = std::get<GaussianInit>(plan.init);
  return gaussian_packet(plan.grid, g.center, g.width, g.momentum);
}

/// Runs `plan` from `psi0`; stages run in order with their own schedules.
inline Trajectory run_stages(const ExperimentPlan& plan, const WaveFunction& psi0) {
  Trajectory traj{plan.label, psi0, {}, {}, 0.0};
  traj.snapshots.push_back({0.0, 0, psi0});
  Propagator prop(plan.grid, plan.kinetic_coeff);
  const double norm0 = norm_sq(psi0);
  WaveFunction psi = psi0;
  double t = 0.0;
  for (std::size_t i = 0; i < plan.stages.size(); ++i) {
    const Stage& st = plan.stages[i];
    auto v = sample_potential(st.potential, plan.grid);
    auto cn = sample_nonlinearity(st.nonlinearity, plan.grid);
    PropagateOptions opts{t, i, false};
    try {
      auto frag = prop.propagate(psi, v, cn, st.duration, plan.stepper, st.snapshot_every, opts);
      psi = std::move(frag.final_state);
      traj.max_norm_drift = std::max(traj.max_norm_drift, frag.max_norm_drift);
      for (auto& s : frag.snapshots) traj.snapshots.push_back(std::move(s));
    } catch (const IntegrationError& e) {
      throw IntegrationError("stage '" + st.name + "': " + e.what(), e.time_reached(), e.drift());
    } catch (const Error& e) {
      throw Error(e.category(), "stage '" + st.name + "': " + e.what());
    }
    const double drift = std::abs(norm_sq(psi) - norm0);
    traj.max_norm_drift = std::max(traj.max_norm_drift, drift);
    if (drift > plan.stepper.norm_drift_tol)
      throw IntegrationError("stage '" + st.name + "': run norm drift " + std::to_string(drift) +
                                 " exceeds tolerance",
                             t + st.duration, drift);
    traj.stages.push_back({st.name, t, t + st.duration, psi, std::move(v), std::move(cn)});
    t += st.duration;
  }
  return traj;
}

inline Trajectory run_experiment(const ExperimentPlan& plan) {
  validate(plan);
  return run_stages(plan, prepare_initial_state(plan));
}

// ---------------------------------------------------------------------------
// Presets
// ---------------------------------------------------------------------------

namespace presets {

inline constexpr double kTrap = 0.25;  // x^2/4 with kinetic coefficient 1
inline constexpr double kCn = 20.0;

inline ExperimentPlan base(const std::string& label, double cn = kCn) {
  ExperimentPlan p;
  p.label = label;
  p.grid = default_grid();
  p.kinetic_coeff = kHalfMassKinetic;
  p.init = GroundStateInit{HarmonicPotential{kTrap}, ConstantNonlinearity{cn}, 1e-10};
  return p;
}

inline Stage free_stage(std::string name, double duration, double cn = kCn) {
  return Stage{std::move(name), duration, ZeroPotential{}, ConstantNonlinearity{cn}, 1000};
}

inline ExperimentPlan modulated_cn(const std::string& label, double amplitude, double offset) {
  ExperimentPlan p = base(label);
  p.stages.push_back(free_stage("expand", 1.0 * pi));
  p.stages.push_back(Stage{"interact", 0.3 * pi, ZeroPotential{},
                           SinusoidalNonlinearity{amplitude, 2.0, offset}, 1000});
  return p;
}

inline ExperimentPlan sinusoidal_potential(const std::string& label, double amplitude,
                                           double expand, double cn = kCn) {
  ExperimentPlan p = base(label, cn);
  p.stages.push_back(free_stage("expand", expand, cn));
  p.stages.push_back(Stage{"interact", 0.2 * pi, SinusoidalPotential{amplitude, 2.0},
                           ConstantNonlinearity{cn}, 1000});
  return p;
}

inline ExperimentPlan in_trap(const std::string& label, double duration, NonlinearitySpec cn,
                              std::size_t snapshot_every) {
  ExperimentPlan p = base(label);
  p.stages.push_back(Stage{"trap", duration, HarmonicPotential{kTrap}, std::move(cn), snapshot_every});
  return p;
}

}  // namespace presets

inline const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = {
      "fig2", "fig3",  "fig3_recurrence", "fig4", "fig4_double",
      "fig5", "fig6",  "fig6_double",     "fig6_recurrence", "fig7",
      "fig8", "fig8_beat", "fig9",        "vis_cn150"};
  return names;
}

/// Named experiment plans. All start from the trapped Cn = 20
/// ground state in the kinetic-coefficient-1 convention (trap x^2/4).
inline ExperimentPlan preset(const std::string& name) {
  using namespace presets;
  if (name == "fig2") return modulated_cn(name, kCn, 0.0);
  if (name == "fig3" || name == "fig3_recurrence") {
    auto p = modulated_cn(name, kCn, 0.0);
    p.stages.push_back(free_stage("fall", (name == "fig3" ? 0.3 : 0.8) * pi));
    return p;
  }
  if (name == "fig4" || name == "fig4_double") {
    auto p = modulated_cn(name, name == "fig4" ? kCn : 2.0 * kCn, 1.0);
    p.stages.push_back(free_stage("fall", 0.3 * pi));
    return p;
  }
  if (name == "fig5") return sinusoidal_potential(name, 1.0, 1.0 * pi);
  if (name == "fig6" || name == "fig6_recurrence") {
    auto p = sinusoidal_potential(name, 1.0, 1.0 * pi);
    p.stages.push_back(free_stage("fall", (name == "fig6" ? 0.3 : 0.9) * pi));
    return p;
  }
  if (name == "fig6_double") {
    auto p = sinusoidal_potential(name, 2.0, 1.0 * pi);
    p.stages.push_back(free_stage("fall", 0.4 * pi));
    return p;
  }
  if (name == "fig7") return in_trap(name, 0.5 * pi, ParabolicNonlinearity{kCn, 400.0}, 1000);
  if (name == "fig8") return in_trap(name, 3.0 * pi, ParabolicNonlinearity{kCn, 400.0}, 100);
  // The x^2/100 beat envelope has a period of tens of pi; 30 pi spans its first minimum.
  if (name == "fig8_beat") return in_trap(name, 30.0 * pi, ParabolicNonlinearity{kCn, 100.0}, 500);
  if (name == "fig9") return in_trap(name, 0.4 * pi, SinusoidalNonlinearity{kCn, 1.0, 0.0}, 1000);
  if (name == "vis_cn150") {
    auto p = sinusoidal_potential(name, 1.0, 0.5 * pi, 150.0);
    p.stages.push_back(free_stage("fall", 0.3 * pi, 150.0));
    return p;
  }
  fail(ErrorCategory::invalid_argument, "unknown preset '" + name + "'");
}

namespace detail {

// Index of the first stage carrying a sinusoidal modulation, or npos.
inline std::size_t modulated_stage(const ExperimentPlan& plan) {
  auto has_sin = [](const PotentialSpec& p, auto&& self) -> bool {
    if (p.get_if<SinusoidalPotential>()) return true;
    if (const auto* s = p.get_if<SumPotential>())
      return std::any_of(s->terms.begin(), s->terms.end(),
                         [&](const PotentialSpec& t) { return self(t, self); });
    return false;
  };
  for (std::size_t i = 0; i < plan.stages.size(); ++i) {
    const auto& st = plan.stages[i];
    if (st.nonlinearity.get_if<SinusoidalNonlinearity>() || has_sin(st.potential, has_sin)) return i;
  }
  return std::string::npos;
}

template <typename F>
void for_each_sinusoid(PotentialSpec& p, F&& f) {
  if (auto* s = p.get_if<SinusoidalPotential>()) f(*s);
  if (auto* sum = p.get_if<SumPotential>())
    for (auto& t : sum->terms) for_each_sinusoid(t, f);
}

}  // namespace detail

/// Scales the modulation amplitude (A or C) of the interaction stage.
inline ExperimentPlan amplitude_variant(ExperimentPlan plan, double factor) {
  const auto i = detail::modulated_stage(plan);
  require(i != std::string::npos, "amplitude_variant: plan has no modulated stage");
  auto& st = plan.stages[i];
  if (auto* c = st.nonlinearity.get_if<SinusoidalNonlinearity>()) c->amplitude *= factor;
  detail::for_each_sinusoid(st.potential, [&](SinusoidalPotential& s) { s.amplitude *= factor; });
  return plan;
}

/// Replaces the modulation wavenumber of the interaction stage.
inline ExperimentPlan wavenumber_variant(ExperimentPlan plan, double k) {
  require(k > 0.0, "wavenumber_variant: k must be positive");
  const auto i = detail::modulated_stage(plan);
  require(i != std::string::npos, "wavenumber_variant: plan has no modulated stage");
  auto& st = plan.stages[i];
  if (auto* c = st.nonlinearity.get_if<SinusoidalNonlinearity>()) c->wavenumber = k;
  detail::for_each_sinusoid(st.potential, [&](SinusoidalPotential& s) { s.wavenumber = k; });
  return plan;
}

/// The steep parabolic-Cn interaction region that was tried and discarded
/// for focusing: Cn rises to `tail_factor` times its base value at `tail_x`.
/// Not a preset; exposed for demonstration runs.
inline ExperimentPlan steep_parabola_variant(ExperimentPlan plan, double tail_x = 12.0,
                                             double tail_factor = 20.0) {
  const auto i = detail::modulated_stage(plan);
  require(i != std::string::npos, "steep_parabola_variant: plan has no modulated stage");
  auto& st = plan.stages[i];
  st.potential = ZeroPotential{};
  st.nonlinearity = ParabolicNonlinearity{presets::kCn, tail_x * tail_x / tail_factor};
  plan.label += "_steep_parabola";
  return plan;
}

}  // namespace gpelab
