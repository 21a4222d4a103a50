#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "gpelab/error.hpp"
#include "gpelab/grid.hpp"
#include "gpelab/schedules.hpp"
#include "gpelab/spectral.hpp"
#include "gpelab/wavefunction.hpp"

namespace gpelab {

enum class Method { rk4_spectral, split_step };

inline std::string_view to_string(Method m) {
  return m == Method::rk4_spectral ? "rk4" : "splitstep";
}

struct StepperConfig {
  double dt = 1e-4;
  Method method = Method::rk4_spectral;
  /// Bound on |norm_sq - initial norm_sq| over a propagation.
  double norm_drift_tol = 1e-8;
  /// Bound on edge density relative to the peak density at each snapshot.
  double boundary_density_tol = 1e-6;

  void validate() const {
    require(dt > 0.0 && std::isfinite(dt), "stepper: dt must be positive");
    require(norm_drift_tol > 0.0, "stepper: norm_drift_tol must be positive");
    require(boundary_density_tol > 0.0, "stepper: boundary_density_tol must be positive");
  }

  bool operator==(const StepperConfig&) const = default;
};

struct Snapshot {
  double t = 0.0;
  std::size_t stage_index = 0;
  WaveFunction psi;
};

struct PropagationResult {
  WaveFunction final_state;
  std::vector<Snapshot> snapshots;
  double max_norm_drift = 0.0;
};

struct PropagateOptions {
  double t0 = 0.0;
  std::size_t stage_index = 0;
  /// Record the incoming state as the first snapshot.
  bool record_initial = true;
};

struct GroundStateOptions {
  /// Convergence threshold on |dE/dtau|.
  double tol = 1e-10;
  std::size_t max_steps = 1'000'000;
  /// Imaginary time step; 0 picks one inside the RK4 stability region.
  double dtau = 0.0;
};

struct GroundStateResult {
  WaveFunction psi;
  double energy = 0.0;
  double chemical_potential = 0.0;
  std::size_t steps = 0;
};

/// Number of edge samples (per side) inspected by the boundary-density check.
inline std::size_t boundary_band(std::size_t n) { return std::max<std::size_t>(1, n / 64); }

/// max edge density / max density.
inline double boundary_density_ratio(std::span<const double> n) {
  const std::size_t band = boundary_band(n.size());
  double edge = 0.0, peak = 0.0;
  for (std::size_t i = 0; i < n.size(); ++i) {
    peak = std::max(peak, n[i]);
    if (i < band || i >= n.size() - band) edge = std::max(edge, n[i]);
  }
  return peak > 0.0 ? edge / peak : 0.0;
}

/// Time stepper for i dpsi/dt = [-c d^2/dx^2 + V + Cn |psi|^2] psi on one grid.
/// Owns its FFT workspace and scratch buffers, so one instance per thread.
class Propagator {
 public:
  explicit Propagator(const Grid1D& grid, double kinetic_coeff = kStandardKinetic)
      : grid_(grid), kinetic_(kinetic_coeff), ws_(grid) {
    require(kinetic_coeff > 0.0, "propagator: kinetic coefficient must be positive");
    const std::size_t n = grid.size();
    for (auto* b : {&k1_, &k2_, &k3_, &k4_, &tmp_, &lap_}) b->resize(n);
  }

  const Grid1D& grid() const noexcept { return grid_; }
  double kinetic_coeff() const noexcept { return kinetic_; }
  SpectralWorkspace& workspace() noexcept { return ws_; }

  /// out = H psi with the spectral Laplacian.
  void apply_hamiltonian(std::span<const complex> psi, std::span<const double> v,
                         std::span<const double> cn, std::span<complex> out) {
    ws_.laplacian(psi, lap_);
    for (std::size_t i = 0; i < psi.size(); ++i)
      out[i] = -kinetic_ * lap_[i] + (v[i] + cn[i] * std::norm(psi[i])) * psi[i];
  }

  /// out = -i H psi.
  void apply_rhs(std::span<const complex> psi, std::span<const double> v,
                 std::span<const double> cn, std::span<complex> out) {
    apply_hamiltonian(psi, v, cn, out);
    for (auto& z : out) z = complex(z.imag(), -z.real());
  }

  /// One step of size dt. The state is not renormalised; throws
  /// IntegrationError on NaN or when the single-step norm change exceeds
  /// cfg.norm_drift_tol.
  void step(WaveFunction& psi, std::span<const double> v, std::span<const double> cn,
            const StepperConfig& cfg, double dt) {
    const double before = norm_sq(psi);
    if (cfg.method == Method::rk4_spectral)
      rk4_step(psi.amplitudes(), v, cn, dt);
    else
      split_step(psi.amplitudes(), v, cn, dt);
    const double after = norm_sq(psi);
    if (!std::isfinite(after))
      throw IntegrationError("step: non-finite amplitude encountered", 0.0, after);
    if (std::abs(after - before) > cfg.norm_drift_tol) {
      std::ostringstream os;
      os << "step: single-step norm change " << std::abs(after - before)
         << " exceeds tolerance; reduce dt";
      throw IntegrationError(os.str(), 0.0, std::abs(after - before));
    }
  }

  void step(WaveFunction& psi, std::span<const double> v, std::span<const double> cn,
            const StepperConfig& cfg) {
    step(psi, v, cn, cfg, cfg.dt);
  }

  /// Propagates for `duration`: round(duration/dt) steps, the last one sized
  /// to land exactly on `duration`. Snapshots every `snapshot_every` steps
  /// (0: endpoints only) and always at the end.
  PropagationResult propagate(const WaveFunction& psi0, std::span<const double> v,
                              std::span<const double> cn, double duration,
                              const StepperConfig& cfg, std::size_t snapshot_every,
                              const PropagateOptions& opts = {}) {
    cfg.validate();
    require(duration >= 0.0 && std::isfinite(duration), "propagate: duration must be >= 0");
    check_lengths(psi0, v, cn, "propagate");

    PropagationResult out{psi0, {}, 0.0};
    if (opts.record_initial) out.snapshots.push_back({opts.t0, opts.stage_index, psi0});
    if (duration == 0.0) return out;

    const auto steps = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(duration / cfg.dt)));
    const double last_dt = duration - static_cast<double>(steps - 1) * cfg.dt;
    const double norm0 = norm_sq(psi0);
    WaveFunction& psi = out.final_state;

    for (std::size_t s = 1; s <= steps; ++s) {
      const double h = (s == steps) ? last_dt : cfg.dt;
      const double t = (s == steps) ? opts.t0 + duration
                                    : opts.t0 + static_cast<double>(s) * cfg.dt;
      try {
        step(psi, v, cn, cfg, h);
      } catch (const IntegrationError& e) {
        throw IntegrationError(std::string(e.what()) + " (t=" + std::to_string(t) + ")", t,
                               e.drift());
      }
      const double drift = std::abs(norm_sq(psi) - norm0);
      out.max_norm_drift = std::max(out.max_norm_drift, drift);
      if (drift > cfg.norm_drift_tol) {
        std::ostringstream os;
        os << "propagate: cumulative norm drift " << drift << " exceeds " << cfg.norm_drift_tol
           << " at t=" << t;
        throw IntegrationError(os.str(), t, drift);
      }
      const bool snap = s == steps || (snapshot_every > 0 && s % snapshot_every == 0);
      if (snap) {
        const double ratio = boundary_density_ratio(density(psi));
        if (ratio > cfg.boundary_density_tol) {
          std::ostringstream os;
          os << "propagate: boundary density ratio " << ratio << " exceeds "
             << cfg.boundary_density_tol << " at t=" << t << "; enlarge the grid";
          throw IntegrationError(os.str(), t, drift);
        }
        out.snapshots.push_back({t, opts.stage_index, psi});
      }
    }
    return out;
  }

  GroundStateResult ground_state(std::span<const double> v, std::span<const double> cn,
                                 const WaveFunction& guess, const GroundStateOptions& opts = {}) {
    require(opts.tol > 0.0, "ground_state: tol must be positive");
    check_lengths(guess, v, cn, "ground_state");
    WaveFunction psi = normalized(guess);
    auto a = psi.amplitudes();

    double dtau = opts.dtau;
    if (dtau <= 0.0) {
      const double kmax = std::numbers::pi / grid_.dx();
      double vmax = 0.0, cmax = 0.0, nmax = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) {
        vmax = std::max(vmax, std::abs(v[i]));
        cmax = std::max(cmax, std::abs(cn[i]));
        nmax = std::max(nmax, std::norm(a[i]));
      }
      const double spectral_radius = kinetic_ * kmax * kmax + vmax + 2.0 * cmax * nmax;
      // RK4 is stable on the negative real axis up to |z| ~ 2.78.
      dtau = std::min(1e-3, 1.5 / spectral_radius);
    }

    constexpr std::size_t check_every = 20;
    double energy = expectation_energy(psi, v, cn, ws_, kinetic_);
    for (std::size_t s = 1; s <= opts.max_steps; ++s) {
      imaginary_rk4_step(a, v, cn, dtau);
      normalize(psi);
      if (!psi.all_finite())
        throw IntegrationError("ground_state: non-finite amplitude", static_cast<double>(s) * dtau, 0.0);
      if (s % check_every == 0) {
        const double e = expectation_energy(psi, v, cn, ws_, kinetic_);
        const double rate = std::abs(energy - e) / (static_cast<double>(check_every) * dtau);
        energy = e;
        if (rate < opts.tol) {
          // The flow keeps a real guess real and the ground state is nodeless,
          // so only roundoff in the far tails can flip sign.
          for (auto& z : a) z = std::abs(z.real());
          normalize(psi);
          GroundStateResult r{psi, expectation_energy(psi, v, cn, ws_, kinetic_), 0.0, s};
          r.chemical_potential = chemical_potential(psi.amplitudes(), v, cn);
          return r;
        }
      }
    }
    throw IntegrationError("ground_state: no convergence within " + std::to_string(opts.max_steps) +
                               " steps",
                           static_cast<double>(opts.max_steps) * dtau, 0.0);
  }

 private:
  void rk4_step(std::span<complex> psi, std::span<const double> v, std::span<const double> cn,
                double dt) {
    const std::size_t n = psi.size();
    apply_rhs(psi, v, cn, k1_);
    for (std::size_t i = 0; i < n; ++i) tmp_[i] = psi[i] + 0.5 * dt * k1_[i];
    apply_rhs(tmp_, v, cn, k2_);
    for (std::size_t i = 0; i < n; ++i) tmp_[i] = psi[i] + 0.5 * dt * k2_[i];
    apply_rhs(tmp_, v, cn, k3_);
    for (std::size_t i = 0; i < n; ++i) tmp_[i] = psi[i] + dt * k3_[i];
    apply_rhs(tmp_, v, cn, k4_);
    const double w = dt / 6.0;
    for (std::size_t i = 0; i < n; ++i)
      psi[i] += w * (k1_[i] + 2.0 * k2_[i] + 2.0 * k3_[i] + k4_[i]);
  }

  // Strang splitting: half kinetic, full potential + nonlinear phase, half kinetic.
  void split_step(std::span<complex> psi, std::span<const double> v, std::span<const double> cn,
                  double dt) {
    const auto& half = kinetic_phase(dt);
    ws_.apply_multiplier(psi, psi, half);
    for (std::size_t i = 0; i < psi.size(); ++i)
      psi[i] *= std::polar(1.0, -dt * (v[i] + cn[i] * std::norm(psi[i])));
    ws_.apply_multiplier(psi, psi, half);
  }

  const std::vector<complex>& kinetic_phase(double dt) {
    auto it = half_kinetic_.find(dt);
    if (it != half_kinetic_.end()) return it->second;
    std::vector<complex> ph(ws_.size());
    const auto k2 = ws_.k_squared();
    for (std::size_t j = 0; j < ph.size(); ++j) ph[j] = std::polar(1.0, -0.5 * dt * kinetic_ * k2[j]);
    return half_kinetic_.emplace(dt, std::move(ph)).first->second;
  }

  double chemical_potential(std::span<const complex> psi, std::span<const double> v,
                            std::span<const double> cn) {
    apply_hamiltonian(psi, v, cn, tmp_);
    complex num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < psi.size(); ++i) {
      num += std::conj(psi[i]) * tmp_[i];
      den += std::norm(psi[i]);
    }
    return num.real() / den;
  }

  // dpsi/dtau = -(H - mu[psi]) psi. The mu shift makes the exact stationary
  // state a fixed point of the discrete flow.
  void imaginary_rhs(std::span<const complex> psi, std::span<const double> v,
                     std::span<const double> cn, std::span<complex> out) {
    apply_hamiltonian(psi, v, cn, out);
    complex num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < psi.size(); ++i) {
      num += std::conj(psi[i]) * out[i];
      den += std::norm(psi[i]);
    }
    const double mu = num.real() / den;
    for (std::size_t i = 0; i < psi.size(); ++i) out[i] = -(out[i] - mu * psi[i]);
  }

  void imaginary_rk4_step(std::span<complex> psi, std::span<const double> v,
                          std::span<const double> cn, double dt) {
    const std::size_t n = psi.size();
    imaginary_rhs(psi, v, cn, k1_);
    for (std::size_t i = 0; i < n; ++i) tmp_[i] = psi[i] + 0.5 * dt * k1_[i];
    imaginary_rhs(tmp_, v, cn, k2_);
    for (std::size_t i = 0; i < n; ++i) tmp_[i] = psi[i] + 0.5 * dt * k2_[i];
    imaginary_rhs(tmp_, v, cn, k3_);
    for (std::size_t i = 0; i < n; ++i) tmp_[i] = psi[i] + dt * k3_[i];
    imaginary_rhs(tmp_, v, cn, k4_);
    const double w = dt / 6.0;
    for (std::size_t i = 0; i < n; ++i)
      psi[i] += w * (k1_[i] + 2.0 * k2_[i] + 2.0 * k3_[i] + k4_[i]);
  }

  Grid1D grid_;
  double kinetic_;
  SpectralWorkspace ws_;
  std::vector<complex> k1_, k2_, k3_, k4_, tmp_, lap_;
  std::map<double, std::vector<complex>> half_kinetic_;
};

// ---------------------------------------------------------------------------
// Free-function forms
// ---------------------------------------------------------------------------

inline std::vector<complex> apply_rhs(const WaveFunction& psi, std::span<const double> v,
                                      std::span<const double> cn,
                                      double kinetic_coeff = kStandardKinetic) {
  check_lengths(psi, v, cn, "apply_rhs");
  Propagator p(psi.grid(), kinetic_coeff);
  std::vector<complex> out(psi.size());
  p.apply_rhs(psi.amplitudes(), v, cn, out);
  return out;
}

inline WaveFunction step(WaveFunction psi, std::span<const double> v, std::span<const double> cn,
                         const StepperConfig& cfg, double kinetic_coeff = kStandardKinetic) {
  cfg.validate();
  check_lengths(psi, v, cn, "step");
  Propagator p(psi.grid(), kinetic_coeff);
  p.step(psi, v, cn, cfg);
  return psi;
}

inline PropagationResult propagate(const WaveFunction& psi, const PotentialSpec& potential,
                                   const NonlinearitySpec& nonlinearity, double duration,
                                   const StepperConfig& cfg, std::size_t snapshot_every,
                                   double kinetic_coeff = kStandardKinetic,
                                   const PropagateOptions& opts = {}) {
  validate(potential);
  validate(nonlinearity);
  const auto v = sample_potential(potential, psi.grid());
  const auto cn = sample_nonlinearity(nonlinearity, psi.grid());
  Propagator p(psi.grid(), kinetic_coeff);
  return p.propagate(psi, v, cn, duration, cfg, snapshot_every, opts);
}

/// Oscillator-width Gaussian, the starting guess for imaginary time.
inline WaveFunction ground_state_guess(const Grid1D& grid, double half_strength,
                                       double kinetic_coeff) {
  const double width = std::pow(kinetic_coeff / half_strength, 0.25);
  WaveFunction psi(grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double u = grid.x(i) / width;
    psi[i] = std::exp(-0.5 * u * u);
  }
  normalize(psi);
  return psi;
}

inline GroundStateResult solve_ground_state(const PotentialSpec& potential,
                                            const NonlinearitySpec& nonlinearity,
                                            const Grid1D& grid, const GroundStateOptions& opts = {},
                                            double kinetic_coeff = kStandardKinetic) {
  validate(potential);
  validate(nonlinearity);
  const double h = harmonic_strength(potential);
  require(h > 0.0, "ground_state: potential is not confining (no harmonic term)");
  const auto v = sample_potential(potential, grid);
  const auto cn = sample_nonlinearity(nonlinearity, grid);
  Propagator p(grid, kinetic_coeff);
  return p.ground_state(v, cn, ground_state_guess(grid, h, kinetic_coeff), opts);
}

inline WaveFunction ground_state(const PotentialSpec& potential, const NonlinearitySpec& nonlinearity,
                                 const Grid1D& grid, double tol = 1e-10,
                                 double kinetic_coeff = kStandardKinetic) {
  GroundStateOptions opts;
  opts.tol = tol;
  return solve_ground_state(potential, nonlinearity, grid, opts, kinetic_coeff).psi;
}

inline double l2_distance(const WaveFunction& a, const WaveFunction& b) {
  require(a.size() == b.size(), "l2_distance: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::norm(a[i] - b[i]);
  return std::sqrt(s * a.grid().dx());
}

/// L2 distance between the RK4 and split-step results after `duration`.
inline double cross_validate(const WaveFunction& psi0, const PotentialSpec& potential,
                             const NonlinearitySpec& nonlinearity, double duration,
                             StepperConfig cfg_rk4, StepperConfig cfg_split,
                             double kinetic_coeff = kStandardKinetic) {
  cfg_rk4.method = Method::rk4_spectral;
  cfg_split.method = Method::split_step;
  const auto a = propagate(psi0, potential, nonlinearity, duration, cfg_rk4, 0, kinetic_coeff);
  const auto b = propagate(psi0, potential, nonlinearity, duration, cfg_split, 0, kinetic_coeff);
  return l2_distance(a.final_state, b.final_state);
}

}  // namespace gpelab
