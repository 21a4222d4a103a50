#pragma once

#include <cmath>
#include <numbers>
#include <string>

#include "gpelab/error.hpp"
#include "gpelab/wavefunction.hpp"

namespace gpelab {

namespace constants {
inline constexpr double hbar = 1.054571817e-34;       // J s
inline constexpr double atomic_mass = 1.66053906660e-27;  // kg
inline constexpr double sodium23_mass = 22.98976928 * atomic_mass;
}  // namespace constants

struct PhysicalParams {
  double atom_mass = constants::sodium23_mass;  // kg
  double trap_omega = 2.0 * std::numbers::pi * 18.0;  // rad/s
  double n_atoms = 1.0;
  double a_intrinsic = 0.0;  // m
  double a_induced = 0.0;    // m

  void validate() const {
    require(atom_mass > 0.0, "physical params: atom_mass must be positive");
    require(trap_omega > 0.0, "physical params: trap_omega must be positive");
    require(n_atoms >= 1.0, "physical params: n_atoms must be >= 1");
  }
};

enum class Quantity { length, time, cn_si_to_ho };

/// Oscillator length sqrt(hbar/(m omega)).
inline double oscillator_length(const PhysicalParams& p) {
  p.validate();
  return std::sqrt(constants::hbar / (p.atom_mass * p.trap_omega));
}

/// One dimensionless length unit in metres. With kinetic coefficient c the
/// unit is the oscillator length divided by sqrt(2c).
inline double length_unit(const PhysicalParams& p, double kinetic_coeff = kStandardKinetic) {
  return oscillator_length(p) / std::sqrt(2.0 * kinetic_coeff);
}

inline double time_unit(const PhysicalParams& p) {
  p.validate();
  return 1.0 / p.trap_omega;
}

/// 3D contact coupling 4 pi N hbar^2 (a_intrinsic + a_induced) / m, in J m^3.
inline double coupling_3d(const PhysicalParams& p) {
  p.validate();
  return 4.0 * std::numbers::pi * p.n_atoms * constants::hbar * constants::hbar *
         (p.a_intrinsic + p.a_induced) / p.atom_mass;
}

/// Dimensionless 1D Cn: the 3D coupling spread over `transverse_area` (m^2),
/// in units of hbar omega times one length unit.
inline double cn_dimensionless(const PhysicalParams& p, double transverse_area,
                               double kinetic_coeff = kStandardKinetic) {
  require(transverse_area > 0.0, "cn_dimensionless: transverse area must be positive");
  const double g1d = coupling_3d(p) / transverse_area;  // J m
  return g1d / (constants::hbar * p.trap_omega * length_unit(p, kinetic_coeff));
}

/// length / time: dimensionless value -> SI (m, s).
/// cn_si_to_ho: `value` is the effective transverse area in m^2.
inline double unit_convert(const PhysicalParams& p, double value, Quantity kind,
                           double kinetic_coeff = kStandardKinetic) {
  switch (kind) {
    case Quantity::length: return value * length_unit(p, kinetic_coeff);
    case Quantity::time: return value * time_unit(p);
    case Quantity::cn_si_to_ho: return cn_dimensionless(p, value, kinetic_coeff);
  }
  return 0.0;
}

struct HeatingRate {
  double rate = 0.0;
  /// False when |detuning| is not at least ten times both rabi and gamma.
  bool in_validity_regime = true;
  std::string warning;
};

/// Photon-recoil heating rate gamma * (rabi / detuning)^2.
inline HeatingRate heating_rate(double gamma, double rabi, double detuning) {
  if (detuning == 0.0) fail(ErrorCategory::invalid_argument, "heating_rate: zero detuning");
  HeatingRate h;
  h.rate = gamma * (rabi * rabi) / (detuning * detuning);
  const double d = std::abs(detuning);
  if (d < 10.0 * std::abs(rabi) || d < 10.0 * std::abs(gamma)) {
    h.in_validity_regime = false;
    h.warning = "far-detuned approximation not valid: |detuning| should exceed rabi and gamma by 10x";
  }
  return h;
}

}  // namespace gpelab
