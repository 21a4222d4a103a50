#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "gpelab/error.hpp"
#include "gpelab/grid.hpp"

namespace gpelab {

// ---------------------------------------------------------------------------
// External potential V(x)
// ---------------------------------------------------------------------------

struct ZeroPotential {
  bool operator==(const ZeroPotential&) const = default;
};

/// V = half_strength * x^2.
struct HarmonicPotential {
  double half_strength = 0.5;
  bool operator==(const HarmonicPotential&) const = default;
};

/// V = amplitude * cos(wavenumber * x).
struct SinusoidalPotential {
  double amplitude = 1.0;
  double wavenumber = 1.0;
  bool operator==(const SinusoidalPotential&) const = default;
};

struct PotentialSpec;

struct SumPotential {
  std::vector<PotentialSpec> terms;
  bool operator==(const SumPotential&) const;
};

struct PotentialSpec {
  using Variant = std::variant<ZeroPotential, HarmonicPotential, SinusoidalPotential, SumPotential>;
  Variant value;

  PotentialSpec() : value(ZeroPotential{}) {}
  PotentialSpec(ZeroPotential v) : value(v) {}
  PotentialSpec(HarmonicPotential v) : value(v) {}
  PotentialSpec(SinusoidalPotential v) : value(v) {}
  PotentialSpec(SumPotential v) : value(std::move(v)) {}

  bool operator==(const PotentialSpec&) const = default;

  template <typename T>
  const T* get_if() const noexcept { return std::get_if<T>(&value); }
  template <typename T>
  T* get_if() noexcept { return std::get_if<T>(&value); }
};

inline bool SumPotential::operator==(const SumPotential& o) const { return terms == o.terms; }

inline void validate(const PotentialSpec& spec) {
  std::visit(
      [](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, HarmonicPotential>) {
          require(p.half_strength >= 0.0, "harmonic potential: half_strength must be >= 0");
        } else if constexpr (std::is_same_v<T, SinusoidalPotential>) {
          require(p.wavenumber > 0.0, "sinusoidal potential: wavenumber must be > 0");
        } else if constexpr (std::is_same_v<T, SumPotential>) {
          require(!p.terms.empty(), "sum potential: must have at least one term");
          for (const auto& t : p.terms) validate(t);
        }
      },
      spec.value);
}

inline double evaluate(const PotentialSpec& spec, double x) {
  return std::visit(
      [x](const auto& p) -> double {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, ZeroPotential>) {
          return 0.0;
        } else if constexpr (std::is_same_v<T, HarmonicPotential>) {
          return p.half_strength * x * x;
        } else if constexpr (std::is_same_v<T, SinusoidalPotential>) {
          return p.amplitude * std::cos(p.wavenumber * x);
        } else {
          double s = 0.0;
          for (const auto& t : p.terms) s += evaluate(t, x);
          return s;
        }
      },
      spec.value);
}

inline std::vector<double> sample_potential(const PotentialSpec& spec, const Grid1D& grid) {
  std::vector<double> v(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) v[i] = evaluate(spec, grid.x(i));
  return v;
}

/// Total harmonic coefficient; > 0 means the potential confines.
inline double harmonic_strength(const PotentialSpec& spec) {
  if (const auto* h = spec.get_if<HarmonicPotential>()) return h->half_strength;
  if (const auto* s = spec.get_if<SumPotential>()) {
    double total = 0.0;
    for (const auto& t : s->terms) total += harmonic_strength(t);
    return total;
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// Nonlinear coefficient Cn(x)
// ---------------------------------------------------------------------------

struct ConstantNonlinearity {
  double cn = 0.0;
  bool operator==(const ConstantNonlinearity&) const = default;
};

/// Cn(x) = amplitude * (cos(wavenumber * x) + offset).
struct SinusoidalNonlinearity {
  double amplitude = 0.0;
  double wavenumber = 1.0;
  double offset = 0.0;
  bool operator==(const SinusoidalNonlinearity&) const = default;
};

/// Cn(x) = cn * x^2 / x_scale.
struct ParabolicNonlinearity {
  double cn = 0.0;
  double x_scale = 1.0;
  bool operator==(const ParabolicNonlinearity&) const = default;
};

struct NonlinearitySpec {
  using Variant =
      std::variant<ConstantNonlinearity, SinusoidalNonlinearity, ParabolicNonlinearity>;
  Variant value;

  NonlinearitySpec() : value(ConstantNonlinearity{}) {}
  NonlinearitySpec(ConstantNonlinearity v) : value(v) {}
  NonlinearitySpec(SinusoidalNonlinearity v) : value(v) {}
  NonlinearitySpec(ParabolicNonlinearity v) : value(v) {}

  bool operator==(const NonlinearitySpec&) const = default;

  template <typename T>
  const T* get_if() const noexcept { return std::get_if<T>(&value); }
  template <typename T>
  T* get_if() noexcept { return std::get_if<T>(&value); }
};

inline void validate(const NonlinearitySpec& spec) {
  if (const auto* s = spec.get_if<SinusoidalNonlinearity>())
    require(s->wavenumber > 0.0, "sinusoidal nonlinearity: wavenumber must be > 0");
  if (const auto* p = spec.get_if<ParabolicNonlinearity>())
    require(p->x_scale > 0.0, "parabolic nonlinearity: x_scale must be > 0");
}

inline double evaluate(const NonlinearitySpec& spec, double x) {
  return std::visit(
      [x](const auto& c) -> double {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, ConstantNonlinearity>) {
          return c.cn;
        } else if constexpr (std::is_same_v<T, SinusoidalNonlinearity>) {
          return c.amplitude * (std::cos(c.wavenumber * x) + c.offset);
        } else {
          return c.cn * x * x / c.x_scale;
        }
      },
      spec.value);
}

inline std::vector<double> sample_nonlinearity(const NonlinearitySpec& spec, const Grid1D& grid) {
  std::vector<double> c(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) c[i] = evaluate(spec, grid.x(i));
  return c;
}

/// Constant schedules with Cn < 0 are allowed but flagged as nonstandard in
/// reports: every preset starts from positive scattering lengths.
inline bool is_negative_constant(const NonlinearitySpec& spec) {
  const auto* c = spec.get_if<ConstantNonlinearity>();
  return c != nullptr && c->cn < 0.0;
}

/// Trap potential plus the sinusoidal part of the nonlinearity read as a
/// potential landscape. Diagnostic only; propagation never uses it.
inline std::vector<double> effective_shape(const PotentialSpec& trap, const NonlinearitySpec& nonlin,
                                           const Grid1D& grid) {
  require(harmonic_strength(trap) > 0.0, "effective_shape: trap must contain a harmonic term");
  const auto* mod = nonlin.get_if<SinusoidalNonlinearity>();
  require(mod != nullptr, "effective_shape: nonlinearity must be sinusoidally modulated");
  std::vector<double> s = sample_potential(trap, grid);
  for (std::size_t i = 0; i < grid.size(); ++i)
    s[i] += mod->amplitude * std::cos(mod->wavenumber * grid.x(i));
  return s;
}

/// Positions of the local minima of `shape`, deepest first.
inline std::vector<double> shape_minima(std::span<const double> shape, const Grid1D& grid) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 1; i + 1 < shape.size(); ++i)
    if (shape[i] < shape[i - 1] && shape[i] <= shape[i + 1]) idx.push_back(i);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return shape[a] < shape[b]; });
  std::vector<double> xs;
  xs.reserve(idx.size());
  for (auto i : idx) xs.push_back(grid.x(i));
  return xs;
}

}  // namespace gpelab
