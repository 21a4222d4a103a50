#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "gpelab/error.hpp"
#include "gpelab/grid.hpp"
#include "gpelab/spectral.hpp"

namespace gpelab {

/// Kinetic prefactor for -c d^2/dx^2. 0.5 is hbar = m = omega = 1; 1.0 is the
/// hbar = 1, m = 1/2 convention the preset experiments use (trap x^2/4).
inline constexpr double kStandardKinetic = 0.5;
inline constexpr double kHalfMassKinetic = 1.0;

/// Complex field sampled on a grid.
class WaveFunction {
 public:
  explicit WaveFunction(const Grid1D& grid) : grid_(grid), amps_(grid.size()) {}

  WaveFunction(const Grid1D& grid, std::vector<complex> amplitudes)
      : grid_(grid), amps_(std::move(amplitudes)) {
    require(amps_.size() == grid_.size(), "wavefunction: amplitude count " +
                                              std::to_string(amps_.size()) +
                                              " does not match grid size " +
                                              std::to_string(grid_.size()));
  }

  const Grid1D& grid() const noexcept { return grid_; }
  std::size_t size() const noexcept { return amps_.size(); }

  std::span<complex> amplitudes() noexcept { return amps_; }
  std::span<const complex> amplitudes() const noexcept { return amps_; }

  complex& operator[](std::size_t i) noexcept { return amps_[i]; }
  const complex& operator[](std::size_t i) const noexcept { return amps_[i]; }

  bool all_finite() const noexcept {
    for (const auto& a : amps_)
      if (!std::isfinite(a.real()) || !std::isfinite(a.imag())) return false;
    return true;
  }

  bool operator==(const WaveFunction&) const = default;

 private:
  Grid1D grid_;
  std::vector<complex> amps_;
};

inline double norm_sq(const WaveFunction& psi) {
  double s = 0.0;
  for (const auto& a : psi.amplitudes()) s += std::norm(a);
  return s * psi.grid().dx();
}

inline std::vector<double> density(const WaveFunction& psi) {
  std::vector<double> n(psi.size());
  for (std::size_t i = 0; i < psi.size(); ++i) n[i] = std::norm(psi[i]);
  return n;
}

inline void normalize(WaveFunction& psi) {
  const double n = norm_sq(psi);
  require(n > 0.0 && std::isfinite(n), "normalize: field has zero or non-finite norm");
  const double s = 1.0 / std::sqrt(n);
  for (auto& a : psi.amplitudes()) a *= s;
}

inline WaveFunction normalized(WaveFunction psi) {
  normalize(psi);
  return psi;
}

/// Normalised exp(-(x-c)^2/(2w^2) + i p x). Throws when the packet is not
/// negligible (|psi| >= 1e-10) at the grid edges.
inline WaveFunction gaussian_packet(const Grid1D& grid, double center, double width,
                                    double momentum) {
  require(width > 0.0, "gaussian_packet: width must be positive");
  WaveFunction psi(grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double x = grid.x(i);
    const double u = (x - center) / width;
    psi[i] = std::exp(-0.5 * u * u) * std::polar(1.0, momentum * x);
  }
  normalize(psi);
  const double edge = std::max(std::abs(psi[0]), std::abs(psi[grid.size() - 1]));
  require(edge < 1e-10, "gaussian_packet: packet touches the grid boundary");
  return psi;
}

inline double mean_position(const WaveFunction& psi) {
  double s = 0.0;
  for (std::size_t i = 0; i < psi.size(); ++i) s += psi.grid().x(i) * std::norm(psi[i]);
  return s * psi.grid().dx() / norm_sq(psi);
}

/// sqrt(<(x - <x>)^2>).
inline double rms_width(const WaveFunction& psi) {
  const double mu = mean_position(psi);
  double s = 0.0;
  for (std::size_t i = 0; i < psi.size(); ++i) {
    const double d = psi.grid().x(i) - mu;
    s += d * d * std::norm(psi[i]);
  }
  return std::sqrt(s * psi.grid().dx() / norm_sq(psi));
}

/// Continuous-transform samples psi~(k_j) = dx/sqrt(2 pi) sum_i psi_i e^{-i k_j x_i},
/// so that sum |psi~|^2 dk equals sum |psi|^2 dx.
inline std::vector<complex> momentum_amplitudes(const WaveFunction& psi) {
  const Grid1D& g = psi.grid();
  SpectralWorkspace ws(g);
  std::vector<complex> out(g.size());
  ws.forward(psi.amplitudes(), out);
  const double pref = g.dx() / std::sqrt(2.0 * std::numbers::pi);
  for (std::size_t j = 0; j < g.size(); ++j) {
    // The DFT phase is referenced to x_min rather than 0.
    out[j] *= pref * std::polar(1.0, -g.wavenumber(j) * g.x_min());
  }
  return out;
}

inline double mean_momentum(const WaveFunction& psi) {
  const auto phi = momentum_amplitudes(psi);
  double s = 0.0, w = 0.0;
  for (std::size_t j = 0; j < phi.size(); ++j) {
    s += psi.grid().wavenumber(j) * std::norm(phi[j]);
    w += std::norm(phi[j]);
  }
  return s / w;
}

inline void check_lengths(const WaveFunction& psi, std::span<const double> v,
                          std::span<const double> cn, const char* who) {
  if (v.size() != psi.size() || cn.size() != psi.size())
    fail(ErrorCategory::invalid_argument,
         std::string(who) + ": potential/nonlinearity arrays do not match the grid");
}

/// E = sum[ psi* (-c d^2 psi) + V |psi|^2 + Cn |psi|^4 / 2 ] dx.
inline double expectation_energy(const WaveFunction& psi, std::span<const double> v,
                                 std::span<const double> cn, SpectralWorkspace& ws,
                                 double kinetic_coeff = kStandardKinetic) {
  check_lengths(psi, v, cn, "expectation_energy");
  std::vector<complex> lap(psi.size());
  ws.laplacian(psi.amplitudes(), lap);
  complex e = 0.0;
  for (std::size_t i = 0; i < psi.size(); ++i) {
    const double n = std::norm(psi[i]);
    e += std::conj(psi[i]) * (-kinetic_coeff * lap[i]) + v[i] * n + 0.5 * cn[i] * n * n;
  }
  return e.real() * psi.grid().dx();
}

inline double expectation_energy(const WaveFunction& psi, std::span<const double> v,
                                 std::span<const double> cn,
                                 double kinetic_coeff = kStandardKinetic) {
  SpectralWorkspace ws(psi.grid());
  return expectation_energy(psi, v, cn, ws, kinetic_coeff);
}

}  // namespace gpelab
