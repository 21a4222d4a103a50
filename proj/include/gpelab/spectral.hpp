#pragma once

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <mutex>
#include <span>
#include <vector>

#include "gpelab/grid.hpp"

namespace gpelab {

using complex = std::complex<double>;

namespace detail {

// The FFTW planner is not re-entrant; execution on distinct plans is.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace detail

/// Owns a forward/backward FFTW plan pair and aligned scratch buffers for one
/// grid size. Not shareable between threads; give each propagation its own.
class SpectralWorkspace {
 public:
  explicit SpectralWorkspace(const Grid1D& grid) : grid_(grid), n_(grid.size()) {
    std::lock_guard lock(detail::fftw_planner_mutex());
    in_ = fftw_alloc_complex(n_);
    out_ = fftw_alloc_complex(n_);
    const int n = static_cast<int>(n_);
    // FFTW_ESTIMATE keeps plan selection independent of timing noise, so
    // repeated runs are bit-identical.
    forward_ = fftw_plan_dft_1d(n, in_, out_, FFTW_FORWARD, FFTW_ESTIMATE);
    backward_ = fftw_plan_dft_1d(n, out_, in_, FFTW_BACKWARD, FFTW_ESTIMATE);
    ksq_.resize(n_);
    for (std::size_t j = 0; j < n_; ++j) {
      const double k = grid.wavenumber(j);
      ksq_[j] = k * k;
    }
  }

  SpectralWorkspace(const SpectralWorkspace&) = delete;
  SpectralWorkspace& operator=(const SpectralWorkspace&) = delete;

  ~SpectralWorkspace() {
    std::lock_guard lock(detail::fftw_planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
    fftw_free(in_);
    fftw_free(out_);
  }

  const Grid1D& grid() const noexcept { return grid_; }
  std::size_t size() const noexcept { return n_; }
  std::span<const double> k_squared() const noexcept { return ksq_; }

  /// Unnormalised DFT: out[j] = sum_i in[i] exp(-2 pi i i j / n).
  void forward(std::span<const complex> in, std::span<complex> out) {
    load(in);
    fftw_execute(forward_);
    store(out_, out);
  }

  /// Inverse DFT including the 1/n factor.
  void backward(std::span<const complex> in, std::span<complex> out) {
    auto* dst = reinterpret_cast<complex*>(out_);
    for (std::size_t i = 0; i < n_; ++i) dst[i] = in[i];
    fftw_execute(backward_);
    const double scale = 1.0 / static_cast<double>(n_);
    const auto* src = reinterpret_cast<const complex*>(in_);
    for (std::size_t i = 0; i < n_; ++i) out[i] = src[i] * scale;
  }

  /// Multiplies the spectrum of `in` by `multiplier` (FFT bin order) and
  /// transforms back. `in` and `out` may alias.
  void apply_multiplier(std::span<const complex> in, std::span<complex> out,
                        std::span<const complex> multiplier) {
    load(in);
    fftw_execute(forward_);
    auto* spec = reinterpret_cast<complex*>(out_);
    const double scale = 1.0 / static_cast<double>(n_);
    for (std::size_t j = 0; j < n_; ++j) spec[j] *= multiplier[j] * scale;
    fftw_execute(backward_);
    store(in_, out);
  }

  /// Second derivative by multiplication with -k^2 in Fourier space.
  void laplacian(std::span<const complex> in, std::span<complex> out) {
    load(in);
    fftw_execute(forward_);
    auto* spec = reinterpret_cast<complex*>(out_);
    const double scale = -1.0 / static_cast<double>(n_);
    for (std::size_t j = 0; j < n_; ++j) spec[j] *= ksq_[j] * scale;
    fftw_execute(backward_);
    store(in_, out);
  }

 private:
  void load(std::span<const complex> in) {
    auto* dst = reinterpret_cast<complex*>(in_);
    for (std::size_t i = 0; i < n_; ++i) dst[i] = in[i];
  }
  void store(const fftw_complex* buf, std::span<complex> out) const {
    const auto* src = reinterpret_cast<const complex*>(buf);
    for (std::size_t i = 0; i < n_; ++i) out[i] = src[i];
  }

  Grid1D grid_;
  std::size_t n_;
  fftw_complex* in_ = nullptr;
  fftw_complex* out_ = nullptr;
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
  std::vector<double> ksq_;
};

}  // namespace gpelab
