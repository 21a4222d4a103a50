#pragma once

#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "gpelab/error.hpp"

namespace gpelab {

/// Uniform periodic grid. Sample i sits at x_min + i*dx; x_max is the wrap
/// point and is not itself a sample.
class Grid1D {
 public:
  Grid1D(double x_min, double x_max, std::size_t n_points)
      : x_min_(x_min), x_max_(x_max), n_(n_points) {
    require(x_max > x_min, "grid: x_max must exceed x_min");
    require(n_points >= 16, "grid: n_points must be at least 16");
    require((n_points & (n_points - 1)) == 0,
            "grid: n_points must be a power of two, got " + std::to_string(n_points));
  }

  double x_min() const noexcept { return x_min_; }
  double x_max() const noexcept { return x_max_; }
  std::size_t size() const noexcept { return n_; }
  double length() const noexcept { return x_max_ - x_min_; }
  double dx() const noexcept { return length() / static_cast<double>(n_); }
  double x(std::size_t i) const noexcept { return x_min_ + static_cast<double>(i) * dx(); }

  std::vector<double> positions() const {
    std::vector<double> xs(n_);
    for (std::size_t i = 0; i < n_; ++i) xs[i] = x(i);
    return xs;
  }

  /// Angular wavenumber of FFT bin j in standard (unshifted) order.
  double wavenumber(std::size_t j) const noexcept {
    const auto n = static_cast<long long>(n_);
    auto m = static_cast<long long>(j);
    if (m >= n / 2) m -= n;
    return 2.0 * std::numbers::pi * static_cast<double>(m) / length();
  }

  double dk() const noexcept { return 2.0 * std::numbers::pi / length(); }

  bool operator==(const Grid1D&) const = default;

 private:
  double x_min_;
  double x_max_;
  std::size_t n_;
};

inline Grid1D make_grid(double x_min, double x_max, std::size_t n_points) {
  return Grid1D(x_min, x_max, n_points);
}

/// Default production grid.
inline Grid1D default_grid() { return Grid1D(-40.0, 40.0, 1024); }

}  // namespace gpelab
