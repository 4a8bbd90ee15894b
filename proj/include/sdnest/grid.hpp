#pragma once

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace sdnest {

// Midpoint discretization of the open unit square (0,1)^2 with m cells per
// axis. Cell (ix, iy) has midpoint ((ix+0.5)/m, (iy+0.5)/m) and flat index
// iy*m + ix.
struct GridSpec {
  int m = 512;

  double h() const { return 1.0 / m; }
  std::size_t cells() const { return static_cast<std::size_t>(m) * m; }
  double x1(int ix) const { return (ix + 0.5) * h(); }
  double x2(int iy) const { return (iy + 0.5) * h(); }
  std::size_t index(int ix, int iy) const {
    return static_cast<std::size_t>(iy) * m + ix;
  }

  void validate() const {
    if (m < 8) {
      throw std::invalid_argument("GridSpec: m must be at least 8, got " +
                                  std::to_string(m));
    }
  }
};

enum class Measure { uniform, product_xy };

inline const char* measure_name(Measure k) {
  return k == Measure::uniform ? "uniform" : "product_xy";
}

// Source measure as midpoint-rule weights on the grid, renormalized so the
// weights sum to one.
struct DensityField {
  GridSpec grid;
  std::vector<double> w;

  double total() const {
    double s = 0.0;
    for (double x : w) s += x;
    return s;
  }
};

inline DensityField build_density(GridSpec grid,
                                  const std::function<double(double, double)>& lambda) {
  grid.validate();
  DensityField f;
  f.grid = grid;
  f.w.resize(grid.cells());
  double sum = 0.0;
  for (int iy = 0; iy < grid.m; ++iy) {
    for (int ix = 0; ix < grid.m; ++ix) {
      double val = lambda(grid.x1(ix), grid.x2(iy));
      if (!(val >= 0.0)) {
        throw std::invalid_argument("build_density: density must be nonnegative");
      }
      f.w[grid.index(ix, iy)] = val;
      sum += val;
    }
  }
  if (!(sum > 0.0)) {
    throw std::invalid_argument("build_density: density integrates to zero");
  }
  for (double& x : f.w) x /= sum;
  return f;
}

inline DensityField build_density(GridSpec grid, Measure kind) {
  switch (kind) {
    case Measure::uniform:
      return build_density(grid, [](double, double) { return 1.0; });
    case Measure::product_xy:
      return build_density(grid, [](double a, double b) { return 4.0 * a * b; });
  }
  throw std::invalid_argument("build_density: unknown measure kind");
}

}  // namespace sdnest
