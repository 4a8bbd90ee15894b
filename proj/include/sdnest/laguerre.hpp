#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "sdnest/grid.hpp"
#include "sdnest/targets.hpp"

namespace sdnest {

// Laguerre tessellation of the grid: label[c] is the index minimizing
// c(x_c, y_i) - v_i (smallest index on ties), mass[i] the aggregated weight
// of cells labeled i, summed in row-major grid order.
struct Tessellation {
  GridSpec grid;
  std::vector<std::int32_t> label;
  std::vector<double> mass;
  std::vector<double> v;
};

inline Tessellation tessellate(const DensityField& density, const CostSpec& cost,
                               const TargetSet& targets,
                               const std::vector<double>& v) {
  const int n = targets.n();
  if (static_cast<int>(v.size()) != n) {
    throw std::invalid_argument("tessellate: potential size mismatch");
  }
  auto scores = cost_scores(cost, targets);
  Tessellation tess;
  tess.grid = density.grid;
  tess.v = v;
  tess.label.resize(density.grid.cells());
  tess.mass.assign(n, 0.0);
  const int m = density.grid.m;
  for (int iy = 0; iy < m; ++iy) {
    const double x2 = density.grid.x2(iy);
    for (int ix = 0; ix < m; ++ix) {
      const double x1 = density.grid.x1(ix);
      double best = scores[0].at(x1, x2) - v[0];
      int lab = 0;
      for (int i = 1; i < n; ++i) {
        double s = scores[i].at(x1, x2) - v[i];
        if (s < best) {
          best = s;
          lab = i;
        }
      }
      const std::size_t c = density.grid.index(ix, iy);
      tess.label[c] = lab;
      tess.mass[lab] += density.w[c];
    }
  }
  return tess;
}

// Labels are invariant under a constant shift of all potentials.
inline bool shift_invariance_check(const DensityField& density,
                                   const CostSpec& cost, const TargetSet& targets,
                                   const std::vector<double>& v, double delta) {
  std::vector<double> shifted = v;
  for (double& x : shifted) x += delta;
  return tessellate(density, cost, targets, v).label ==
         tessellate(density, cost, targets, shifted).label;
}

// u(x) = min_i { c(x, y_i) - v_i }, evaluated exactly at the query point.
inline double dual_u(const CostSpec& cost, const TargetSet& targets,
                     const std::vector<double>& v, double x1, double x2) {
  auto scores = cost_scores(cost, targets);
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < targets.n(); ++i) {
    double s = scores[i].at(x1, x2) - v[i];
    if (s < best) best = s;
  }
  return best + cost_common(cost, x1, x2);
}

// Integral of c(x, y_label(x)) against the source measure.
inline double transport_cost(const Tessellation& tess, const DensityField& density,
                             const CostSpec& cost, const TargetSet& targets) {
  if (tess.label.size() != density.w.size()) {
    throw std::invalid_argument("transport_cost: grid mismatch");
  }
  auto scores = cost_scores(cost, targets);
  double s = 0.0;
  const int m = density.grid.m;
  for (int iy = 0; iy < m; ++iy) {
    const double x2 = density.grid.x2(iy);
    for (int ix = 0; ix < m; ++ix) {
      const std::size_t c = density.grid.index(ix, iy);
      s += density.w[c] *
           cost_value(cost, scores[tess.label[c]], density.grid.x1(ix), x2);
    }
  }
  return s;
}

struct NestednessViolation {
  int ix = 0, iy = 0;   // cell
  int jx = 0, jy = 0;   // 4-adjacent neighbor
  std::int32_t a = 0;   // labels on the two sides
  std::int32_t b = 0;
};

struct NestednessReport {
  bool nested = true;
  bool all_present = true;  // every label wins at least one grid cell
  std::vector<NestednessViolation> violations;
};

// A tessellation is nested when consecutive cells are the only ones that
// touch: every 4-adjacent pair of grid cells with distinct labels must carry
// consecutive labels. Labels that win no grid cell are skipped, so bands
// around an empty cell may touch without penalty.
inline NestednessReport check_nested(const Tessellation& tess,
                                     std::size_t max_violations = 16) {
  const int m = tess.grid.m;
  const int n = static_cast<int>(tess.mass.size());
  NestednessReport report;
  std::vector<std::int32_t> rank(n, -1);
  {
    std::vector<std::uint8_t> present(n, 0);
    for (std::int32_t lab : tess.label) present[lab] = 1;
    std::int32_t r = 0;
    for (int i = 0; i < n; ++i) {
      if (present[i]) rank[i] = r++;
    }
    report.all_present = r == n;
  }
  auto visit = [&](int ix, int iy, int jx, int jy) {
    const std::int32_t a = tess.label[tess.grid.index(ix, iy)];
    const std::int32_t b = tess.label[tess.grid.index(jx, jy)];
    if (a == b) return;
    if (std::abs(rank[a] - rank[b]) <= 1) return;
    report.nested = false;
    if (report.violations.size() < max_violations) {
      report.violations.push_back(NestednessViolation{ix, iy, jx, jy, a, b});
    }
  };
  for (int iy = 0; iy < m; ++iy) {
    for (int ix = 0; ix < m; ++ix) {
      if (ix + 1 < m) visit(ix, iy, ix + 1, iy);
      if (iy + 1 < m) visit(ix, iy, ix, iy + 1);
    }
  }
  return report;
}

}  // namespace sdnest
