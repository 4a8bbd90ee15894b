#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sdnest/grid.hpp"

namespace sdnest {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

enum class CurveFamily {
  e1_line,             // y(t) = (t, t),           t in [1/10, 9/10]
  e2_scaled_parabola,  // y(t) = (t, (t/e)^2),     t in [0, 1]
  e3_quarter_circle,   // y(t) = (cos t, sin t),   t in [pi/8, 3pi/8]
  e4_parabola,         // y(t) = (t, t^2),         t in [1/(n+1), n/(n+1)]
  curve_pow15,         // y(t) = (t, t^1.5),       t in [1/(n+1), n/(n+1)]
  explicit_points
};

inline const char* curve_family_name(CurveFamily f) {
  switch (f) {
    case CurveFamily::e1_line: return "E1";
    case CurveFamily::e2_scaled_parabola: return "E2";
    case CurveFamily::e3_quarter_circle: return "E3";
    case CurveFamily::e4_parabola: return "E4";
    case CurveFamily::curve_pow15: return "curve-x^1.5";
    case CurveFamily::explicit_points: return "explicit";
  }
  return "?";
}

// Ordered one-dimensional target family: strictly increasing scalar
// parameters t_i with a planar embedding y(t_i) used by the squared-distance
// cost. The bilinear cost reads the scalar parameter directly.
struct TargetSet {
  std::vector<double> t;
  std::vector<Point> pos;

  int n() const { return static_cast<int>(t.size()); }

  void validate() const {
    if (t.empty() || t.size() != pos.size()) {
      throw std::invalid_argument("TargetSet: inconsistent sizes");
    }
    for (std::size_t i = 1; i < t.size(); ++i) {
      if (!(t[i] > t[i - 1])) {
        throw std::invalid_argument(
            "TargetSet: parameters must be strictly increasing");
      }
    }
  }
};

inline TargetSet make_targets(CurveFamily family, int n) {
  if (n < 1) throw std::invalid_argument("make_targets: n must be positive");
  double a = 0.0, b = 1.0;
  std::function<Point(double)> curve;
  switch (family) {
    case CurveFamily::e1_line:
      a = 0.1; b = 0.9;
      curve = [](double t) { return Point{t, t}; };
      break;
    case CurveFamily::e2_scaled_parabola:
      a = 0.0; b = 1.0;
      curve = [](double t) {
        double s = t / std::exp(1.0);
        return Point{t, s * s};
      };
      break;
    case CurveFamily::e3_quarter_circle:
      a = std::acos(-1.0) / 8.0; b = 3.0 * std::acos(-1.0) / 8.0;
      curve = [](double t) { return Point{std::cos(t), std::sin(t)}; };
      break;
    case CurveFamily::e4_parabola:
      a = 1.0 / (n + 1); b = static_cast<double>(n) / (n + 1);
      curve = [](double t) { return Point{t, t * t}; };
      break;
    case CurveFamily::curve_pow15:
      a = 1.0 / (n + 1); b = static_cast<double>(n) / (n + 1);
      curve = [](double t) { return Point{t, std::pow(t, 1.5)}; };
      break;
    case CurveFamily::explicit_points:
      throw std::invalid_argument("make_targets: explicit family needs points");
  }
  TargetSet ts;
  ts.t.resize(n);
  ts.pos.resize(n);
  for (int i = 0; i < n; ++i) {
    double t = (n == 1) ? 0.5 * (a + b) : a + (b - a) * i / (n - 1);
    ts.t[i] = t;
    ts.pos[i] = curve(t);
  }
  ts.validate();
  return ts;
}

inline TargetSet make_targets_explicit(std::vector<double> t, std::vector<Point> pos) {
  TargetSet ts{std::move(t), std::move(pos)};
  ts.validate();
  return ts;
}

enum class CostFamily { squared_distance, bilinear };

// Transport cost family. squared_distance pairs grid points with the planar
// embeddings; bilinear is c(x, y) = -x1*y - x2*F(y) on the scalar parameters,
// with F supplied by the caller (increasing on the parameter range).
struct CostSpec {
  CostFamily family = CostFamily::squared_distance;
  std::function<double(double)> bilinear_f;

  void validate() const {
    if (family == CostFamily::bilinear && !bilinear_f) {
      throw std::invalid_argument("CostSpec: bilinear cost needs F");
    }
  }
};

inline CostSpec squared_distance_cost() { return CostSpec{}; }

inline CostSpec bilinear_cost(std::function<double(double)> f) {
  return CostSpec{CostFamily::bilinear, std::move(f)};
}

// Cell scores: score_i(x) = ax*x1 + ay*x2 + d satisfies
// c(x, y_i) = score_i(x) + common(x) with a common term independent of i,
// so Laguerre comparisons reduce to affine comparisons.
struct AffineScore {
  double ax = 0.0;
  double ay = 0.0;
  double d = 0.0;

  double at(double x1, double x2) const { return ax * x1 + ay * x2 + d; }
};

inline std::vector<AffineScore> cost_scores(const CostSpec& cost,
                                            const TargetSet& targets) {
  cost.validate();
  targets.validate();
  std::vector<AffineScore> s(targets.n());
  for (int i = 0; i < targets.n(); ++i) {
    if (cost.family == CostFamily::squared_distance) {
      const Point& p = targets.pos[i];
      s[i] = AffineScore{-2.0 * p.x, -2.0 * p.y, p.x * p.x + p.y * p.y};
    } else {
      double y = targets.t[i];
      s[i] = AffineScore{-y, -cost.bilinear_f(y), 0.0};
    }
  }
  return s;
}

// Common term dropped from the scores; add it back to recover c itself.
inline double cost_common(const CostSpec& cost, double x1, double x2) {
  return cost.family == CostFamily::squared_distance ? x1 * x1 + x2 * x2 : 0.0;
}

inline double cost_value(const CostSpec& cost, const AffineScore& s, double x1,
                         double x2) {
  return s.at(x1, x2) + cost_common(cost, x1, x2);
}

// Distance between targets in the metric the cost is Lipschitz against:
// embedded Euclidean distance for squared_distance, parameter distance for
// bilinear.
inline double target_distance(const CostSpec& cost, const TargetSet& targets,
                              int i, int j) {
  if (cost.family == CostFamily::squared_distance) {
    double dx = targets.pos[i].x - targets.pos[j].x;
    double dy = targets.pos[i].y - targets.pos[j].y;
    return std::sqrt(dx * dx + dy * dy);
  }
  return std::abs(targets.t[i] - targets.t[j]);
}

// g_i(x) = c(x, y_{i+1}) - c(x, y_i) evaluated at grid midpoints
// (0-based i, valid for i in [0, n-2]).
inline std::vector<double> cost_difference_field(const GridSpec& grid,
                                                 const CostSpec& cost,
                                                 const TargetSet& targets,
                                                 int i) {
  grid.validate();
  if (i < 0 || i + 1 >= targets.n()) {
    throw std::invalid_argument("cost_difference_field: index out of range");
  }
  auto scores = cost_scores(cost, targets);
  const AffineScore& lo = scores[i];
  const AffineScore& hi = scores[i + 1];
  AffineScore diff{hi.ax - lo.ax, hi.ay - lo.ay, hi.d - lo.d};
  std::vector<double> g(grid.cells());
  for (int iy = 0; iy < grid.m; ++iy) {
    double x2 = grid.x2(iy);
    for (int ix = 0; ix < grid.m; ++ix) {
      g[grid.index(ix, iy)] = diff.at(grid.x1(ix), x2);
    }
  }
  return g;
}

// Indicator of {g >= k} over grid cells.
inline std::vector<std::uint8_t> superlevel_mask(const std::vector<double>& field,
                                                 double k) {
  std::vector<std::uint8_t> mask(field.size());
  for (std::size_t i = 0; i < field.size(); ++i) {
    mask[i] = field[i] >= k ? 1 : 0;
  }
  return mask;
}

inline double masked_mass(const DensityField& density,
                          const std::vector<std::uint8_t>& mask) {
  if (mask.size() != density.w.size()) {
    throw std::invalid_argument("masked_mass: size mismatch");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) s += density.w[i];
  }
  return s;
}

}  // namespace sdnest
