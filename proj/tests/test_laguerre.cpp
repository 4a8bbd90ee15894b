#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "sdnest/laguerre.hpp"

using namespace sdnest;

namespace {

// Transport cost of the two-cell split of the uniform square between the
// endpoints of the diagonal segment (0.1,0.1)-(0.9,0.9) at equal masses.
// Reducing to the diagonal coordinate u = x1 + x2 gives strip length
// sqrt(2)*min(u, 2-u) and per-strip second moment L^3/12, and the two bands
// integrate to exactly 0.22.
constexpr double kTwoCellDiagonalCost = 0.22;

}  // namespace

TEST(Tessellate, MassesPartitionUnity) {
  auto density = build_density(GridSpec{64}, Measure::product_xy);
  auto ts = make_targets(CurveFamily::e2_scaled_parabola, 5);
  auto tess = tessellate(density, squared_distance_cost(), ts,
                         {0.0, 0.1, -0.2, 0.05, 0.0});
  double sum = 0.0;
  for (double m : tess.mass) sum += m;
  EXPECT_NEAR(sum, 1.0, 1e-13);
  EXPECT_EQ(tess.label.size(), density.w.size());
}

TEST(Tessellate, EqualPotentialHalvesForSymmetricPair) {
  GridSpec g{512};
  auto density = build_density(g, Measure::uniform);
  auto ts = make_targets(CurveFamily::e1_line, 2);
  auto tess = tessellate(density, squared_distance_cost(), ts, {0.0, 0.0});
  EXPECT_NEAR(tess.mass[0], 0.5, 2.0 / g.m);
  EXPECT_NEAR(tess.mass[1], 0.5, 2.0 / g.m);
}

TEST(Tessellate, TiesGoToSmallestIndex) {
  GridSpec g{16};
  auto density = build_density(g, Measure::uniform);
  // Dyadic coordinates keep the midpoint scores exactly equal on the
  // anti-diagonal, so the tie actually materializes in floating point.
  auto ts = make_targets_explicit({0.25, 0.75},
                                  {Point{0.25, 0.25}, Point{0.75, 0.75}});
  auto tess = tessellate(density, squared_distance_cost(), ts, {0.0, 0.0});
  // Midpoints on the anti-diagonal x1 + x2 = 1 are equidistant from both
  // targets and must land in cell 0.
  for (int ix = 0; ix < g.m; ++ix) {
    int iy = g.m - 1 - ix;
    EXPECT_EQ(tess.label[g.index(ix, iy)], 0);
  }
}

TEST(Tessellate, ShiftInvariance) {
  auto density = build_density(GridSpec{32}, Measure::uniform);
  auto ts = make_targets(CurveFamily::e3_quarter_circle, 4);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (int rep = 0; rep < 5; ++rep) {
    std::vector<double> v{u(rng), u(rng), u(rng), u(rng)};
    EXPECT_TRUE(shift_invariance_check(density, squared_distance_cost(), ts, v,
                                       u(rng) * 10.0));
  }
}

TEST(DualU, EqualsMinimumOverTargets) {
  auto ts = make_targets(CurveFamily::e2_scaled_parabola, 6);
  CostSpec cost = squared_distance_cost();
  auto scores = cost_scores(cost, ts);
  std::vector<double> v{0.0, 0.2, -0.1, 0.3, 0.0, -0.2};
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 50; ++rep) {
    double x1 = u(rng), x2 = u(rng);
    double expect = std::numeric_limits<double>::infinity();
    for (int i = 0; i < ts.n(); ++i) {
      expect = std::min(expect, cost_value(cost, scores[i], x1, x2) - v[i]);
    }
    EXPECT_NEAR(dual_u(cost, ts, v, x1, x2), expect, 1e-14);
  }
}

TEST(TransportCost, MatchesDiagonalProfileForTwoCells) {
  GridSpec g{512};
  auto density = build_density(g, Measure::uniform);
  auto ts = make_targets(CurveFamily::e1_line, 2);
  auto tess = tessellate(density, squared_distance_cost(), ts, {0.0, 0.0});
  double w = transport_cost(tess, density, squared_distance_cost(), ts);
  EXPECT_NEAR(w, kTwoCellDiagonalCost, 1e-3);
}

TEST(CheckNested, ParallelBandsAreNested) {
  auto density = build_density(GridSpec{64}, Measure::uniform);
  auto ts = make_targets(CurveFamily::e1_line, 3);
  auto tess = tessellate(density, squared_distance_cost(), ts, {0.0, 0.0, 0.0});
  auto report = check_nested(tess);
  EXPECT_TRUE(report.nested);
  EXPECT_TRUE(report.violations.empty());
}

TEST(CheckNested, DetectsNonConsecutiveContact) {
  GridSpec g{8};
  Tessellation tess;
  tess.grid = g;
  tess.mass.assign(3, 0.0);
  tess.label.assign(g.cells(), 1);
  for (int iy = 0; iy < g.m; ++iy) {
    tess.label[g.index(0, iy)] = 0;
    tess.label[g.index(g.m - 1, iy)] = 2;
  }
  // Plant a cell of label 2 adjacent to the label-0 column.
  tess.label[g.index(1, 3)] = 2;
  auto report = check_nested(tess);
  EXPECT_FALSE(report.nested);
  ASSERT_FALSE(report.violations.empty());
}

TEST(CheckNested, SkipsAbsentLabels) {
  GridSpec g{8};
  Tessellation tess;
  tess.grid = g;
  tess.mass.assign(3, 0.0);
  tess.label.assign(g.cells(), 0);
  // Bands 0 and 2 touch, label 1 wins nothing: not a violation.
  for (int iy = 0; iy < g.m; ++iy) {
    for (int ix = g.m / 2; ix < g.m; ++ix) tess.label[g.index(ix, iy)] = 2;
  }
  EXPECT_TRUE(check_nested(tess).nested);
}
