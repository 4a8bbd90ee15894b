#include <gtest/gtest.h>

#include <cmath>

#include "sdnest/targets.hpp"

using namespace sdnest;

TEST(MakeTargets, LineParametersAreEquidistant) {
  auto ts = make_targets(CurveFamily::e1_line, 3);
  ASSERT_EQ(ts.n(), 3);
  EXPECT_DOUBLE_EQ(ts.t[0], 0.1);
  EXPECT_DOUBLE_EQ(ts.t[1], 0.5);
  EXPECT_DOUBLE_EQ(ts.t[2], 0.9);
  EXPECT_DOUBLE_EQ(ts.pos[1].x, 0.5);
  EXPECT_DOUBLE_EQ(ts.pos[1].y, 0.5);
}

TEST(MakeTargets, ScaledParabolaEmbedding) {
  auto ts = make_targets(CurveFamily::e2_scaled_parabola, 3);
  EXPECT_DOUBLE_EQ(ts.t[0], 0.0);
  EXPECT_DOUBLE_EQ(ts.t[2], 1.0);
  double e = std::exp(1.0);
  EXPECT_NEAR(ts.pos[2].y, 1.0 / (e * e), 1e-15);
}

TEST(MakeTargets, QuarterCircleStaysOnUnitCircle) {
  auto ts = make_targets(CurveFamily::e3_quarter_circle, 12);
  for (const auto& p : ts.pos) {
    EXPECT_NEAR(p.x * p.x + p.y * p.y, 1.0, 1e-14);
  }
  double pi = std::acos(-1.0);
  EXPECT_NEAR(ts.t.front(), pi / 8.0, 1e-15);
  EXPECT_NEAR(ts.t.back(), 3.0 * pi / 8.0, 1e-15);
}

TEST(MakeTargets, ParabolaIntervalDependsOnCount) {
  auto ts = make_targets(CurveFamily::e4_parabola, 6);
  EXPECT_NEAR(ts.t[0], 1.0 / 7.0, 1e-15);
  EXPECT_NEAR(ts.t[5], 6.0 / 7.0, 1e-15);
  // Spacing 1/(n+1) throughout.
  for (int i = 0; i + 1 < 6; ++i) {
    EXPECT_NEAR(ts.t[i + 1] - ts.t[i], 1.0 / 7.0, 1e-15);
  }
}

TEST(MakeTargets, ExplicitValidatesOrdering) {
  EXPECT_THROW(
      make_targets_explicit({0.2, 0.2}, {Point{0.2, 0.0}, Point{0.2, 0.1}}),
      std::invalid_argument);
  auto ts = make_targets_explicit({0.1, 0.4}, {Point{0.1, 0.0}, Point{0.4, 0.2}});
  EXPECT_EQ(ts.n(), 2);
}

TEST(CostScores, SquaredDistanceRecoversCost) {
  auto ts = make_targets(CurveFamily::e2_scaled_parabola, 4);
  CostSpec cost = squared_distance_cost();
  auto scores = cost_scores(cost, ts);
  double x1 = 0.31, x2 = 0.77;
  for (int i = 0; i < ts.n(); ++i) {
    double dx = x1 - ts.pos[i].x, dy = x2 - ts.pos[i].y;
    EXPECT_NEAR(cost_value(cost, scores[i], x1, x2), dx * dx + dy * dy, 1e-14);
  }
}

TEST(CostScores, BilinearRecoversCost) {
  auto ts = make_targets_explicit({0.25, 0.5, 0.75},
                                  {Point{0.25, 0.0}, Point{0.5, 0.0}, Point{0.75, 0.0}});
  CostSpec cost = bilinear_cost([](double y) { return y * y / 8.0; });
  auto scores = cost_scores(cost, ts);
  double x1 = 0.6, x2 = 0.4;
  for (int i = 0; i < ts.n(); ++i) {
    double y = ts.t[i];
    EXPECT_NEAR(cost_value(cost, scores[i], x1, x2),
                -x1 * y - x2 * y * y / 8.0, 1e-15);
  }
}

TEST(CostDifferenceField, MatchesDirectDifference) {
  GridSpec g{8};
  auto ts = make_targets(CurveFamily::e3_quarter_circle, 3);
  CostSpec cost = squared_distance_cost();
  auto scores = cost_scores(cost, ts);
  auto field = cost_difference_field(g, cost, ts, 1);
  for (int iy = 0; iy < g.m; ++iy) {
    for (int ix = 0; ix < g.m; ++ix) {
      double x1 = g.x1(ix), x2 = g.x2(iy);
      double direct = cost_value(cost, scores[2], x1, x2) -
                      cost_value(cost, scores[1], x1, x2);
      EXPECT_NEAR(field[g.index(ix, iy)], direct, 1e-13);
    }
  }
}

TEST(SuperlevelMask, ThresholdIsInclusive) {
  std::vector<double> f{-1.0, 0.0, 0.5, 2.0};
  auto mask = superlevel_mask(f, 0.5);
  EXPECT_EQ(mask, (std::vector<std::uint8_t>{0, 0, 1, 1}));
}

TEST(TargetDistance, FollowsCostFamily) {
  auto ts = make_targets(CurveFamily::e1_line, 3);
  EXPECT_NEAR(target_distance(squared_distance_cost(), ts, 0, 2),
              0.8 * std::sqrt(2.0), 1e-14);
  CostSpec bil = bilinear_cost([](double y) { return y; });
  EXPECT_NEAR(target_distance(bil, ts, 0, 2), 0.8, 1e-14);
}
