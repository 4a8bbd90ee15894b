#include <gtest/gtest.h>

#include "sdnest/grid.hpp"

using namespace sdnest;

TEST(GridSpec, MidpointsAndIndexing) {
  GridSpec g{8};
  EXPECT_DOUBLE_EQ(g.h(), 0.125);
  EXPECT_EQ(g.cells(), 64u);
  EXPECT_DOUBLE_EQ(g.x1(0), 0.0625);
  EXPECT_DOUBLE_EQ(g.x2(7), 0.9375);
  EXPECT_EQ(g.index(3, 2), 19u);
}

TEST(GridSpec, RejectsTooCoarse) {
  GridSpec g{7};
  EXPECT_THROW(g.validate(), std::invalid_argument);
  EXPECT_THROW(build_density(GridSpec{4}, Measure::uniform), std::invalid_argument);
}

TEST(BuildDensity, UniformWeightsAreEqualAndNormalized) {
  auto f = build_density(GridSpec{16}, Measure::uniform);
  EXPECT_NEAR(f.total(), 1.0, 1e-13);
  for (double w : f.w) EXPECT_DOUBLE_EQ(w, 1.0 / 256.0);
}

TEST(BuildDensity, ProductMeasureMatchesDensityRatio) {
  GridSpec g{32};
  auto f = build_density(g, Measure::product_xy);
  EXPECT_NEAR(f.total(), 1.0, 1e-13);
  // Weight ratio between two cells equals the density ratio at midpoints.
  double r = f.w[g.index(31, 31)] / f.w[g.index(0, 0)];
  double expect = (g.x1(31) * g.x2(31)) / (g.x1(0) * g.x2(0));
  EXPECT_NEAR(r, expect, 1e-12);
}

TEST(BuildDensity, CustomDensityRenormalizes) {
  GridSpec g{8};
  auto f = build_density(g, [](double a, double) { return 3.0 + a; });
  EXPECT_NEAR(f.total(), 1.0, 1e-13);
}

TEST(BuildDensity, RejectsNegativeAndZeroDensities) {
  GridSpec g{8};
  EXPECT_THROW(build_density(g, [](double a, double) { return a - 0.5; }),
               std::invalid_argument);
  EXPECT_THROW(build_density(g, [](double, double) { return 0.0; }),
               std::invalid_argument);
}
