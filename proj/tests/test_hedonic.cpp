#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "sdnest/grid.hpp"
#include "sdnest/hedonic.hpp"
#include "sdnest/targets.hpp"

namespace {

using namespace sdnest;

HedonicProblem pair_problem(CurveFamily family, int n, int m) {
  HedonicProblem p;
  p.density1 = build_density(GridSpec{m}, Measure::uniform);
  p.density2 = build_density(GridSpec{m}, Measure::product_xy);
  p.cost = squared_distance_cost();
  p.targets = make_targets(family, n);
  return p;
}

double shifted_linf(const std::vector<double>& a, const std::vector<double>& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::abs((a[i] - a[0]) - (b[i] - b[0])));
  }
  return worst;
}

TEST(HedonicResidual, SumsToZeroForAnyPrices) {
  HedonicProblem p = pair_problem(CurveFamily::e1_line, 4, 64);
  std::vector<double> v = {0.1, -0.3, 0.2, 0.05};
  std::vector<double> r = hedonic_residual(p, v);
  double sum = 0.0;
  for (double x : r) sum += x;
  EXPECT_NEAR(sum, 0.0, 1e-12);
}

TEST(HedonicResidual, VanishesForIdenticalDensitiesAtZeroPrices) {
  HedonicProblem p = pair_problem(CurveFamily::e1_line, 5, 64);
  p.density2 = p.density1;
  std::vector<double> r = hedonic_residual(p, std::vector<double>(5, 0.0));
  for (double x : r) EXPECT_EQ(x, 0.0);
}

// The diagonal line family ties whole rows of cells, and rounding of the
// shifted prices can flip a tied row wholesale, so the exact-equality gauge
// check uses a curve with no lattice-aligned ties.
TEST(HedonicResidual, InvariantUnderThePriceLevelGauge) {
  HedonicProblem p = pair_problem(CurveFamily::curve_pow15, 4, 64);
  std::vector<double> v = {0.0, 0.07, 0.12, 0.4};
  std::vector<double> r0 = hedonic_residual(p, v);
  HedonicProblem q = p;
  q.C += 2 * 0.37;
  for (double& x : v) x += 0.37;
  std::vector<double> r1 = hedonic_residual(q, v);
  for (std::size_t i = 0; i < r0.size(); ++i) EXPECT_EQ(r0[i], r1[i]);
}

TEST(HedonicNewton, IdenticalDensitiesSolveImmediately) {
  HedonicProblem p = pair_problem(CurveFamily::e1_line, 4, 128);
  p.density2 = p.density1;
  SolveReport rep = hedonic_newton(p);
  ASSERT_EQ(rep.status, SolveStatus::converged);
  EXPECT_EQ(rep.iterations, 0);
  EXPECT_EQ(rep.residual_norm, 0.0);
  for (double x : rep.v) EXPECT_EQ(x, 0.0);
}

TEST(HedonicNewton, LineFamilyConvergesInAFewIterations) {
  HedonicProblem p = pair_problem(CurveFamily::e1_line, 3, 256);
  SolveReport rep = hedonic_newton(p);
  ASSERT_EQ(rep.status, SolveStatus::converged);
  EXPECT_GE(rep.iterations, 1);
  EXPECT_LE(rep.iterations, 5);
  EXPECT_LE(rep.residual_norm, hedonic_effective_tolerance(p, 1e-7));
  EXPECT_TRUE(rep.nested);
  EXPECT_EQ(rep.v[0], 0.0);
}

TEST(HedonicNewton, DampedAgreesWithStandardOnNestedGeometry) {
  HedonicProblem p = pair_problem(CurveFamily::e1_line, 3, 256);
  SolveReport plain = hedonic_newton(p);
  SolveReport damped = hedonic_newton_damped(p);
  ASSERT_EQ(damped.status, SolveStatus::converged);
  EXPECT_EQ(damped.halvings, 0);
  EXPECT_LE(shifted_linf(plain.v, damped.v), 1e-12);
}

TEST(HedonicNewton, DampedReportsNestednessFailureOnZigzagTargets) {
  HedonicProblem p;
  p.density1 = build_density(GridSpec{128}, Measure::uniform);
  p.density2 = build_density(GridSpec{128}, Measure::product_xy);
  p.cost = squared_distance_cost();
  p.targets = make_targets_explicit({0.2, 0.5, 0.8},
                                    {{0.2, 0.8}, {0.8, 0.2}, {0.5, 0.5}});
  SolveReport rep = hedonic_newton_damped(p);
  EXPECT_EQ(rep.status, SolveStatus::not_nested);
  EXPECT_FALSE(rep.nested);
  EXPECT_FALSE(rep.note.empty());
}

TEST(HedonicNested, FinalResidualTelescopesToMachineZero) {
  HedonicProblem p = pair_problem(CurveFamily::e1_line, 3, 256);
  SolveReport rep = hedonic_nested(p);
  ASSERT_EQ(rep.status, SolveStatus::converged);
  EXPECT_LE(rep.residual_norm, 1e-12);
  EXPECT_TRUE(rep.nested);
  double total = 0.0;
  for (double nu : rep.nu) {
    EXPECT_GT(nu, 0.0);
    total += nu;
  }
  EXPECT_NEAR(total, 1.0, 1e-10);
}

TEST(HedonicNested, IdenticalDensitiesGiveZeroPrices) {
  HedonicProblem p = pair_problem(CurveFamily::e1_line, 4, 128);
  p.density2 = p.density1;
  SolveReport rep = hedonic_nested(p);
  ASSERT_EQ(rep.status, SolveStatus::converged);
  for (double x : rep.v) EXPECT_NEAR(x, 0.0, 1e-10);
}

TEST(HedonicNested, InnerBisectionAndNewtonAgree) {
  HedonicProblem p = pair_problem(CurveFamily::curve_pow15, 6, 256);
  SolveReport bisect = hedonic_nested(p);
  HedonicNestedOptions opts;
  opts.inner = InnerSolver::newton;
  SolveReport newton = hedonic_nested(p, opts);
  ASSERT_EQ(bisect.status, SolveStatus::converged);
  ASSERT_EQ(newton.status, SolveStatus::converged);
  EXPECT_LE(shifted_linf(bisect.v, newton.v), 1e-9);
}

TEST(HedonicNested, AgreesWithVectorNewtonOnTheCurveFamily) {
  HedonicProblem p = pair_problem(CurveFamily::curve_pow15, 12, 512);
  SolveReport newton = hedonic_newton(p);
  SolveReport nested = hedonic_nested(p);
  ASSERT_EQ(newton.status, SolveStatus::converged);
  ASSERT_EQ(nested.status, SolveStatus::converged);
  EXPECT_LE(shifted_linf(newton.v, nested.v), 1e-3);
  for (int i = 0; i < p.size(); ++i) {
    EXPECT_NEAR(newton.nu[i], nested.nu[i], 1e-3);
  }
}

TEST(HedonicNested, SideMarginalsAgreeAtTheSolution) {
  HedonicProblem p = pair_problem(CurveFamily::curve_pow15, 6, 256);
  SolveReport rep = hedonic_nested(p);
  ASSERT_EQ(rep.status, SolveStatus::converged);
  Tessellation t1 = tessellate(p.density1, p.cost, p.targets, rep.v);
  Tessellation t2 =
      tessellate(p.density2, p.cost, p.targets, complement_prices(p, rep.v));
  for (int i = 0; i < p.size(); ++i) {
    EXPECT_NEAR(t1.mass[i], t2.mass[i], hedonic_effective_tolerance(p, 1e-7));
  }
}

TEST(HedonicNestedness, TwoTargetsAreAlwaysNested) {
  HedonicProblem p = pair_problem(CurveFamily::e2_scaled_parabola, 2, 128);
  SolveReport rep = hedonic_nested(p);
  ASSERT_EQ(rep.status, SolveStatus::converged);
  HedonicNestedness verdict = hedonic_nestedness(p, rep.v);
  EXPECT_TRUE(verdict.hedonically_nested);
  EXPECT_TRUE(verdict.side1.nested);
  EXPECT_TRUE(verdict.side2.nested);
}

TEST(HedonicNestedness, LineFamilyIsNestedOnBothSides) {
  HedonicProblem p = pair_problem(CurveFamily::e1_line, 12, 256);
  SolveReport rep = hedonic_nested(p);
  ASSERT_EQ(rep.status, SolveStatus::converged);
  HedonicNestedness verdict = hedonic_nestedness(p, rep.v);
  EXPECT_TRUE(verdict.hedonically_nested);
}

TEST(HedonicNestedness, WideScaledParabolaFailsOnSideOne) {
  HedonicProblem p = pair_problem(CurveFamily::e2_scaled_parabola, 96, 512);
  SolveReport rep = hedonic_nested(p);
  EXPECT_EQ(rep.status, SolveStatus::not_nested);
  EXPECT_FALSE(rep.nested);
  HedonicNestedness verdict = hedonic_nestedness(p, rep.v);
  EXPECT_FALSE(verdict.hedonically_nested);
  EXPECT_FALSE(verdict.side1.nested);
  EXPECT_TRUE(verdict.side2.nested);
}

TEST(HedonicNestedness, ModerateScaledParabolaStaysNested) {
  HedonicProblem p = pair_problem(CurveFamily::e2_scaled_parabola, 12, 256);
  SolveReport rep = hedonic_nested(p);
  ASSERT_EQ(rep.status, SolveStatus::converged);
  EXPECT_TRUE(hedonic_nestedness(p, rep.v).hedonically_nested);
}

}  // namespace
