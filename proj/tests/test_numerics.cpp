#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "sdnest/numerics.hpp"

using namespace sdnest;

TEST(BisectRoot, FindsSmoothRoot) {
  auto r = bisect_root([](double x) { return std::cos(x); }, 0.0, 2.0, 1e-12);
  EXPECT_TRUE(r.ok());
  EXPECT_NEAR(r.x, std::acos(-1.0) / 2.0, 1e-11);
  // Halving [0,2] down to 1e-12 takes about 41 midpoint evaluations.
  EXPECT_NEAR(r.iterations, 41, 2);
}

TEST(BisectRoot, LocatesStaircaseJump) {
  auto step = [](double x) { return x < 0.3 ? 1.0 : -1.0; };
  auto r = bisect_root(step, 0.0, 1.0, 1e-10);
  EXPECT_TRUE(r.ok());
  EXPECT_NEAR(r.x, 0.3, 1e-9);
  // The final bracket straddles the jump.
  EXPECT_GT(r.f_lo, 0.0);
  EXPECT_LT(r.f_hi, 0.0);
}

TEST(BisectRoot, ReportsMissingSignChange) {
  auto r = bisect_root([](double x) { return 1.0 + x * x; }, -1.0, 1.0, 1e-10);
  EXPECT_EQ(r.status, RootStatus::no_sign_change);
}

TEST(SafeguardedNewton, ConvergesOnCubic) {
  auto f = [](double x, double& fx, double& dfx) {
    fx = x * x * x - 2.0 * x - 5.0;
    dfx = 3.0 * x * x - 2.0;
  };
  auto r = safeguarded_newton_root(f, 1.0, 3.0, 1e-13);
  EXPECT_TRUE(r.ok());
  EXPECT_NEAR(r.x, 2.0945514815423265, 1e-10);
  EXPECT_LT(r.iterations, 20);
}

TEST(SafeguardedNewton, SurvivesFlatDerivativeRegions) {
  // Derivative vanishes at the ends; the bisection fallback must engage.
  auto f = [](double x, double& fx, double& dfx) {
    fx = std::tanh(10.0 * (x - 0.7));
    dfx = 10.0 / std::pow(std::cosh(10.0 * (x - 0.7)), 2);
  };
  auto r = safeguarded_newton_root(f, -50.0, 50.0, 1e-12);
  EXPECT_TRUE(r.ok());
  EXPECT_NEAR(r.x, 0.7, 1e-9);
}

TEST(Softmin, WeightsSumToOneAndResistOverflow) {
  std::vector<double> v{1000.0, 1000.5, 999.0};
  auto w = softmin_weights(v);
  double s = w[0] + w[1] + w[2];
  EXPECT_NEAR(s, 1.0, 1e-15);
  EXPECT_GT(w[2], w[0]);
  EXPECT_GT(w[0], w[1]);
}

TEST(FdJacobian, MatchesAnalyticSoftminJacobian) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const int n = 5;
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);

  auto f = [](const Eigen::VectorXd& x) {
    std::vector<double> vv(x.data(), x.data() + x.size());
    auto w = softmin_weights(vv);
    return Eigen::Map<Eigen::VectorXd>(w.data(), w.size()).eval();
  };
  Eigen::VectorXd x0 = Eigen::Map<Eigen::VectorXd>(v.data(), n);
  Eigen::MatrixXd fd = fd_jacobian(f, x0);
  Eigen::MatrixXd exact = softmin_jacobian(v);
  EXPECT_LT((fd - exact).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(RestrictedSolve, RecoversMeanZeroStep) {
  const int n = 4;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::MatrixXd b(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) b(i, j) = u(rng);
  // Make the all-ones direction an exact kernel vector.
  Eigen::MatrixXd p = Eigen::MatrixXd::Identity(n, n) -
                      Eigen::MatrixXd::Constant(n, n, 1.0 / n);
  Eigen::MatrixXd j = b * p;
  Eigen::VectorXd s_true(n);
  s_true << 0.3, -0.5, 0.1, 0.1;
  auto res = restricted_solve(j, j * s_true);
  ASSERT_TRUE(res.ok);
  EXPECT_NEAR(res.step.sum(), 0.0, 1e-12);
  EXPECT_LT((res.step - s_true).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(RestrictedSolve, RejectsHopelesslySingularSystems) {
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(3, 3);
  Eigen::VectorXd r(3);
  r << 1.0, 0.0, -1.0;
  auto res = restricted_solve(j, r);
  EXPECT_FALSE(res.ok);
}
