#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "hyperspline/error.hpp"
#include "hyperspline/solver.hpp"
#include "oracles.hpp"

namespace hs = hyperspline;

namespace {

hs::CalibrationProblem two_variable() {
  hs::CalibrationProblem p;
  p.a = Eigen::MatrixXd::Identity(2, 2);
  p.y = Eigen::Vector2d(-1.0, 2.0);
  p.ineq = -Eigen::MatrixXd::Identity(2, 2);
  p.ineq_rhs = Eigen::VectorXd::Zero(2);
  return p;
}

// Identity data with a penalty acting on the second half of the unknowns.
hs::CalibrationProblem knee_problem() {
  hs::CalibrationProblem p;
  const int n = 8;
  p.a = Eigen::MatrixXd::Identity(n, n);
  p.y = Eigen::VectorXd::LinSpaced(n, 1.0, 2.0);
  p.penalty = Eigen::MatrixXd::Zero(n, n);
  for (int k = n / 2; k < n; ++k) p.penalty(k, k) = 1.0;
  return p;
}

}  // namespace

TEST(Solve, TwoVariableExample) {
  const auto s = hs::solve(two_variable());
  EXPECT_NEAR(s.theta(0), 0.0, 1e-14);
  EXPECT_NEAR(s.theta(1), 2.0, 1e-14);
  EXPECT_EQ(s.active_set, (std::vector<int>{0}));
  EXPECT_NEAR(s.objective, 1.0, 1e-14);
  EXPECT_NEAR(s.multipliers(0), 2.0, 1e-12);
  const auto enumerated = oracle::enumerate_qp(two_variable());
  EXPECT_NEAR(enumerated.objective, s.objective, 1e-14);
}

TEST(Solve, InteriorOptimumIsOrdinaryLeastSquares) {
  std::mt19937 rng(1);
  std::normal_distribution<double> n01;
  hs::CalibrationProblem p;
  p.a = Eigen::MatrixXd::NullaryExpr(12, 4, [&] { return n01(rng); });
  p.y = Eigen::VectorXd::NullaryExpr(12, [&] { return n01(rng); });
  const Eigen::VectorXd ols = p.a.colPivHouseholderQr().solve(p.y);
  // Constraints loose enough to be inactive at the OLS point.
  p.ineq = Eigen::MatrixXd::Zero(4, 4);
  p.ineq_rhs = Eigen::VectorXd::Zero(4);
  for (int k = 0; k < 4; ++k) p.ineq(k, k) = ols(k) > 0 ? -1.0 : 1.0;
  const auto s = hs::solve(p);
  EXPECT_LT((s.theta - ols).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_TRUE(s.active_set.empty());
}

TEST(Solve, ZeroData) {
  auto p = two_variable();
  p.y.setZero();
  const auto s = hs::solve(p);
  EXPECT_EQ(s.theta.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(s.objective, 0.0);
}

TEST(Solve, FixedParametersStayZero) {
  hs::CalibrationProblem p;
  p.a = Eigen::MatrixXd::Identity(3, 3);
  p.y = Eigen::Vector3d(1.0, 2.0, 3.0);
  p.fixed_zero = {1};
  const auto s = hs::solve(p);
  EXPECT_EQ(s.theta(1), 0.0);
  EXPECT_NEAR(s.theta(0), 1.0, 1e-14);
  EXPECT_NEAR(s.theta(2), 3.0, 1e-14);
}

TEST(Solve, RankDeficientUsesRidge) {
  hs::CalibrationProblem p;
  p.a = Eigen::MatrixXd::Zero(2, 3);
  p.a << 1, 1, 0, 0, 0, 1;
  p.y = Eigen::Vector2d(2.0, 1.0);
  const auto s = hs::solve(p);
  EXPECT_TRUE(s.ridge_applied);
  EXPECT_NEAR((p.a * s.theta - p.y).norm(), 0.0, 1e-6);
}

TEST(Solve, RejectsMalformedProblems) {
  auto p = two_variable();
  p.ineq = Eigen::MatrixXd::Identity(2, 3);
  EXPECT_THROW(hs::solve(p), hs::InputError);
  p = two_variable();
  p.ineq_rhs = Eigen::VectorXd::Ones(2);
  EXPECT_THROW(hs::solve(p), hs::InputError);
  p = two_variable();
  p.lambda_pen = -1.0;
  EXPECT_THROW(hs::solve(p), hs::InputError);
  p = two_variable();
  hs::SolveOptions o;
  o.start = Eigen::Vector2d(-1.0, 0.0);  // infeasible
  EXPECT_THROW(hs::solve(p, o), hs::InputError);
}

TEST(Solve, MatchesEnumerationOnRandomProblems) {
  std::mt19937 rng(2024);
  std::uniform_int_distribution<int> nfree(1, 6), ncons(0, 8), extra(0, 4);
  for (int t = 0; t < 200; ++t) {
    const int n = nfree(rng);
    const int m = ncons(rng);
    const auto p = oracle::random_problem(rng, n, n + extra(rng), m);
    const auto s = hs::solve(p);
    const auto e = oracle::enumerate_qp(p);
    EXPECT_LE(std::abs(s.objective - e.objective), 1e-8 * std::max(1.0, e.objective)) << "trial " << t;
    EXPECT_LE((p.ineq * s.theta).size() ? (p.ineq * s.theta).maxCoeff() : 0.0, 1e-9);
    EXPECT_LE(s.kkt_residual, 1e-8 * (1.0 + p.y.norm()));
  }
}

TEST(Solve, DropRulesAgree) {
  std::mt19937 rng(77);
  for (int t = 0; t < 50; ++t) {
    const auto p = oracle::random_problem(rng, 5, 7, 8);
    hs::SolveOptions bland;
    bland.drop_rule = hs::DropRule::Bland;
    hs::SolveOptions noseed;
    noseed.dual_seed = false;
    const double f = hs::solve(p).objective;
    EXPECT_NEAR(hs::solve(p, bland).objective, f, 1e-9 * std::max(1.0, f));
    EXPECT_NEAR(hs::solve(p, noseed).objective, f, 1e-9 * std::max(1.0, f));
  }
}

TEST(Solve, InitializationIndependence) {
  std::mt19937 rng(99);
  for (int t = 0; t < 50; ++t) {
    const auto p = oracle::random_problem(rng, 6, 9, 8);
    const auto from_zero = hs::solve(p);
    // Clip the unconstrained solution back into the feasible cone.
    Eigen::MatrixXd m(p.a.rows() + p.penalty.rows(), p.a.cols());
    m << p.a, std::sqrt(p.lambda_pen) * p.penalty;
    Eigen::VectorXd d = Eigen::VectorXd::Zero(m.rows());
    d.head(p.y.size()) = p.y;
    Eigen::VectorXd x = m.colPivHouseholderQr().solve(d);
    double step = 1.0;
    const Eigen::VectorXd gx = p.ineq * x;
    for (Eigen::Index i = 0; i < gx.size(); ++i) {
      if (gx(i) > 0) step = 0.0;
    }
    hs::SolveOptions o;
    o.start = step * x;
    const auto from_start = hs::solve(p, o);
    EXPECT_NEAR(from_start.objective, from_zero.objective, 1e-9 * std::max(1.0, from_zero.objective));
  }
}

TEST(Solve, Deterministic) {
  std::mt19937 rng(5);
  const auto p = oracle::random_problem(rng, 6, 10, 8);
  const auto a = hs::solve(p);
  const auto b = hs::solve(p);
  for (Eigen::Index k = 0; k < a.theta.size(); ++k) EXPECT_EQ(a.theta(k), b.theta(k));
}

TEST(Kkt, ExactSolution) {
  const auto p = two_variable();
  const auto r = hs::kkt_check(p, Eigen::Vector2d(0.0, 2.0));
  EXPECT_LT(r.stationarity, 1e-12);
  EXPECT_LT(r.feasibility, 1e-12);
  EXPECT_LT(r.complementarity, 1e-12);
}

TEST(Kkt, InfeasiblePoint) {
  const auto r = hs::kkt_check(two_variable(), Eigen::Vector2d(-0.5, 2.0));
  EXPECT_GT(r.feasibility, 0.0);
}

TEST(Kkt, UnconstrainedOptimum) {
  std::mt19937 rng(8);
  std::normal_distribution<double> n01;
  hs::CalibrationProblem p;
  p.a = Eigen::MatrixXd::NullaryExpr(10, 4, [&] { return n01(rng); });
  p.y = Eigen::VectorXd::NullaryExpr(10, [&] { return n01(rng); });
  const Eigen::VectorXd x = p.a.colPivHouseholderQr().solve(p.y);
  EXPECT_LT(hs::kkt_check(p, x).stationarity, 1e-10);
}

TEST(Curvature, Examples) {
  EXPECT_EQ(hs::discrete_curvature({0, 0}, {1, 1}, {2, 2}), 0.0);
  EXPECT_NEAR(hs::discrete_curvature({0, 0}, {1, 0}, {1, 1}), 1.0 / std::sqrt(2.0), 1e-12);
}

TEST(LCurve, GridHelpers) {
  const auto g = hs::log_grid(1e-4, 1e4, 17);
  ASSERT_EQ(g.size(), 17u);
  EXPECT_EQ(g.front(), 1e-4);
  EXPECT_EQ(g.back(), 1e4);
  EXPECT_NEAR(g[8], 1.0, 1e-14);
  const auto d = hs::default_lambda_grid();
  EXPECT_EQ(d.size(), 25u);
  EXPECT_EQ(d.front(), 1e-10);
  EXPECT_EQ(d.back(), 1e2);
}

TEST(LCurve, RejectsBadGrids) {
  const auto p = knee_problem();
  const std::vector<double> four{1, 2, 3, 4};
  EXPECT_THROW(hs::lcurve(p, four), hs::InputError);
  const std::vector<double> unsorted{1, 3, 2, 4, 5};
  EXPECT_THROW(hs::lcurve(p, unsorted), hs::InputError);
  auto np = p;
  np.penalty.resize(0, 8);
  EXPECT_THROW(hs::lcurve(np, hs::log_grid(1e-3, 1e3, 7)), hs::InputError);
}

TEST(LCurve, ConstructedKnee) {
  // With A = I and a projector penalty, misfit and seminorm are closed form:
  // the penalized half shrinks by 1/(1+lambda); the knee sits at lambda = 1.
  const auto p = knee_problem();
  const auto grid = hs::log_grid(1e-4, 1e4, 25);
  const auto r = hs::lcurve(p, grid);
  std::size_t knee = 0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (std::abs(std::log10(grid[k])) < std::abs(std::log10(grid[knee]))) knee = k;
  }
  EXPECT_EQ(knee, 12u);
  EXPECT_LE(std::abs(static_cast<int>(r.corner_index) - static_cast<int>(knee)), 1);
  EXPECT_EQ(r.lambda_corner, grid[r.corner_index]);
  EXPECT_EQ(r.lambda_chosen, r.lambda_corner / 10.0);
  EXPECT_EQ(r.kappas.front(), 0.0);
  EXPECT_EQ(r.kappas.back(), 0.0);
  const double tail = p.y.tail(4).squaredNorm();
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double l = grid[k];
    EXPECT_NEAR(r.misfits[k], tail * std::pow(l / (1.0 + l), 2), 1e-10 * tail);
    EXPECT_NEAR(r.seminorms[k], tail / std::pow(1.0 + l, 2), 1e-10 * tail);
  }
}

TEST(LCurve, MonotoneTradeOff) {
  std::mt19937 rng(13);
  const auto p = oracle::random_problem(rng, 6, 12, 8);
  const auto r = hs::lcurve(p, hs::log_grid(1e-6, 1e3, 15));
  for (std::size_t k = 1; k < r.lambdas.size(); ++k) {
    EXPECT_GE(r.misfits[k], r.misfits[k - 1] - 1e-9 * (1.0 + r.misfits[k - 1]));
    EXPECT_LE(r.seminorms[k], r.seminorms[k - 1] + 1e-9 * (1.0 + r.seminorms[k - 1]));
  }
}
