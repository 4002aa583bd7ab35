#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "hyperspline/error.hpp"
#include "hyperspline/operators.hpp"
#include "hyperspline/solver.hpp"
#include "oracles.hpp"

namespace hs = hyperspline;
using hs::ModelKind;

namespace {

hs::ModelSpec spec_of(ModelKind kind, int n1, int n2) {
  return hs::default_spec(kind, oracle::synthetic(oracle::neo_hookean(400.0), 6, 3.0), n1, n2);
}

Eigen::VectorXd grid_theta(const hs::ModelSpec& spec, const std::function<double(double, double)>& f) {
  Eigen::VectorXd t(spec.parameter_count());
  for (int j = 0; j < spec.n2(); ++j) {
    for (int i = 0; i < spec.n1(); ++i) t(i + spec.n1() * j) = f(spec.sites1[i], spec.sites2[j]);
  }
  return t;
}

}  // namespace

TEST(Gauss, ExactForPolynomials) {
  const auto g2 = hs::gauss_legendre(2);
  EXPECT_NEAR(g2.nodes[0], -1.0 / std::sqrt(3.0), 1e-15);
  EXPECT_NEAR(g2.weights[0], 1.0, 1e-15);
  const auto g4 = hs::gauss_legendre(4);
  double s6 = 0.0, s0 = 0.0;
  for (std::size_t k = 0; k < 4; ++k) {
    s6 += g4.weights[k] * std::pow(g4.nodes[k], 6);
    s0 += g4.weights[k];
  }
  EXPECT_NEAR(s6, 2.0 / 7.0, 1e-14);
  EXPECT_NEAR(s0, 2.0, 1e-14);
  EXPECT_THROW(hs::gauss_legendre(0), hs::InputError);
}

TEST(Penalty, BilinearAndConstantInNullSpace) {
  for (const ModelKind k : {ModelKind::SurfaceMapped, ModelKind::SurfaceInvariant}) {
    const auto spec = spec_of(k, 10, 6);
    const auto pen = hs::curvature_operator(spec);
    EXPECT_EQ(pen.rows.cols(), 60);
    const auto bil = grid_theta(spec, [](double x, double y) { return 2.0 * x - 3.0 * y + 5.0 * x * y; });
    EXPECT_LT((pen.rows * bil).norm(), 1e-9);
    const Eigen::VectorXd c = Eigen::VectorXd::Constant(60, 4.2);
    EXPECT_LT((pen.rows * c).norm(), 1e-9);
  }
}

TEST(Penalty, QuadraticIntegral) {
  const auto spec = spec_of(ModelKind::SurfaceMapped, 10, 6);
  const auto pen = hs::curvature_operator(spec);
  const auto t = grid_theta(spec, [](double x, double) { return x * x; });
  EXPECT_NEAR((pen.rows * t).squaredNorm(), 4.0, 1e-8);
  const auto t2 = grid_theta(spec, [](double x, double y) { return x * x + 0.5 * y * y; });
  // Integral of 2^2 + 1^2.
  EXPECT_NEAR((pen.rows * t2).squaredNorm(), 5.0, 1e-8);
}

TEST(Penalty, SeparableUnivariateAnalogue) {
  const auto spec = spec_of(ModelKind::Separable, 9, 6);
  const auto pen = hs::curvature_operator(spec);
  Eigen::VectorXd t = Eigen::VectorXd::Zero(15);
  for (int i = 0; i < 9; ++i) t(i) = spec.sites1[i] * spec.sites1[i];
  for (int j = 0; j < 6; ++j) t(9 + j) = 3.0 * spec.sites2[j];
  EXPECT_NEAR((pen.rows * t).squaredNorm(), 4.0, 1e-8);
}

TEST(Penalty, QuadratureOrderDoublingIsInvariant) {
  std::mt19937 rng(3);
  std::normal_distribution<double> n01;
  for (const ModelKind k : {ModelKind::SurfaceMapped, ModelKind::Separable}) {
    const auto spec = spec_of(k, 12, 5);
    const Eigen::VectorXd t = Eigen::VectorXd::NullaryExpr(spec.parameter_count(), [&] { return n01(rng); });
    const double a = (hs::curvature_operator(spec, 4).rows * t).squaredNorm();
    const double b = (hs::curvature_operator(spec, 8).rows * t).squaredNorm();
    EXPECT_LT(std::abs(a - b), 1e-10 * b);
  }
}

TEST(Penalty, GramIsSymmetricPositiveSemidefinite) {
  const auto spec = spec_of(ModelKind::SurfaceMapped, 8, 5);
  const Eigen::MatrixXd g = hs::curvature_operator(spec).rows.transpose() * hs::curvature_operator(spec).rows;
  EXPECT_LT((g - g.transpose()).cwiseAbs().maxCoeff(), 1e-12 * g.cwiseAbs().maxCoeff());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
  EXPECT_GE(es.eigenvalues().minCoeff(), -1e-9 * es.eigenvalues().maxCoeff());
}

TEST(Inequality, ShapeAndScaling) {
  for (const ModelKind k : {ModelKind::Separable, ModelKind::SurfaceInvariant, ModelKind::SurfaceMapped}) {
    const auto spec = spec_of(k, 10, 5);
    const auto op = hs::inequality_operator(spec);
    EXPECT_EQ(op.rows.cols(), spec.parameter_count());
    EXPECT_EQ(op.rhs.size(), op.rows.rows());
    EXPECT_EQ(op.rhs.cwiseAbs().maxCoeff(), 0.0);
    for (Eigen::Index r = 0; r < op.rows.rows(); ++r) EXPECT_NEAR(op.rows.row(r).norm(), 1.0, 1e-12);
  }
}

TEST(Inequality, SeparableRowsStayInOneAxis) {
  const auto spec = spec_of(ModelKind::Separable, 8, 5);
  const auto op = hs::inequality_operator(spec);
  for (Eigen::Index r = 0; r < op.rows.rows(); ++r) {
    const bool a1 = op.rows.row(r).head(8).cwiseAbs().maxCoeff() > 0.0;
    const bool a2 = op.rows.row(r).tail(5).cwiseAbs().maxCoeff() > 0.0;
    EXPECT_NE(a1, a2);
  }
}

TEST(Inequality, IncreasingConvexGridIsFeasible) {
  const auto spec = spec_of(ModelKind::SurfaceMapped, 10, 6);
  const auto op = hs::inequality_operator(spec);
  const auto t = grid_theta(spec, [](double x, double y) { return (x + 1) * (x + 1) * (y + 1) * (y + 1); });
  EXPECT_LE((op.rows * t).maxCoeff(), 1e-12);
  const Eigen::VectorXd c = Eigen::VectorXd::Constant(60, -2.0);
  EXPECT_LE((op.rows * c).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Inequality, DecreasingStepIsViolated) {
  const auto spec = spec_of(ModelKind::SurfaceMapped, 10, 6);
  auto t = grid_theta(spec, [](double x, double y) { return x + y; });
  t(5 + 10 * 2) -= 0.5;
  hs::ConstraintFamilies only_slope;
  only_slope.convex_1 = only_slope.convex_2 = false;
  only_slope.monotone_2 = false;
  EXPECT_GT((hs::inequality_operator(spec, only_slope).rows * t).maxCoeff(), 0.0);
}

TEST(Inequality, FamiliesCanBeDropped) {
  const auto spec = spec_of(ModelKind::SurfaceMapped, 8, 5);
  hs::ConstraintFamilies none{false, false, false, false};
  EXPECT_EQ(hs::inequality_operator(spec, none).rows.rows(), 0);
  hs::ConstraintFamilies one{true, false, false, false};
  const auto all = hs::inequality_operator(spec).rows.rows();
  const auto part = hs::inequality_operator(spec, one).rows.rows();
  EXPECT_GT(part, 0);
  EXPECT_LT(part, all);
}

// Coefficient nonnegativity is only sufficient: this cubic has a strictly
// positive slope everywhere but a negative slope coefficient.
TEST(Inequality, ConservativeCaseIsRejected) {
  auto spec = spec_of(ModelKind::Separable, 4, 4);
  const auto ax = hs::axis_sensitivity(spec.sites1);
  const Eigen::Vector4d c(0.0, 1.0 / 3.0, 0.3, 0.3 + 1.0 / 3.0);
  const Eigen::Vector4d values = hs::collocation_matrix(ax.knots, spec.sites1) * c;
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(8);
  theta.head(4) = values;
  const hs::Curve w1(ax.knots, c);
  for (int k = 0; k <= 1000; ++k) EXPECT_GT(w1(k / 1000.0, 1), 0.0);
  hs::ConstraintFamilies slope_only{true, false, false, false};
  EXPECT_GT((hs::inequality_operator(spec, slope_only).rows * theta).maxCoeff(), 1e-3);
}

TEST(Inequality, FeasibleThetaIsPointwiseMonotoneAndConvex) {
  const auto spec = spec_of(ModelKind::SurfaceMapped, 12, 5);
  const auto op = hs::inequality_operator(spec);
  std::mt19937 rng(5);
  std::normal_distribution<double> n01;
  for (int trial = 0; trial < 3; ++trial) {
    // Project a random target onto the feasible cone.
    hs::CalibrationProblem p;
    p.a = Eigen::MatrixXd::Identity(60, 60);
    p.y = Eigen::VectorXd::NullaryExpr(60, [&] { return 10.0 * n01(rng); });
    p.ineq = op.rows;
    p.ineq_rhs = op.rhs;
    const auto sol = hs::solve(p);
    ASSERT_LE((op.rows * sol.theta).maxCoeff(), 1e-9);
    const hs::Model m(spec, sol.theta);
    const double scale = 1.0 + sol.theta.cwiseAbs().maxCoeff();
    double worst = 0.0;
    for (int a = 0; a < 200; ++a) {
      for (int b = 0; b < 200; ++b) {
        const double x = a / 199.0, y = b / 199.0;
        for (auto [ru, rv] : {std::pair{1, 0}, {0, 1}, {2, 0}, {0, 2}}) {
          worst = std::min(worst, m.surface().eval(x, y, ru, rv));
        }
      }
    }
    EXPECT_GE(worst, -1e-9 * scale);
  }
}
