#include "hyperspline/operators.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hyperspline/error.hpp"

namespace hyperspline {

namespace {

struct QuadPoint {
  double x;
  double w;
};

// Gauss points over every nonempty knot span of an axis.
std::vector<QuadPoint> axis_quadrature(const KnotVector& kv, const GaussRule& rule) {
  const std::vector<double> breaks = kv.breakpoints();
  std::vector<QuadPoint> pts;
  for (std::size_t s = 0; s + 1 < breaks.size(); ++s) {
    const double half = 0.5 * (breaks[s + 1] - breaks[s]);
    const double mid = 0.5 * (breaks[s + 1] + breaks[s]);
    for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
      pts.push_back({mid + half * rule.nodes[k], half * rule.weights[k]});
    }
  }
  return pts;
}

void append_rows(std::vector<Eigen::RowVectorXd>& out, const Eigen::MatrixXd& block) {
  for (Eigen::Index r = 0; r < block.rows(); ++r) out.emplace_back(-block.row(r));
}

}  // namespace

GaussRule gauss_legendre(int order) {
  if (order < 1) throw InputError("gauss_legendre: order must be >= 1");
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(order, order);
  for (int k = 1; k < order; ++k) {
    const double b = k / std::sqrt(4.0 * k * k - 1.0);
    jacobi(k, k - 1) = b;
    jacobi(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi);
  GaussRule rule;
  for (int k = 0; k < order; ++k) {
    rule.nodes.push_back(es.eigenvalues()(k));
    const double v0 = es.eigenvectors()(0, k);
    rule.weights.push_back(2.0 * v0 * v0);
  }
  return rule;
}

PenaltyOperator curvature_operator(const ModelBasis& basis, int quad_order) {
  const GaussRule rule = gauss_legendre(quad_order);
  const ModelSpec& spec = basis.spec();
  const auto q1 = axis_quadrature(basis.axis1().knots, rule);
  const auto q2 = axis_quadrature(basis.axis2().knots, rule);
  const int np = basis.parameter_count();

  PenaltyOperator op;
  op.quad_order = quad_order;
  if (spec.kind == ModelKind::Separable) {
    op.rows = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(q1.size() + q2.size()), np);
    Eigen::Index r = 0;
    for (const QuadPoint& q : q1) op.rows.row(r++).head(spec.n1()) = std::sqrt(q.w) * basis.axis1().row(q.x, 2);
    for (const QuadPoint& q : q2) op.rows.row(r++).tail(spec.n2()) = std::sqrt(q.w) * basis.axis2().row(q.x, 2);
    return op;
  }

  const SensitivitySet& s = basis.surface();
  op.rows.resize(static_cast<Eigen::Index>(2 * q1.size() * q2.size()), np);
  Eigen::Index r = 0;
  for (const QuadPoint& a : q1) {
    const Eigen::RowVectorXd u0 = s.u.row(a.x, 0);
    const Eigen::RowVectorXd u2 = s.u.row(a.x, 2);
    for (const QuadPoint& b : q2) {
      const double sw = std::sqrt(a.w * b.w);
      const Eigen::RowVectorXd v0 = s.v.row(b.x, 0);
      const Eigen::RowVectorXd v2 = s.v.row(b.x, 2);
      const int nu = s.u.size();
      for (int j = 0; j < s.v.size(); ++j) {
        op.rows.row(r).segment(j * nu, nu) = sw * v0(j) * u2;
        op.rows.row(r + 1).segment(j * nu, nu) = sw * v2(j) * u0;
      }
      r += 2;
    }
  }
  return op;
}

PenaltyOperator curvature_operator(const ModelSpec& spec, int quad_order) {
  return curvature_operator(ModelBasis(spec), quad_order);
}

InequalityOperator inequality_operator(const ModelBasis& basis, const ConstraintFamilies& families) {
  const ModelSpec& spec = basis.spec();
  const int np = basis.parameter_count();
  std::vector<Eigen::RowVectorXd> raw;

  if (spec.kind == ModelKind::Separable) {
    auto pad = [&](const Eigen::MatrixXd& c, bool first) {
      Eigen::MatrixXd m = Eigen::MatrixXd::Zero(c.rows(), np);
      if (first) {
        m.leftCols(spec.n1()) = c;
      } else {
        m.rightCols(spec.n2()) = c;
      }
      return m;
    };
    if (families.monotone_1) append_rows(raw, pad(basis.axis1().first_derivative, true));
    if (families.convex_1) append_rows(raw, pad(basis.axis1().second_derivative, true));
    if (families.monotone_2) append_rows(raw, pad(basis.axis2().first_derivative, false));
    if (families.convex_2) append_rows(raw, pad(basis.axis2().second_derivative, false));
  } else {
    const SensitivitySet& s = basis.surface();
    if (families.monotone_1) append_rows(raw, s.coefficient_operator(1, 0));
    if (families.monotone_2) append_rows(raw, s.coefficient_operator(0, 1));
    if (families.convex_1) append_rows(raw, s.coefficient_operator(2, 0));
    if (families.convex_2) append_rows(raw, s.coefficient_operator(0, 2));
  }

  // Unit row norm, then drop zero rows and duplicates.
  std::vector<Eigen::RowVectorXd> kept;
  for (Eigen::RowVectorXd& row : raw) {
    const double n = row.norm();
    if (!(n > 1e-14)) continue;
    row /= n;
    const bool duplicate = std::any_of(kept.begin(), kept.end(), [&](const Eigen::RowVectorXd& k) {
      return (k - row).lpNorm<Eigen::Infinity>() <= 1e-12;
    });
    if (!duplicate) kept.push_back(row);
  }

  InequalityOperator op;
  op.rows.resize(static_cast<Eigen::Index>(kept.size()), np);
  for (std::size_t r = 0; r < kept.size(); ++r) op.rows.row(static_cast<Eigen::Index>(r)) = kept[r];
  op.rhs = Eigen::VectorXd::Zero(op.rows.rows());
  return op;
}

InequalityOperator inequality_operator(const ModelSpec& spec, const ConstraintFamilies& families) {
  return inequality_operator(ModelBasis(spec), families);
}

}  // namespace hyperspline
