#pragma once

#include <vector>

#include <Eigen/Dense>

#include "hyperspline/model.hpp"

namespace hyperspline {

/// Rows sqrt(w_q) * s_11(q) and sqrt(w_q) * s_22(q) per Gauss point q, so that
/// ||rows * theta||^2 approximates the integral of W_11^2 + W_22^2 over the
/// normalized model axes. For Separable models the univariate analogue
/// (integral of W1''^2 plus integral of W2''^2) is assembled.
struct PenaltyOperator {
  Eigen::MatrixXd rows;
  int quad_order = 4;
};

PenaltyOperator curvature_operator(const ModelBasis& basis, int quad_order = 4);
PenaltyOperator curvature_operator(const ModelSpec& spec, int quad_order = 4);

/// Which directional monotonicity/convexity families to enforce.
struct ConstraintFamilies {
  bool monotone_1 = true;
  bool monotone_2 = true;
  bool convex_1 = true;
  bool convex_2 = true;
};

/// rows * theta <= rhs (= 0). Each row is the negated B-spline coefficient of
/// a directional first or second derivative, scaled to unit norm; duplicates
/// and zero rows are dropped.
struct InequalityOperator {
  Eigen::MatrixXd rows;
  Eigen::VectorXd rhs;
};

InequalityOperator inequality_operator(const ModelBasis& basis, const ConstraintFamilies& families = {});
InequalityOperator inequality_operator(const ModelSpec& spec, const ConstraintFamilies& families = {});

/// Gauss-Legendre nodes and weights on [-1, 1] (Golub-Welsch).
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

GaussRule gauss_legendre(int order);

}  // namespace hyperspline
