#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace hyperspline {

/// min ||A theta - y||^2 + lambda_pen ||A_pen theta||^2
/// s.t. A_ineq theta <= 0 and theta_k = 0 for k in fixed_zero.
struct CalibrationProblem {
  Eigen::MatrixXd a;
  Eigen::VectorXd y;
  Eigen::MatrixXd penalty;  // zero rows allowed
  double lambda_pen = 0.0;
  Eigen::MatrixXd ineq;  // zero rows allowed
  Eigen::VectorXd ineq_rhs;
  std::vector<int> fixed_zero;

  int parameter_count() const { return static_cast<int>(a.cols()); }
  void validate() const;
};

enum class DropRule {
  MostNegative,  // drop the constraint with the most negative multiplier
  Bland,         // drop the lowest-index constraint with a negative multiplier
};

struct SolveOptions {
  /// Feasible starting point (full parameter vector); defaults to zero.
  std::optional<Eigen::VectorXd> start;
  DropRule drop_rule = DropRule::MostNegative;
  /// 0 selects 10 * (free parameters) + 100.
  int max_iterations = 0;
  /// Retry once with DropRule::Bland (and an empty working set) when the
  /// iteration cap is hit.
  bool retry_with_bland = true;
  /// From the origin, seed the working set with the constraints a
  /// least-distance dual (NNLS) solve reports as binding. The primal
  /// iterations still decide the final active set.
  bool dual_seed = true;
};

struct Solution {
  Eigen::VectorXd theta;
  /// ||A theta - y||^2 + lambda_pen ||A_pen theta||^2 (without any ridge).
  double objective = 0.0;
  /// Constraint rows in the final working set, ascending.
  std::vector<int> active_set;
  /// One entry per constraint row, zero outside the working set.
  Eigen::VectorXd multipliers;
  double kkt_residual = 0.0;
  /// Primal iterations plus any dual seeding iterations.
  int iterations = 0;
  double wall_time = 0.0;  // seconds
  /// A micro-ridge was added because the free system was rank-deficient.
  bool ridge_applied = false;
};

/// Primal active-set method on the stacked least-squares form, started from a
/// feasible point (zero by default).
Solution solve(const CalibrationProblem& problem, const SolveOptions& options = {});

/// Residuals of the first-order optimality conditions. Stationarity and
/// complementarity are scaled by 1 + ||[A; sqrt(lambda) A_pen]||_F so they
/// carry the units of y.
struct KktResiduals {
  double stationarity = 0.0;
  double feasibility = 0.0;
  double complementarity = 0.0;

  double max() const;
};

/// Multipliers are estimated on the constraints active at theta by least
/// squares and projected onto the nonnegative orthant.
KktResiduals kkt_check(const CalibrationProblem& problem, const Eigen::VectorXd& theta);
KktResiduals kkt_check(const CalibrationProblem& problem, const Eigen::VectorXd& theta,
                       const Eigen::VectorXd& multipliers);

struct LCurvePoint {
  double x = 0.0;
  double y = 0.0;
};

/// Menger-type curvature 2 * area / (|p1 - p0| |p2 - p1| |p2 - p0|); zero
/// for collinear or coincident points.
double discrete_curvature(LCurvePoint p0, LCurvePoint p1, LCurvePoint p2);

struct LCurveResult {
  std::vector<double> lambdas;
  std::vector<double> misfits;    // ||A theta - y||^2
  std::vector<double> seminorms;  // ||A_pen theta||^2
  std::vector<double> kappas;     // zero at both ends
  std::vector<int> iterations;
  std::size_t corner_index = 0;
  double lambda_corner = 0.0;
  double lambda_chosen = 0.0;  // lambda_corner / 10
};

/// Solves the constrained problem for every candidate lambda (sorted,
/// positive, at least five) and picks the maximum-curvature corner of the
/// log-log trade-off curve. Candidates are solved concurrently.
LCurveResult lcurve(const CalibrationProblem& problem, std::span<const double> lambda_grid);

/// `count` values log-spaced over [lo, hi], endpoints exact.
std::vector<double> log_grid(double lo, double hi, int count);
/// 25 values over [1e-10, 1e2].
std::vector<double> default_lambda_grid();

}  // namespace hyperspline
