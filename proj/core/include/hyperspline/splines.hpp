#pragma once

#include <array>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace hyperspline {

inline constexpr int kCubicDegree = 3;

/// Clamped knot vector. The first and last knots are repeated degree+1 times.
class KnotVector {
 public:
  explicit KnotVector(std::vector<double> knots, int degree = kCubicDegree);

  int degree() const { return degree_; }
  const std::vector<double>& knots() const { return knots_; }
  /// Number of basis functions, len(knots) - degree - 1.
  int basis_count() const { return static_cast<int>(knots_.size()) - degree_ - 1; }
  double front() const { return knots_.front(); }
  double back() const { return knots_.back(); }

  /// Index i with knots[i] <= x < knots[i+1]; the right end maps to the last
  /// nonempty span.
  int find_span(double x) const;

  /// Distinct knot values, i.e. the breakpoints of the piecewise polynomial.
  std::vector<double> breakpoints() const;

 private:
  std::vector<double> knots_;
  int degree_;
};

/// Nonzero basis functions (or their derivatives) at a point. The value at
/// position k belongs to basis function `first + k`.
struct BasisValues {
  int first = 0;
  std::array<double, kCubicDegree + 1> values{};
};

/// Cubic clamped knots for interpolation at `sites`: end knots at the first
/// and last site, interior knots by averaging three consecutive interior sites.
KnotVector make_knots(std::span<const double> sites);

/// Cox-de Boor evaluation of the `order`-th derivative of the nonzero cubic
/// basis functions at x. Only cubic knot vectors are accepted.
BasisValues basis_at(const KnotVector& kv, double x, int order);

/// Collocation matrix B with B(k, l) = N_l(sites[k]).
Eigen::MatrixXd collocation_matrix(const KnotVector& kv, std::span<const double> sites);

/// Knot vector of the derivative spline (drop first and last knot).
KnotVector derivative_knots(const KnotVector& kv);

/// Maps B-spline coefficients of a spline to the coefficients of its
/// `order`-th derivative (order 1 or 2). Rows = basis count of the derivative
/// spline.
Eigen::MatrixXd derivative_coefficient_map(const KnotVector& kv, int order);

class Curve {
 public:
  Curve(KnotVector knots, Eigen::VectorXd coeffs);

  const KnotVector& knots() const { return knots_; }
  const Eigen::VectorXd& coeffs() const { return coeffs_; }

  double operator()(double x, int order = 0) const;

 private:
  KnotVector knots_;
  Eigen::VectorXd coeffs_;
};

Curve interpolate_curve(std::span<const double> sites, std::span<const double> values);

/// Tensor-product cubic B-spline; coeffs(i, j) multiplies N_i(u) M_j(v).
class Surface {
 public:
  Surface(KnotVector knots_u, KnotVector knots_v, Eigen::MatrixXd coeffs);

  const KnotVector& knots_u() const { return knots_u_; }
  const KnotVector& knots_v() const { return knots_v_; }
  const Eigen::MatrixXd& coeffs() const { return coeffs_; }

  double eval(double u, double v, int order_u = 0, int order_v = 0) const;

 private:
  KnotVector knots_u_;
  KnotVector knots_v_;
  Eigen::MatrixXd coeffs_;
};

struct InterpolationGrid {
  std::vector<double> sites_u;
  std::vector<double> sites_v;
  Eigen::MatrixXd values;  // values(k, l) prescribed at (sites_u[k], sites_v[l])

  void validate() const;
};

Surface interpolate_surface(const InterpolationGrid& grid);

/// Supported derivative orders: (0,0), (1,0), (0,1), (2,0), (0,2), (1,1).
double eval_surface(const Surface& s, double u, double v, int order_u, int order_v);

/// Sensitivity splines of one axis. Column p of `basis_to_value` holds the
/// B-spline coefficients of S_p, the spline interpolating the unit vector e_p.
struct AxisSensitivity {
  std::vector<double> sites;
  KnotVector knots;
  Eigen::MatrixXd basis_to_value;
  Eigen::MatrixXd first_derivative;   // C^(1): values -> coefficients of S'
  Eigen::MatrixXd second_derivative;  // C^(2): values -> coefficients of S''

  int size() const { return static_cast<int>(sites.size()); }
  /// Row vector (S_1^(r)(x), ..., S_n^(r)(x)).
  Eigen::RowVectorXd row(double x, int order) const;
  /// C^(order) for order 0, 1 or 2 (order 0 is basis_to_value).
  const Eigen::MatrixXd& coefficient_operator(int order) const;
};

AxisSensitivity axis_sensitivity(std::span<const double> sites);

/// Tensor-product sensitivity surfaces. Parameter p = i + n_u * j belongs to
/// site (sites_u[i], sites_v[j]), i.e. theta = vec(iota) in column-major order.
struct SensitivitySet {
  AxisSensitivity u;
  AxisSensitivity v;

  int size() const { return u.size() * v.size(); }
  /// Per-parameter derivative sensitivities at (x, y).
  Eigen::RowVectorXd row(double x, double y, int order_u, int order_v) const;
  /// Maps theta to the tensor B-spline coefficients (column-major) of the
  /// surface derivative of the given orders.
  Eigen::MatrixXd coefficient_operator(int order_u, int order_v) const;
};

SensitivitySet sensitivity_set(std::span<const double> sites_u, std::span<const double> sites_v);

/// Kronecker product a (x) b.
Eigen::MatrixXd kronecker(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

/// Uniformly spaced sites on [0, 1].
std::vector<double> uniform_sites(int count);

}  // namespace hyperspline
