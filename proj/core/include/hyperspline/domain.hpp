#pragma once

#include <array>

namespace hyperspline {

/// A point (I1, I2) of isochoric invariants.
struct InvariantPair {
  double i1 = 3.0;
  double i2 = 3.0;
};

/// Configuration of the map from the admissible invariant domain onto the
/// unit square (xi, eta).
struct DomainMapConfig {
  double u_min = 3.0;
  double u_max = 60.0;
  /// Width regularization, in units of the (possibly transformed) I2 axis.
  double delta = 1e-6;
  /// Form eta from I2^(3/2) - 3 sqrt(3) instead of I2.
  bool use_polyconvex = true;

  void validate() const;
};

/// Lower (uniaxial) and upper (equi-biaxial) bound of I2 at fixed I1 and the
/// slopes dI2/dI1 of both branches.
struct BoundaryEval {
  double i2_lo = 3.0;
  double i2_hi = 3.0;
  double d_lo = 1.0;
  double d_hi = 1.0;
};

struct PolyInvariant {
  double value = 0.0;  // I2^(3/2) - 3 sqrt(3)
  double slope = 0.0;  // d/dI2
};

struct Width {
  double value = 0.0;  // sqrt(gap^2 + delta^2)
  double slope = 0.0;  // d/dI1
};

struct MappedPoint {
  double xi = 0.0;
  double eta = 0.0;
};

struct MapJacobian {
  double dxi_dI1 = 0.0;
  double deta_dI1 = 0.0;
  double deta_dI2 = 0.0;
};

/// Energy derivatives W,1 and W,2 with respect to the invariants.
struct InvariantGradient {
  double w1 = 0.0;
  double w2 = 0.0;
};

/// Discriminant cubic whose zero set is the boundary of the admissible domain:
/// I2^3 - I1^2 I2^2 / 4 - 9 I1 I2 / 2 + I1^3 + 27/4.
double cubic_residual(double i1, double i2);
double cubic_d_i1(double i1, double i2);
double cubic_d_i2(double i1, double i2);

/// The three real roots of the discriminant cubic in I2 at fixed I1 >= 3,
/// sorted ascending. Trigonometric method followed by Newton polishing.
std::array<double, 3> boundary_roots(double i1);

/// Boundary of the admissible set at I1 >= 3.
BoundaryEval boundary(double i1);

/// Polyconvex second invariant. Requires I2 >= 3 (round-off below 3 is
/// clamped).
PolyInvariant poly_transform(double i2);
/// Inverse of poly_transform's value.
double poly_inverse(double i2_poly);

/// Regularized width of the admissible band at I1, measured on the I2 axis
/// used by the map (transformed when use_polyconvex).
Width width(double i1, const DomainMapConfig& cfg);

MappedPoint map_forward(double i1, double i2, const DomainMapConfig& cfg);
InvariantPair map_inverse(double xi, double eta, const DomainMapConfig& cfg);
MapJacobian map_jacobian(double i1, double i2, const DomainMapConfig& cfg);

/// Pulls mapped-coordinate derivatives back to invariant derivatives.
InvariantGradient chain_rule(double w_xi, double w_eta, const MapJacobian& jac);

}  // namespace hyperspline
