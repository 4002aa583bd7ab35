#include "hyperspline/domain.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "hyperspline/error.hpp"

namespace hyperspline {

namespace {

const double kSqrt27 = 3.0 * std::sqrt(3.0);
constexpr double kAdmissibleTol = 1e-9;

struct Transformed {
  double value;
  double slope;
};

Transformed transform(double i2, bool polyconvex) {
  if (!polyconvex) return {i2, 1.0};
  const PolyInvariant p = poly_transform(i2);
  return {p.value, p.slope};
}

double inverse_transform(double t, bool polyconvex) {
  return polyconvex ? poly_inverse(t) : t;
}

double polish(double i1, double x) {
  double r = cubic_residual(i1, x);
  for (int it = 0; it < 4 && r != 0.0; ++it) {
    const double d = cubic_d_i2(i1, x);
    if (d == 0.0 || !std::isfinite(d)) break;
    const double next = x - r / d;
    const double rn = cubic_residual(i1, next);
    if (!(std::abs(rn) < std::abs(r))) break;
    x = next;
    r = rn;
  }
  return x;
}

void require_i1(double i1, const char* what) {
  if (!std::isfinite(i1) || i1 < 3.0 - kAdmissibleTol) {
    throw InputError(std::string(what) + ": I1 = " + std::to_string(i1) + " below 3");
  }
}

}  // namespace

void DomainMapConfig::validate() const {
  if (!std::isfinite(u_min) || !std::isfinite(u_max) || !(u_max > u_min)) {
    throw InputError("domain map: require u_max > u_min");
  }
  if (u_min < 3.0) throw InputError("domain map: u_min must be >= 3");
  if (!std::isfinite(delta) || delta < 0.0) throw InputError("domain map: delta must be >= 0");
}

double cubic_residual(double i1, double i2) {
  return i2 * i2 * i2 - 0.25 * i1 * i1 * i2 * i2 - 4.5 * i1 * i2 + i1 * i1 * i1 + 6.75;
}

double cubic_d_i1(double i1, double i2) {
  return -0.5 * i1 * i2 * i2 - 4.5 * i2 + 3.0 * i1 * i1;
}

double cubic_d_i2(double i1, double i2) {
  return 3.0 * i2 * i2 - 0.5 * i1 * i1 * i2 - 4.5 * i1;
}

std::array<double, 3> boundary_roots(double i1) {
  require_i1(i1, "boundary_roots");
  // Monic cubic x^3 + a x^2 + b x + c in x = I2.
  const double a = -0.25 * i1 * i1;
  const double b = -4.5 * i1;
  const double c = i1 * i1 * i1 + 6.75;
  const double p = b - a * a / 3.0;
  const double q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
  const double shift = -a / 3.0;

  std::array<double, 3> roots{};
  if (p < 0.0) {
    const double m = 2.0 * std::sqrt(-p / 3.0);
    // Clamping absorbs round-off at the apex, where two roots coincide.
    const double cos3 = std::clamp((3.0 * q) / (2.0 * p) * std::sqrt(-3.0 / p), -1.0, 1.0);
    const double phi = std::acos(cos3) / 3.0;
    for (int k = 0; k < 3; ++k) {
      roots[k] = m * std::cos(phi - 2.0 * std::numbers::pi * k / 3.0) + shift;
    }
  } else {
    // Not reached for I1 >= 3 (three real roots); keep a defined result.
    const double t = std::cbrt(-q);
    roots = {t + shift, t + shift, t + shift};
  }
  for (double& r : roots) r = polish(i1, r);
  std::sort(roots.begin(), roots.end());
  return roots;
}

BoundaryEval boundary(double i1) {
  require_i1(i1, "boundary");
  if (i1 <= 3.0) return BoundaryEval{3.0, 3.0, 1.0, 1.0};

  const std::array<double, 3> roots = boundary_roots(i1);
  double lo = 0.0;
  double hi = 0.0;
  int kept = 0;
  for (double r : roots) {
    if (r >= 3.0 - kAdmissibleTol) {
      if (kept == 0) lo = r;
      hi = r;
      ++kept;
    }
  }
  if (kept < 2) {
    // Near the apex the double root may land marginally below 3.
    lo = std::max(roots[1], 3.0);
    hi = std::max(roots[2], lo);
  }

  auto slope = [i1](double i2) {
    const double den = cubic_d_i2(i1, i2);
    if (den == 0.0) return 1.0;
    return -cubic_d_i1(i1, i2) / den;
  };
  return BoundaryEval{lo, hi, slope(lo), slope(hi)};
}

PolyInvariant poly_transform(double i2) {
  if (!std::isfinite(i2) || i2 < 3.0 - kAdmissibleTol * (1.0 + std::abs(i2))) {
    throw InputError("poly_transform: I2 = " + std::to_string(i2) + " below 3");
  }
  i2 = std::max(i2, 3.0);
  const double root = std::sqrt(i2);
  return PolyInvariant{i2 * root - kSqrt27, 1.5 * root};
}

double poly_inverse(double i2_poly) {
  return std::pow(std::max(i2_poly + kSqrt27, 0.0), 2.0 / 3.0);
}

Width width(double i1, const DomainMapConfig& cfg) {
  if (i1 > cfg.u_max + kAdmissibleTol * (1.0 + cfg.u_max)) {
    throw InputError("width: I1 = " + std::to_string(i1) + " above u_max = " + std::to_string(cfg.u_max));
  }
  const BoundaryEval b = boundary(i1);
  const Transformed lo = transform(b.i2_lo, cfg.use_polyconvex);
  const Transformed hi = transform(b.i2_hi, cfg.use_polyconvex);
  const double gap = hi.value - lo.value;
  const double gap_slope = hi.slope * b.d_hi - lo.slope * b.d_lo;
  const double value = std::sqrt(gap * gap + cfg.delta * cfg.delta);
  const double slope = value > 0.0 ? gap * gap_slope / value : 0.0;
  return Width{value, slope};
}

MappedPoint map_forward(double i1, double i2, const DomainMapConfig& cfg) {
  cfg.validate();
  if (!std::isfinite(i1) || !std::isfinite(i2)) throw InputError("map_forward: non-finite point");
  const double slack = kAdmissibleTol * (1.0 + cfg.u_max);
  if (i1 < cfg.u_min - slack || i1 > cfg.u_max + slack) {
    throw InputError("map_forward: I1 = " + std::to_string(i1) + " outside [" +
                     std::to_string(cfg.u_min) + ", " + std::to_string(cfg.u_max) + "]");
  }
  i1 = std::clamp(i1, cfg.u_min, cfg.u_max);

  const BoundaryEval b = boundary(i1);
  const Width w = width(i1, cfg);
  const double num = transform(i2, cfg.use_polyconvex).value -
                     transform(b.i2_lo, cfg.use_polyconvex).value;
  double eta = w.value > 0.0 ? num / w.value : 0.0;
  if (eta < -kAdmissibleTol || eta > 1.0 + kAdmissibleTol) {
    const double tol = kAdmissibleTol * (1.0 + std::abs(i2));
    if (i2 < b.i2_lo - tol || i2 > b.i2_hi + tol) {
      throw InputError("map_forward: (" + std::to_string(i1) + ", " + std::to_string(i2) +
                       ") is not an admissible invariant pair");
    }
  }
  eta = std::clamp(eta, 0.0, 1.0);
  return MappedPoint{(i1 - cfg.u_min) / (cfg.u_max - cfg.u_min), eta};
}

InvariantPair map_inverse(double xi, double eta, const DomainMapConfig& cfg) {
  cfg.validate();
  constexpr double slack = 1e-12;
  if (!(xi >= -slack && xi <= 1.0 + slack && eta >= -slack && eta <= 1.0 + slack)) {
    throw InputError("map_inverse: point outside the unit square");
  }
  xi = std::clamp(xi, 0.0, 1.0);
  eta = std::clamp(eta, 0.0, 1.0);
  const double i1 = cfg.u_min + xi * (cfg.u_max - cfg.u_min);
  const BoundaryEval b = boundary(i1);
  const Width w = width(i1, cfg);
  const double t2 = transform(b.i2_lo, cfg.use_polyconvex).value + eta * w.value;
  return InvariantPair{i1, inverse_transform(t2, cfg.use_polyconvex)};
}

MapJacobian map_jacobian(double i1, double i2, const DomainMapConfig& cfg) {
  cfg.validate();
  const BoundaryEval b = boundary(i1);
  const Width w = width(i1, cfg);
  if (!(w.value > 0.0)) {
    throw NumericalError("map_jacobian: zero band width at the apex (use delta > 0)");
  }
  const Transformed t = transform(i2, cfg.use_polyconvex);
  const Transformed lo = transform(b.i2_lo, cfg.use_polyconvex);
  const double num = t.value - lo.value;
  MapJacobian jac;
  jac.dxi_dI1 = 1.0 / (cfg.u_max - cfg.u_min);
  jac.deta_dI2 = t.slope / w.value;
  jac.deta_dI1 = (-lo.slope * b.d_lo * w.value - num * w.slope) / (w.value * w.value);
  return jac;
}

InvariantGradient chain_rule(double w_xi, double w_eta, const MapJacobian& jac) {
  return InvariantGradient{w_xi * jac.dxi_dI1 + w_eta * jac.deta_dI1, w_eta * jac.deta_dI2};
}

}  // namespace hyperspline
