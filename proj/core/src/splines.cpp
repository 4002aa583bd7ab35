#include "hyperspline/splines.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hyperspline/error.hpp"

namespace hyperspline {

namespace {

constexpr int kP = kCubicDegree;

void require_increasing(std::span<const double> sites, const char* what) {
  for (std::size_t k = 0; k < sites.size(); ++k) {
    if (!std::isfinite(sites[k])) {
      throw InputError(std::string(what) + ": non-finite site");
    }
    if (k > 0 && !(sites[k] > sites[k - 1])) {
      throw InputError(std::string(what) + ": sites must be strictly increasing");
    }
  }
}

Eigen::MatrixXd invert_collocation(const Eigen::MatrixXd& b) {
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(b);
  if (!(lu.rcond() > 1e-14)) {
    throw NumericalError("singular collocation matrix (invalid site/knot pairing)");
  }
  return lu.inverse();
}

}  // namespace

KnotVector::KnotVector(std::vector<double> knots, int degree)
    : knots_(std::move(knots)), degree_(degree) {
  if (degree_ < 0) throw InputError("knot vector: negative degree");
  const int m = static_cast<int>(knots_.size());
  if (m < 2 * (degree_ + 1)) {
    throw InputError("knot vector: need at least " + std::to_string(degree_ + 1) +
                     " basis functions");
  }
  for (int k = 1; k < m; ++k) {
    if (knots_[k] < knots_[k - 1]) throw InputError("knot vector: knots must be nondecreasing");
  }
  for (int k = 1; k <= degree_; ++k) {
    if (knots_[k] != knots_[0] || knots_[m - 1 - k] != knots_[m - 1]) {
      throw InputError("knot vector: end knots must be clamped");
    }
  }
  if (!(knots_.back() > knots_.front())) throw InputError("knot vector: empty domain");
}

int KnotVector::find_span(double x) const {
  const int n = basis_count();
  if (x >= knots_[n]) {
    // last nonempty span
    int i = n - 1;
    while (i > degree_ && knots_[i] == knots_[i + 1]) --i;
    return i;
  }
  auto it = std::upper_bound(knots_.begin(), knots_.end(), x);
  int i = static_cast<int>(it - knots_.begin()) - 1;
  return std::clamp(i, degree_, n - 1);
}

std::vector<double> KnotVector::breakpoints() const {
  std::vector<double> out;
  for (double t : knots_) {
    if (out.empty() || t > out.back()) out.push_back(t);
  }
  return out;
}

KnotVector make_knots(std::span<const double> sites) {
  const int n = static_cast<int>(sites.size());
  if (n < kP + 1) {
    throw InputError("make_knots: need at least 4 sites, got " + std::to_string(n));
  }
  require_increasing(sites, "make_knots");
  std::vector<double> knots;
  knots.reserve(n + kP + 1);
  knots.insert(knots.end(), kP + 1, sites.front());
  for (int j = 1; j <= n - kP - 1; ++j) {
    knots.push_back((sites[j] + sites[j + 1] + sites[j + 2]) / 3.0);
  }
  knots.insert(knots.end(), kP + 1, sites.back());
  return KnotVector(std::move(knots), kP);
}

BasisValues basis_at(const KnotVector& kv, double x, int order) {
  if (kv.degree() != kP) throw InputError("basis_at: only cubic knot vectors are supported");
  if (order < 0) throw InputError("basis_at: negative derivative order");
  const double lo = kv.front();
  const double hi = kv.back();
  const double slack = 1e-12 * (1.0 + (hi - lo));
  if (!(x >= lo - slack && x <= hi + slack)) {
    throw InputError("basis_at: x = " + std::to_string(x) + " outside [" + std::to_string(lo) +
                     ", " + std::to_string(hi) + "]");
  }
  x = std::clamp(x, lo, hi);

  const auto& t = kv.knots();
  const int span = kv.find_span(x);
  BasisValues out;
  out.first = span - kP;
  if (order > kP) return out;

  // ndu holds basis functions (upper triangle) and knot differences (lower).
  double ndu[kP + 1][kP + 1];
  double left[kP + 1];
  double right[kP + 1];
  ndu[0][0] = 1.0;
  for (int j = 1; j <= kP; ++j) {
    left[j] = x - t[span + 1 - j];
    right[j] = t[span + j] - x;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      ndu[j][r] = right[r + 1] + left[j - r];
      const double temp = ndu[r][j - 1] / ndu[j][r];
      ndu[r][j] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    ndu[j][j] = saved;
  }
  if (order == 0) {
    for (int j = 0; j <= kP; ++j) out.values[j] = ndu[j][kP];
    return out;
  }

  double a[2][kP + 1];
  for (int r = 0; r <= kP; ++r) {
    int s1 = 0;
    int s2 = 1;
    a[0][0] = 1.0;
    double d = 0.0;
    for (int k = 1; k <= order; ++k) {
      d = 0.0;
      const int rk = r - k;
      const int pk = kP - k;
      if (r >= k) {
        a[s2][0] = a[s1][0] / ndu[pk + 1][rk];
        d = a[s2][0] * ndu[rk][pk];
      }
      const int j1 = rk >= -1 ? 1 : -rk;
      const int j2 = (r - 1 <= pk) ? k - 1 : kP - r;
      for (int j = j1; j <= j2; ++j) {
        a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][rk + j];
        d += a[s2][j] * ndu[rk + j][pk];
      }
      if (r <= pk) {
        a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
        d += a[s2][k] * ndu[r][pk];
      }
      std::swap(s1, s2);
    }
    out.values[r] = d;
  }
  double factor = kP;
  for (int k = 1; k < order; ++k) factor *= (kP - k);
  for (double& v : out.values) v *= factor;
  return out;
}

Eigen::MatrixXd collocation_matrix(const KnotVector& kv, std::span<const double> sites) {
  const int n = kv.basis_count();
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(sites.size()), n);
  for (std::size_t k = 0; k < sites.size(); ++k) {
    const BasisValues bv = basis_at(kv, sites[k], 0);
    for (int j = 0; j <= kP; ++j) b(static_cast<Eigen::Index>(k), bv.first + j) = bv.values[j];
  }
  return b;
}

KnotVector derivative_knots(const KnotVector& kv) {
  if (kv.degree() < 1) throw InputError("derivative_knots: degree must be >= 1");
  const auto& t = kv.knots();
  return KnotVector(std::vector<double>(t.begin() + 1, t.end() - 1), kv.degree() - 1);
}

namespace {

// First-derivative coefficient map of a degree-p spline:
// d_i = p (c_{i+1} - c_i) / (t_{i+p+1} - t_{i+1}).
Eigen::MatrixXd first_difference(const KnotVector& kv) {
  const int p = kv.degree();
  const int n = kv.basis_count();
  const auto& t = kv.knots();
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n - 1, n);
  for (int i = 0; i < n - 1; ++i) {
    const double gap = t[i + p + 1] - t[i + 1];
    if (gap > 0.0) {
      d(i, i) = -p / gap;
      d(i, i + 1) = p / gap;
    }
  }
  return d;
}

}  // namespace

Eigen::MatrixXd derivative_coefficient_map(const KnotVector& kv, int order) {
  if (order == 1) return first_difference(kv);
  if (order == 2) return first_difference(derivative_knots(kv)) * first_difference(kv);
  throw InputError("derivative_coefficient_map: order must be 1 or 2");
}

Curve::Curve(KnotVector knots, Eigen::VectorXd coeffs)
    : knots_(std::move(knots)), coeffs_(std::move(coeffs)) {
  if (coeffs_.size() != knots_.basis_count()) {
    throw InputError("curve: coefficient count does not match knot vector");
  }
}

double Curve::operator()(double x, int order) const {
  const BasisValues bv = basis_at(knots_, x, order);
  double s = 0.0;
  for (int j = 0; j <= kP; ++j) s += bv.values[j] * coeffs_(bv.first + j);
  return s;
}

Curve interpolate_curve(std::span<const double> sites, std::span<const double> values) {
  if (sites.size() != values.size()) {
    throw InputError("interpolate_curve: sites and values differ in length");
  }
  KnotVector kv = make_knots(sites);
  const Eigen::MatrixXd b = collocation_matrix(kv, sites);
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(b);
  if (!(lu.rcond() > 1e-14)) throw NumericalError("interpolate_curve: singular collocation matrix");
  const Eigen::Map<const Eigen::VectorXd> rhs(values.data(), static_cast<Eigen::Index>(values.size()));
  return Curve(std::move(kv), lu.solve(rhs));
}

Surface::Surface(KnotVector knots_u, KnotVector knots_v, Eigen::MatrixXd coeffs)
    : knots_u_(std::move(knots_u)), knots_v_(std::move(knots_v)), coeffs_(std::move(coeffs)) {
  if (coeffs_.rows() != knots_u_.basis_count() || coeffs_.cols() != knots_v_.basis_count()) {
    throw InputError("surface: coefficient matrix does not match knot vectors");
  }
}

double Surface::eval(double u, double v, int order_u, int order_v) const {
  const BasisValues bu = basis_at(knots_u_, u, order_u);
  const BasisValues bv = basis_at(knots_v_, v, order_v);
  double s = 0.0;
  for (int i = 0; i <= kP; ++i) {
    double row = 0.0;
    for (int j = 0; j <= kP; ++j) row += coeffs_(bu.first + i, bv.first + j) * bv.values[j];
    s += bu.values[i] * row;
  }
  return s;
}

void InterpolationGrid::validate() const {
  if (sites_u.size() < kP + 1 || sites_v.size() < kP + 1) {
    throw InputError("interpolation grid: need at least 4 sites per axis");
  }
  require_increasing(sites_u, "interpolation grid (u)");
  require_increasing(sites_v, "interpolation grid (v)");
  if (values.rows() != static_cast<Eigen::Index>(sites_u.size()) ||
      values.cols() != static_cast<Eigen::Index>(sites_v.size())) {
    throw InputError("interpolation grid: value matrix does not match site counts");
  }
}

Surface interpolate_surface(const InterpolationGrid& grid) {
  grid.validate();
  KnotVector ku = make_knots(grid.sites_u);
  KnotVector kv = make_knots(grid.sites_v);
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_u(collocation_matrix(ku, grid.sites_u));
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_v(collocation_matrix(kv, grid.sites_v));
  if (!(lu_u.rcond() > 1e-14) || !(lu_v.rcond() > 1e-14)) {
    throw NumericalError("interpolate_surface: singular collocation matrix");
  }
  // Solve along u for every v-column, then along v for every u-row.
  const Eigen::MatrixXd along_u = lu_u.solve(grid.values);
  Eigen::MatrixXd coeffs = lu_v.solve(along_u.transpose()).transpose();
  return Surface(std::move(ku), std::move(kv), std::move(coeffs));
}

double eval_surface(const Surface& s, double u, double v, int order_u, int order_v) {
  if (order_u < 0 || order_v < 0 || order_u + order_v > 2) {
    throw InputError("eval_surface: unsupported derivative order");
  }
  return s.eval(u, v, order_u, order_v);
}

Eigen::RowVectorXd AxisSensitivity::row(double x, int order) const {
  const BasisValues bv = basis_at(knots, x, order);
  Eigen::RowVectorXd out = Eigen::RowVectorXd::Zero(size());
  for (int j = 0; j <= kP; ++j) out += bv.values[j] * basis_to_value.row(bv.first + j);
  return out;
}

const Eigen::MatrixXd& AxisSensitivity::coefficient_operator(int order) const {
  switch (order) {
    case 0: return basis_to_value;
    case 1: return first_derivative;
    case 2: return second_derivative;
    default: throw InputError("coefficient_operator: order must be 0, 1 or 2");
  }
}

AxisSensitivity axis_sensitivity(std::span<const double> sites) {
  KnotVector kv = make_knots(sites);
  Eigen::MatrixXd binv = invert_collocation(collocation_matrix(kv, sites));
  Eigen::MatrixXd c1 = derivative_coefficient_map(kv, 1) * binv;
  Eigen::MatrixXd c2 = derivative_coefficient_map(kv, 2) * binv;
  return AxisSensitivity{std::vector<double>(sites.begin(), sites.end()), std::move(kv),
                         std::move(binv), std::move(c1), std::move(c2)};
}

Eigen::RowVectorXd SensitivitySet::row(double x, double y, int order_u, int order_v) const {
  const Eigen::RowVectorXd ru = u.row(x, order_u);
  const Eigen::RowVectorXd rv = v.row(y, order_v);
  Eigen::RowVectorXd out(size());
  const int nu = u.size();
  for (int j = 0; j < v.size(); ++j) out.segment(j * nu, nu) = rv(j) * ru;
  return out;
}

Eigen::MatrixXd SensitivitySet::coefficient_operator(int order_u, int order_v) const {
  // vec(Cu * iota * Cv^T) = (Cv (x) Cu) vec(iota)
  return kronecker(v.coefficient_operator(order_v), u.coefficient_operator(order_u));
}

SensitivitySet sensitivity_set(std::span<const double> sites_u, std::span<const double> sites_v) {
  return SensitivitySet{axis_sensitivity(sites_u), axis_sensitivity(sites_v)};
}

Eigen::MatrixXd kronecker(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

std::vector<double> uniform_sites(int count) {
  if (count < 2) throw InputError("uniform_sites: need at least 2 sites");
  std::vector<double> s(count);
  for (int k = 0; k < count; ++k) s[k] = static_cast<double>(k) / (count - 1);
  s.back() = 1.0;
  return s;
}

}  // namespace hyperspline
