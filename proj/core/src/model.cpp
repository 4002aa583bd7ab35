#include "hyperspline/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hyperspline/error.hpp"

namespace hyperspline {

namespace {

constexpr double kAxisTol = 1e-9;

struct AxisTransform {
  double value;
  double slope;
};

// Second-axis transform T and its value at the undeformed state.
AxisTransform second_axis(double i2, bool polyconvex) {
  if (!polyconvex) return {i2, 1.0};
  const PolyInvariant p = poly_transform(i2);
  return {p.value, p.slope};
}

double second_axis_origin(bool polyconvex) { return polyconvex ? 0.0 : 3.0; }

double i1_scale(const ModelSpec& spec) { return spec.domain.u_max - spec.domain.u_min; }

double i2_scale(const ModelSpec& spec) {
  return spec.i2_axis_max - second_axis_origin(spec.domain.use_polyconvex);
}

double clamp_axis(double x, bool clamp, bool& flagged, const char* what) {
  if (x >= -kAxisTol && x <= 1.0 + kAxisTol) return std::clamp(x, 0.0, 1.0);
  if (!clamp) {
    throw InputError(std::string("point outside the model domain along ") + what +
                     " (normalized coordinate " + std::to_string(x) + ")");
  }
  flagged = true;
  return std::clamp(x, 0.0, 1.0);
}

void require_sites(const std::vector<double>& sites, const char* what) {
  if (sites.size() < 4) throw InputError(std::string(what) + ": need at least 4 sites");
  if (sites.front() != 0.0 || sites.back() != 1.0) {
    throw InputError(std::string(what) + ": sites must span [0, 1]");
  }
  for (std::size_t k = 1; k < sites.size(); ++k) {
    if (!(sites[k] > sites[k - 1])) {
      throw InputError(std::string(what) + ": sites must be strictly increasing");
    }
  }
}

std::vector<double> theta_block(const Eigen::VectorXd& theta, int start, int count) {
  return std::vector<double>(theta.data() + start, theta.data() + start + count);
}

}  // namespace

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::Separable: return "separable";
    case ModelKind::SurfaceInvariant: return "surface";
    case ModelKind::SurfaceMapped: return "mapped";
  }
  return "?";
}

ModelKind parse_kind(std::string_view text) {
  if (text == "separable") return ModelKind::Separable;
  if (text == "surface") return ModelKind::SurfaceInvariant;
  if (text == "mapped") return ModelKind::SurfaceMapped;
  throw InputError("unknown model kind '" + std::string(text) +
                   "' (expected separable, surface or mapped)");
}

int ModelSpec::parameter_count() const {
  return kind == ModelKind::Separable ? n1() + n2() : n1() * n2();
}

void ModelSpec::validate() const {
  domain.validate();
  require_sites(sites1, "model axis 1");
  require_sites(sites2, "model axis 2");
  if (kind != ModelKind::SurfaceMapped &&
      !(std::isfinite(i2_axis_max) && i2_axis_max > second_axis_origin(domain.use_polyconvex))) {
    throw InputError("model: i2_axis_max must exceed the axis origin");
  }
}

ModelSpec default_spec(ModelKind kind, std::span<const Sample> samples, int n1, int n2,
                       const DomainMapConfig& base) {
  const InvariantMaxima m = max_invariants(samples);
  if (n1 < 4 || n2 < 4) throw InputError("default_spec: need n1, n2 >= 4");
  ModelSpec spec;
  spec.kind = kind;
  spec.domain = base;
  spec.domain.u_min = 3.0;
  spec.domain.u_max = m.i1 * (1.0 + 1e-6);
  const double axis_max = spec.domain.use_polyconvex ? m.i2_poly : m.i2;
  spec.i2_axis_max = std::max(axis_max * (1.0 + 1e-6),
                              second_axis_origin(spec.domain.use_polyconvex) + 1e-6);
  spec.sites1 = uniform_sites(n1);
  spec.sites2 = uniform_sites(n2);
  return spec;
}

std::vector<int> fixed_zero_indices(const ModelSpec& spec) {
  if (spec.kind == ModelKind::Separable) return {0, spec.n1()};
  return {0};
}

AxisPoint locate(const ModelSpec& spec, double i1, double i2, bool clamp) {
  AxisPoint at;
  if (spec.kind == ModelKind::SurfaceMapped) {
    DomainMapConfig cfg = spec.domain;
    const double xi = (i1 - cfg.u_min) / (cfg.u_max - cfg.u_min);
    at.x1 = clamp_axis(xi, clamp, at.extrapolated, "xi");
    if (i1 > cfg.u_max) cfg.u_max = i1;
    at.x2 = map_forward(i1, i2, cfg).eta;
    return at;
  }
  const double x1 = (i1 - spec.domain.u_min) / i1_scale(spec);
  const double x2 = (second_axis(i2, spec.domain.use_polyconvex).value -
                     second_axis_origin(spec.domain.use_polyconvex)) /
                    i2_scale(spec);
  at.x1 = clamp_axis(x1, clamp, at.extrapolated, "I1");
  at.x2 = clamp_axis(x2, clamp, at.extrapolated, "I2");
  return at;
}

namespace {

ModelSpec validated(ModelSpec spec) {
  spec.validate();
  return spec;
}

}  // namespace

ModelBasis::ModelBasis(ModelSpec spec)
    : spec_(validated(std::move(spec))), sens_(sensitivity_set(spec_.sites1, spec_.sites2)) {}

AxisPoint ModelBasis::locate(double i1, double i2, bool clamp) const {
  return hyperspline::locate(spec_, i1, i2, clamp);
}

ParameterGradient ModelBasis::sensitivity_derivatives(double i1, double i2) const {
  const AxisPoint at = locate(i1, i2);
  const int np = parameter_count();
  ParameterGradient g{Eigen::RowVectorXd::Zero(np), Eigen::RowVectorXd::Zero(np)};
  switch (spec_.kind) {
    case ModelKind::Separable: {
      const double t2 = second_axis(i2, spec_.domain.use_polyconvex).slope;
      g.w1.head(spec_.n1()) = sens_.u.row(at.x1, 1) / i1_scale(spec_);
      g.w2.tail(spec_.n2()) = sens_.v.row(at.x2, 1) * (t2 / i2_scale(spec_));
      break;
    }
    case ModelKind::SurfaceInvariant: {
      const double t2 = second_axis(i2, spec_.domain.use_polyconvex).slope;
      g.w1 = sens_.row(at.x1, at.x2, 1, 0) / i1_scale(spec_);
      g.w2 = sens_.row(at.x1, at.x2, 0, 1) * (t2 / i2_scale(spec_));
      break;
    }
    case ModelKind::SurfaceMapped: {
      const MapJacobian jac = map_jacobian(i1, i2, spec_.domain);
      const Eigen::RowVectorXd r_xi = sens_.row(at.x1, at.x2, 1, 0);
      const Eigen::RowVectorXd r_eta = sens_.row(at.x1, at.x2, 0, 1);
      g.w1 = r_xi * jac.dxi_dI1 + r_eta * jac.deta_dI1;
      g.w2 = r_eta * jac.deta_dI2;
      break;
    }
  }
  return g;
}

Eigen::RowVectorXd ModelBasis::energy_row(double i1, double i2) const {
  const AxisPoint at = locate(i1, i2);
  if (spec_.kind == ModelKind::Separable) {
    Eigen::RowVectorXd r(parameter_count());
    r << sens_.u.row(at.x1, 0), sens_.v.row(at.x2, 0);
    return r;
  }
  return sens_.row(at.x1, at.x2, 0, 0);
}

Eigen::RowVectorXd ModelBasis::stress_row(Mode mode, double stretch) const {
  const StressCoefficients c = stress_coefficients(mode, stretch);
  if (c.alpha == 0.0 && c.beta == 0.0) return Eigen::RowVectorXd::Zero(parameter_count());
  const InvariantPair p = invariants(mode, stretch);
  const ParameterGradient g = sensitivity_derivatives(p.i1, p.i2);
  return c.alpha * g.w1 + c.beta * g.w2;
}

ParameterGradient sensitivity_derivatives(const ModelSpec& spec, double i1, double i2) {
  return ModelBasis(spec).sensitivity_derivatives(i1, i2);
}

Model::Model(ModelSpec spec, Eigen::VectorXd theta) : spec_(std::move(spec)), theta_(std::move(theta)) {
  spec_.validate();
  if (theta_.size() != spec_.parameter_count()) {
    throw InputError("model: parameter vector has length " + std::to_string(theta_.size()) +
                     ", expected " + std::to_string(spec_.parameter_count()));
  }
  if (spec_.kind == ModelKind::Separable) {
    w1_ = interpolate_curve(spec_.sites1, theta_block(theta_, 0, spec_.n1()));
    w2_ = interpolate_curve(spec_.sites2, theta_block(theta_, spec_.n1(), spec_.n2()));
  } else {
    InterpolationGrid grid{spec_.sites1, spec_.sites2,
                           Eigen::Map<const Eigen::MatrixXd>(theta_.data(), spec_.n1(), spec_.n2())};
    surface_ = interpolate_surface(grid);
  }
}

const Curve& Model::curve1() const {
  if (!w1_) throw InputError("curve1: not a separable model");
  return *w1_;
}

const Curve& Model::curve2() const {
  if (!w2_) throw InputError("curve2: not a separable model");
  return *w2_;
}

const Surface& Model::surface() const {
  if (!surface_) throw InputError("surface: not a surface model");
  return *surface_;
}

double Model::energy(double i1, double i2) const {
  const AxisPoint at = locate(spec_, i1, i2);
  if (spec_.kind == ModelKind::Separable) return (*w1_)(at.x1) + (*w2_)(at.x2);
  return surface_->eval(at.x1, at.x2);
}

InvariantGradient Model::gradient_at(double i1, double i2, const AxisPoint& at) const {
  switch (spec_.kind) {
    case ModelKind::Separable: {
      const double t2 = second_axis(i2, spec_.domain.use_polyconvex).slope;
      return {(*w1_)(at.x1, 1) / i1_scale(spec_), (*w2_)(at.x2, 1) * t2 / i2_scale(spec_)};
    }
    case ModelKind::SurfaceInvariant: {
      const double t2 = second_axis(i2, spec_.domain.use_polyconvex).slope;
      return {surface_->eval(at.x1, at.x2, 1, 0) / i1_scale(spec_),
              surface_->eval(at.x1, at.x2, 0, 1) * t2 / i2_scale(spec_)};
    }
    case ModelKind::SurfaceMapped: {
      const MapJacobian jac = map_jacobian(i1, i2, spec_.domain);
      return chain_rule(surface_->eval(at.x1, at.x2, 1, 0), surface_->eval(at.x1, at.x2, 0, 1), jac);
    }
  }
  return {};
}

InvariantGradient Model::gradient(double i1, double i2) const {
  return gradient_at(i1, i2, locate(spec_, i1, i2));
}

double Model::predict_stress(Mode mode, double stretch) const {
  const StressCoefficients c = stress_coefficients(mode, stretch);
  if (c.alpha == 0.0 && c.beta == 0.0) return 0.0;
  const InvariantPair p = invariants(mode, stretch);
  const InvariantGradient g = gradient(p.i1, p.i2);
  return c.alpha * g.w1 + c.beta * g.w2;
}

Prediction Model::predict_clamped(Mode mode, double stretch) const {
  const StressCoefficients c = stress_coefficients(mode, stretch);
  const InvariantPair p = invariants(mode, stretch);
  const AxisPoint at = locate(spec_, p.i1, p.i2, /*clamp=*/true);
  if (c.alpha == 0.0 && c.beta == 0.0) return {0.0, at.extrapolated};
  if (!at.extrapolated) {
    const InvariantGradient g = gradient_at(p.i1, p.i2, at);
    return {c.alpha * g.w1 + c.beta * g.w2, false};
  }
  // Energy derivatives frozen at the clamped point, kinematics at the true stretch.
  InvariantPair q;
  if (spec_.kind == ModelKind::SurfaceMapped) {
    q = map_inverse(at.x1, at.x2, spec_.domain);
  } else {
    const bool poly = spec_.domain.use_polyconvex;
    const double t2 = second_axis_origin(poly) + at.x2 * i2_scale(spec_);
    q = {spec_.domain.u_min + at.x1 * i1_scale(spec_), poly ? poly_inverse(t2) : t2};
  }
  const InvariantGradient g = gradient_at(q.i1, q.i2, at);
  return {c.alpha * g.w1 + c.beta * g.w2, at.extrapolated};
}

double energy(const ModelState& state, double i1, double i2) { return Model(state).energy(i1, i2); }

double predict_stress(const ModelState& state, Mode mode, double stretch) {
  return Model(state).predict_stress(mode, stretch);
}

Design assemble_design(const ModelBasis& basis, std::span<const Sample> samples) {
  std::map<Mode, int> counts;
  for (const Sample& s : samples) ++counts[s.mode];
  const auto n = static_cast<Eigen::Index>(samples.size());
  Design d{Eigen::MatrixXd::Zero(n, basis.parameter_count()), Eigen::VectorXd::Zero(n),
           Eigen::VectorXd::Zero(n)};
  for (Eigen::Index k = 0; k < n; ++k) {
    const Sample& s = samples[static_cast<std::size_t>(k)];
    const double w = 1.0 / std::sqrt(static_cast<double>(counts[s.mode]));
    d.weights(k) = w;
    d.a.row(k) = w * basis.stress_row(s.mode, s.stretch);
    d.y(k) = w * s.stress;
  }
  return d;
}

Design assemble_design(const ModelSpec& spec, std::span<const Sample> samples) {
  return assemble_design(ModelBasis(spec), samples);
}

ActivationReport activation(const Eigen::MatrixXd& a) {
  ActivationReport r;
  r.a = a.colwise().norm().transpose();
  const double peak = r.a.size() > 0 ? r.a.maxCoeff() : 0.0;
  r.a_rel = peak > 0.0 ? Eigen::VectorXd(r.a / peak) : Eigen::VectorXd::Zero(r.a.size());
  r.log10_rel.resize(r.a.size());
  for (Eigen::Index j = 0; j < r.a.size(); ++j) {
    r.log10_rel(j) = r.a_rel(j) > 0.0 ? std::max(std::log10(r.a_rel(j)), kActivationLogFloor)
                                      : kActivationLogFloor;
  }
  return r;
}

FitMetrics metrics(const Model& model, std::span<const Sample> samples) {
  if (samples.empty()) throw InputError("metrics: empty dataset");
  FitMetrics m;
  std::map<Mode, double> sse;
  std::map<Mode, double> sum;
  for (const Sample& s : samples) {
    const double r = model.predict_stress(s.mode, s.stretch) - s.stress;
    ++m.count[s.mode];
    sse[s.mode] += r * r;
    sum[s.mode] += s.stress;
  }
  std::map<Mode, double> sst;
  for (const Sample& s : samples) {
    const double d = s.stress - sum[s.mode] / m.count[s.mode];
    sst[s.mode] += d * d;
  }
  double combined = 0.0;
  for (const auto& [mode, n] : m.count) {
    const double mse = sse[mode] / n;
    m.mse[mode] = mse;
    combined += mse * mse;
    if (n >= 2 && sst[mode] > 0.0) m.r2[mode] = 1.0 - sse[mode] / sst[mode];
  }
  m.mse_combined = std::sqrt(combined);
  return m;
}

FitMetrics metrics(const ModelState& state, std::span<const Sample> samples) {
  return metrics(Model(state), samples);
}

}  // namespace hyperspline
