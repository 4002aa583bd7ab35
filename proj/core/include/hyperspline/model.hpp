#pragma once

#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "hyperspline/domain.hpp"
#include "hyperspline/kinematics.hpp"
#include "hyperspline/splines.hpp"

namespace hyperspline {

/// Separable: W = W1(I1) + W2(I2).
/// SurfaceInvariant: tensor surface directly over the (I1, I2) rectangle.
/// SurfaceMapped: tensor surface over the admissible domain mapped to (xi, eta).
enum class ModelKind { Separable, SurfaceInvariant, SurfaceMapped };

/// "separable", "surface" or "mapped".
std::string_view to_string(ModelKind kind);
ModelKind parse_kind(std::string_view text);

/// Layout of a spline energy model. Site lists live on normalized [0, 1] axes:
///  - Separable and SurfaceInvariant: x1 = (I1 - u_min) / (u_max - u_min) and
///    x2 = (T(I2) - T(3)) / (i2_axis_max - T(3)), T the polyconvex transform
///    (or the identity when domain.use_polyconvex is false);
///  - SurfaceMapped: (xi, eta) from map_forward.
struct ModelSpec {
  ModelKind kind = ModelKind::SurfaceMapped;
  DomainMapConfig domain;
  /// Upper end of the transformed second-invariant axis.
  double i2_axis_max = 1.0;
  std::vector<double> sites1;
  std::vector<double> sites2;

  int n1() const { return static_cast<int>(sites1.size()); }
  int n2() const { return static_cast<int>(sites2.size()); }
  /// n1 + n2 (Separable) or n1 * n2 (surfaces).
  int parameter_count() const;
  void validate() const;
};

/// Axis bounds from the dataset maxima (inflated by 1e-6 relative) and
/// uniformly spaced sites. `base` supplies delta and use_polyconvex; its
/// I1 bounds are replaced.
ModelSpec default_spec(ModelKind kind, std::span<const Sample> samples, int n1, int n2,
                       const DomainMapConfig& base = {});

/// Parameters pinned to zero so that W(3, 3) = 0.
std::vector<int> fixed_zero_indices(const ModelSpec& spec);

/// Location of an invariant pair on the model's normalized axes.
struct AxisPoint {
  double x1 = 0.0;
  double x2 = 0.0;
  bool extrapolated = false;
};

/// dW,1/dtheta and dW,2/dtheta at a point.
struct ParameterGradient {
  Eigen::RowVectorXd w1;
  Eigen::RowVectorXd w2;
};

/// Sensitivity splines of a spec, precomputed for repeated assembly.
class ModelBasis {
 public:
  explicit ModelBasis(ModelSpec spec);

  const ModelSpec& spec() const { return spec_; }
  int parameter_count() const { return spec_.parameter_count(); }
  const AxisSensitivity& axis1() const { return sens_.u; }
  const AxisSensitivity& axis2() const { return sens_.v; }
  /// Tensor sensitivities (axis1 along u); meaningful for surface kinds.
  const SensitivitySet& surface() const { return sens_; }

  /// Throws InputError when the point lies outside the model domain, unless
  /// `clamp` is set, in which case coordinates are clamped and flagged.
  AxisPoint locate(double i1, double i2, bool clamp = false) const;

  ParameterGradient sensitivity_derivatives(double i1, double i2) const;
  Eigen::RowVectorXd energy_row(double i1, double i2) const;
  /// Unweighted design row: P11 = row * theta.
  Eigen::RowVectorXd stress_row(Mode mode, double stretch) const;

 private:
  ModelSpec spec_;
  SensitivitySet sens_;
};

ParameterGradient sensitivity_derivatives(const ModelSpec& spec, double i1, double i2);

/// Normalized axis location of (I1, I2) for a spec; see ModelBasis::locate.
AxisPoint locate(const ModelSpec& spec, double i1, double i2, bool clamp = false);

struct ModelState {
  ModelSpec spec;
  Eigen::VectorXd theta;
  std::vector<int> fixed_zero;
};

struct Prediction {
  double stress = 0.0;
  bool extrapolated = false;
};

/// Evaluates a calibrated model by interpolating theta into curves or a
/// surface, independently of the sensitivity-spline route used for assembly.
class Model {
 public:
  Model(ModelSpec spec, Eigen::VectorXd theta);
  explicit Model(const ModelState& state) : Model(state.spec, state.theta) {}

  const ModelSpec& spec() const { return spec_; }
  const Eigen::VectorXd& theta() const { return theta_; }

  double energy(double i1, double i2) const;
  InvariantGradient gradient(double i1, double i2) const;
  double predict_stress(Mode mode, double stretch) const;
  /// Out-of-domain stretches are evaluated at the clamped point and flagged.
  Prediction predict_clamped(Mode mode, double stretch) const;

  /// Separable only.
  const Curve& curve1() const;
  const Curve& curve2() const;
  /// Surface kinds only; defined over the normalized axes.
  const Surface& surface() const;

 private:
  InvariantGradient gradient_at(double i1, double i2, const AxisPoint& at) const;

  ModelSpec spec_;
  Eigen::VectorXd theta_;
  std::optional<Curve> w1_;
  std::optional<Curve> w2_;
  std::optional<Surface> surface_;
};

double energy(const ModelState& state, double i1, double i2);
double predict_stress(const ModelState& state, Mode mode, double stretch);

/// Weighted least-squares system: ||A theta - y||^2 equals the sum over modes
/// of the mean squared stress residual.
struct Design {
  Eigen::MatrixXd a;
  Eigen::VectorXd y;
  Eigen::VectorXd weights;  // per row, 1 / sqrt(N_mode)
};

Design assemble_design(const ModelBasis& basis, std::span<const Sample> samples);
Design assemble_design(const ModelSpec& spec, std::span<const Sample> samples);

inline constexpr double kActivationLogFloor = -16.0;

struct ActivationReport {
  Eigen::VectorXd a;          // column norms
  Eigen::VectorXd a_rel;      // a / max(a)
  Eigen::VectorXd log10_rel;  // floored at kActivationLogFloor
};

ActivationReport activation(const Eigen::MatrixXd& a);

struct FitMetrics {
  std::map<Mode, int> count;
  std::map<Mode, double> mse;
  /// Absent for modes with fewer than two samples or zero variance.
  std::map<Mode, double> r2;
  double mse_combined = 0.0;
};

FitMetrics metrics(const Model& model, std::span<const Sample> samples);
FitMetrics metrics(const ModelState& state, std::span<const Sample> samples);

}  // namespace hyperspline
