#pragma once

#include <span>
#include <string_view>

#include "hyperspline/domain.hpp"

namespace hyperspline {

/// Homogeneous deformation modes: uniaxial tension, equi-biaxial tension and
/// pure shear, all incompressible with diagonal deformation gradient.
enum class Mode { UT, BT, PS };

inline constexpr Mode kAllModes[] = {Mode::UT, Mode::BT, Mode::PS};

std::string_view to_string(Mode mode);
/// Accepts "UT", "BT" or "PS".
Mode parse_mode(std::string_view text);

/// One measurement: stretch and nominal stress (kPa) in the loading direction.
struct Sample {
  Mode mode = Mode::UT;
  double stretch = 1.0;
  double stress = 0.0;
};

/// Nominal stress P11 = alpha * W,1 + beta * W,2 with the hydrostatic pressure
/// eliminated through the traction-free thickness direction.
struct StressCoefficients {
  double alpha = 0.0;
  double beta = 0.0;
};

struct InvariantMaxima {
  double i1 = 3.0;
  double i2 = 3.0;
  double i2_poly = 0.0;
};

/// Stretch window accepted when reading data.
inline constexpr double kMinStretch = 0.05;
inline constexpr double kMaxStretch = 20.0;

InvariantPair invariants(Mode mode, double stretch);
StressCoefficients stress_coefficients(Mode mode, double stretch);
InvariantMaxima max_invariants(std::span<const Sample> samples);

}  // namespace hyperspline
