#include "hyperspline/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hyperspline/error.hpp"

namespace hyperspline {

namespace {

void require_stretch(double stretch) {
  if (!std::isfinite(stretch) || !(stretch > 0.0)) {
    throw InputError("stretch must be positive, got " + std::to_string(stretch));
  }
}

}  // namespace

std::string_view to_string(Mode mode) {
  switch (mode) {
    case Mode::UT: return "UT";
    case Mode::BT: return "BT";
    case Mode::PS: return "PS";
  }
  return "?";
}

Mode parse_mode(std::string_view text) {
  if (text == "UT") return Mode::UT;
  if (text == "BT") return Mode::BT;
  if (text == "PS") return Mode::PS;
  throw InputError("unknown deformation mode '" + std::string(text) + "'");
}

InvariantPair invariants(Mode mode, double l) {
  require_stretch(l);
  switch (mode) {
    case Mode::UT: return {l * l + 2.0 / l, 1.0 / (l * l) + 2.0 * l};
    case Mode::BT: {
      const double l2 = l * l;
      return {2.0 * l2 + 1.0 / (l2 * l2), 2.0 / l2 + l2 * l2};
    }
    case Mode::PS: {
      const double s = l * l + 1.0 + 1.0 / (l * l);
      return {s, s};
    }
  }
  return {};
}

StressCoefficients stress_coefficients(Mode mode, double l) {
  require_stretch(l);
  const double l2 = l * l;
  const double l3 = l2 * l;
  switch (mode) {
    case Mode::UT: return {2.0 * (l - 1.0 / l2), 2.0 * (1.0 - 1.0 / l3)};
    case Mode::BT: return {2.0 * (l - 1.0 / (l3 * l2)), 2.0 * (l3 - 1.0 / l3)};
    case Mode::PS: {
      const double c = 2.0 * (l - 1.0 / l3);
      return {c, c};
    }
  }
  return {};
}

InvariantMaxima max_invariants(std::span<const Sample> samples) {
  if (samples.empty()) throw InputError("max_invariants: empty dataset");
  InvariantMaxima m;
  for (const Sample& s : samples) {
    const InvariantPair p = invariants(s.mode, s.stretch);
    m.i1 = std::max(m.i1, p.i1);
    m.i2 = std::max(m.i2, p.i2);
  }
  m.i2_poly = poly_transform(m.i2).value;
  return m;
}

}  // namespace hyperspline
