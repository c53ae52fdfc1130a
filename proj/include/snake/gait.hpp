#pragma once

#include <cmath>
#include <stdexcept>

#include "snake/types.hpp"

namespace snake {

/// Harmonic joint-angle program. In kinematic mode both joints are driven,
/// phi1 on a cosine and phi2 on a sine so that equal amplitudes trace a
/// circle in shape space. In semi-passive mode only phi2 is driven (cosine);
/// gamma1/alpha1 then describe the passive joint's nominal center and are
/// not prescribed.
struct GaitSpec {
  Actuation mode = Actuation::Kinematic;
  double gamma1 = 0;  // phi1 offset [rad]
  double gamma2 = 0;  // phi2 offset [rad]
  double alpha1 = 0;  // phi1 amplitude [rad]
  double alpha2 = 0;  // phi2 amplitude [rad]
  double omega = 1;   // actuation frequency [rad/s]
  double phase1 = 0;  // phi1 phase offset [rad]
  double phase2 = 0;  // phi2 phase offset [rad]

  double period() const { return 2.0 * kPi / omega; }

  void validate() const {
    if (!(omega > 0) || !std::isfinite(omega))
      throw std::invalid_argument("GaitSpec.omega must be positive");
    if (!(alpha1 >= 0) || !(alpha2 >= 0))
      throw std::invalid_argument("GaitSpec amplitudes must be non-negative");
    if (std::abs(gamma1) + alpha1 >= kPi)
      throw std::invalid_argument(
          "GaitSpec joint 1 range |gamma1| + alpha1 must stay below pi");
    if (std::abs(gamma2) + alpha2 >= kPi)
      throw std::invalid_argument(
          "GaitSpec joint 2 range |gamma2| + alpha2 must stay below pi");
    for (double v : {gamma1, gamma2, alpha1, alpha2, phase1, phase2})
      if (!std::isfinite(v))
        throw std::invalid_argument("GaitSpec fields must be finite");
  }
};

struct JointSignal {
  double angle = 0;
  double rate = 0;
  double accel = 0;
};

struct GaitSample {
  JointSignal phi1;
  JointSignal phi2;
};

/// Exact analytic joint signals at time t. For semi-passive gaits phi1 is
/// reported as the constant nominal center (the actual joint state lives in
/// the simulator).
inline GaitSample eval_gait(const GaitSpec& g, double t) {
  GaitSample s;
  const double w = g.omega;
  if (g.mode == Actuation::Kinematic) {
    const double a1 = w * t + g.phase1;
    s.phi1 = {g.gamma1 + g.alpha1 * std::cos(a1),
              -g.alpha1 * w * std::sin(a1),
              -g.alpha1 * w * w * std::cos(a1)};
    const double a2 = w * t + g.phase2;
    s.phi2 = {g.gamma2 + g.alpha2 * std::sin(a2),
              g.alpha2 * w * std::cos(a2),
              -g.alpha2 * w * w * std::sin(a2)};
  } else {
    s.phi1 = {g.gamma1, 0.0, 0.0};
    const double a2 = w * t + g.phase2;
    s.phi2 = {g.gamma2 + g.alpha2 * std::cos(a2),
              -g.alpha2 * w * std::sin(a2),
              -g.alpha2 * w * w * std::cos(a2)};
  }
  return s;
}

/// Torsion spring and damper torque acting on the passive joint.
inline double passive_torque(double phi1, double phi1dot,
                             const RobotParams& p) {
  return -p.k_tau * (phi1 - p.gamma1) - p.c_tau * phi1dot;
}

enum class GaitPreset {
  AsymmetricKinematic,
  SymmetricKinematic,
  AsymmetricSemiPassive,
  SymmetricSemiPassive,
};

inline GaitSpec make_gait(GaitPreset preset, double omega) {
  GaitSpec g;
  g.omega = omega;
  const double a30 = deg2rad(30.0), a45 = deg2rad(45.0);
  switch (preset) {
    case GaitPreset::AsymmetricKinematic:
      g.mode = Actuation::Kinematic;
      g.gamma1 = a45;
      g.gamma2 = -a45;
      g.alpha1 = g.alpha2 = a30;
      break;
    case GaitPreset::SymmetricKinematic:
      g.mode = Actuation::Kinematic;
      g.gamma1 = g.gamma2 = 0;
      g.alpha1 = g.alpha2 = a30;
      break;
    case GaitPreset::AsymmetricSemiPassive:
      g.mode = Actuation::SemiPassive;
      g.gamma1 = a45;
      g.gamma2 = -a45;
      g.alpha1 = 0;
      g.alpha2 = a30;
      break;
    case GaitPreset::SymmetricSemiPassive:
      g.mode = Actuation::SemiPassive;
      g.gamma1 = 0;
      g.gamma2 = 0;
      g.alpha1 = 0;
      g.alpha2 = a30;
      break;
  }
  g.validate();
  return g;
}

}  // namespace snake
