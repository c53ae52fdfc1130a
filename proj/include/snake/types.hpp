#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

namespace snake {

template <class T> using Vec2 = Eigen::Matrix<T, 2, 1>;
template <class T> using Vec3 = Eigen::Matrix<T, 3, 1>;
template <class T> using Vec4 = Eigen::Matrix<T, 4, 1>;
template <class T> using Vec5 = Eigen::Matrix<T, 5, 1>;
template <class T> using Mat2 = Eigen::Matrix<T, 2, 2>;
template <class T> using Mat3 = Eigen::Matrix<T, 3, 3>;
template <class T> using Mat5 = Eigen::Matrix<T, 5, 5>;
template <class T> using Mat35 = Eigen::Matrix<T, 3, 5>;
template <class T> using Mat25 = Eigen::Matrix<T, 2, 5>;

using Vec2d = Vec2<double>;
using Vec3d = Vec3<double>;
using Vec4d = Vec4<double>;
using Vec5d = Vec5<double>;
using Mat3d = Mat3<double>;
using Mat5d = Mat5<double>;
using Mat35d = Mat35<double>;
using VecXd = Eigen::VectorXd;
using MatXd = Eigen::MatrixXd;

inline constexpr double kPi = 3.14159265358979323846;

inline constexpr double deg2rad(double d) { return d * kPi / 180.0; }
inline constexpr double rad2deg(double r) { return r * 180.0 / kPi; }

/// Generalized coordinate order used throughout: q = (x, y, theta, phi1, phi2).
/// Body block q_b = (x, y, theta), shape block q_s = (phi1, phi2).
/// Semi-passive split: q_p = (x, y, theta, phi1), q_a = (phi2).
enum CoordIndex { IX = 0, IY = 1, ITH = 2, IPHI1 = 3, IPHI2 = 4 };

enum class Actuation { Kinematic, SemiPassive };
enum class Wheels { NoSkid, ViscousSkid };

/// Which force terms enter the dynamics.
/// ViscousSkid drops the no-slip constraints entirely and replaces them with
/// viscous lateral forces; roll_dissipation toggles the longitudinal drag
/// terms independently of the wheel model.
struct ModelConfig {
  Actuation actuation = Actuation::Kinematic;
  Wheels wheels = Wheels::NoSkid;
  bool roll_dissipation = false;
};

template <class T>
struct RobotParamsT {
  T m0{}, m1{}, m2{};     // link masses [kg]
  T I0{}, I1{}, I2{};     // link inertias about their mass centers [kg m^2]
  T h{};                  // middle-link half length, center to joint [m]
  T l{};                  // joint to wheel-axle distance on a side link [m]
  T b{};                  // joint to side-link mass center distance [m]
  T cR0{}, cR1{}, cR2{};  // roll (longitudinal) drag coefficients [N s/m]
  T cS0{}, cS1{}, cS2{};  // skid (lateral) drag coefficients [N s/m]
  T k_tau{};              // passive joint torsional stiffness [N m/rad]
  T c_tau{};              // passive joint torsional damping [N m s/rad]
  T gamma1{};             // passive joint free angle [rad]

  T cR(int i) const { return i == 0 ? cR0 : (i == 1 ? cR1 : cR2); }
  T cS(int i) const { return i == 0 ? cS0 : (i == 1 ? cS1 : cS2); }
  T mass(int i) const { return i == 0 ? m0 : (i == 1 ? m1 : m2); }
  T inertia(int i) const { return i == 0 ? I0 : (i == 1 ? I1 : I2); }

  void validate() const {
    auto positive = [](T v, const char* name) {
      if (!(v > T(0)) || !std::isfinite(double(v)))
        throw std::invalid_argument(std::string("RobotParams.") + name +
                                    " must be positive and finite");
    };
    auto non_negative = [](T v, const char* name) {
      if (!(v >= T(0)) || !std::isfinite(double(v)))
        throw std::invalid_argument(std::string("RobotParams.") + name +
                                    " must be non-negative and finite");
    };
    positive(m0, "m0");
    positive(m1, "m1");
    positive(m2, "m2");
    positive(I0, "I0");
    positive(I1, "I1");
    positive(I2, "I2");
    positive(h, "h");
    positive(l, "l");
    positive(b, "b");
    non_negative(cR0, "cR0");
    non_negative(cR1, "cR1");
    non_negative(cR2, "cR2");
    non_negative(cS0, "cS0");
    non_negative(cS1, "cS1");
    non_negative(cS2, "cS2");
    non_negative(k_tau, "k_tau");
    non_negative(c_tau, "c_tau");
    if (!std::isfinite(double(gamma1)))
      throw std::invalid_argument("RobotParams.gamma1 must be finite");
  }
};

using RobotParams = RobotParamsT<double>;

enum class ParamVariant { Simulation, FittedAsymmetric, FittedSymmetric };

/// Reference parameter set for the kinematically actuated build.
inline RobotParams table1_params(ParamVariant v = ParamVariant::Simulation) {
  RobotParams p;
  p.m0 = 1.04;
  p.m1 = p.m2 = 0.2;
  p.I0 = 86e-4;
  p.I1 = p.I2 = 5e-4;
  p.h = 0.144;
  p.l = 0.112;
  p.b = 0.0685;
  p.cR0 = 0.6;
  p.cR1 = p.cR2 = 0.3;
  switch (v) {
    case ParamVariant::Simulation:
      p.cS0 = 100;
      p.cS1 = 50;
      p.cS2 = 50;
      break;
    case ParamVariant::FittedAsymmetric:
      p.cS0 = 74.5;
      p.cS1 = 91;
      p.cS2 = 95;
      break;
    case ParamVariant::FittedSymmetric:
      p.cS0 = 104;
      p.cS1 = 34;
      p.cS2 = 45;
      break;
  }
  p.k_tau = 0;
  p.c_tau = 0;
  p.gamma1 = 0;
  return p;
}

/// Reference parameter set for the semi-passive build (one joint driven,
/// the other on a torsion spring and damper).
inline RobotParams table2_params(ParamVariant v = ParamVariant::Simulation) {
  RobotParams p = table1_params(ParamVariant::Simulation);
  p.m1 = p.m2 = 0.34;
  p.I1 = p.I2 = 5.9e-4;
  p.b = 0.058;
  switch (v) {
    case ParamVariant::Simulation:
      p.cS0 = 400;
      p.cS1 = 200;
      p.cS2 = 200;
      p.k_tau = 0.188;
      p.c_tau = 0.007;
      break;
    case ParamVariant::FittedSymmetric:
      p.cS0 = 420;
      p.cS1 = 200;
      p.cS2 = 70;
      p.k_tau = 0.137;
      p.c_tau = 0.006;
      break;
    case ParamVariant::FittedAsymmetric:
      throw std::invalid_argument(
          "table2_params: no fitted-asymmetric variant exists");
  }
  p.gamma1 = 0;
  return p;
}

struct SingularConfiguration : std::runtime_error {
  Vec5d q;
  double residual;
  SingularConfiguration(const Vec5d& q_, double residual_)
      : std::runtime_error("singular configuration: |det(W_b)| = " +
                           std::to_string(std::abs(residual_)) +
                           " at phi1 = " + std::to_string(q_[IPHI1]) +
                           ", phi2 = " + std::to_string(q_[IPHI2])),
        q(q_),
        residual(residual_) {}
};

struct IllConditioned : std::runtime_error {
  double condition;
  explicit IllConditioned(double cond)
      : std::runtime_error(
            "constrained dynamics system is ill conditioned (estimate " +
            std::to_string(cond) + ")"),
        condition(cond) {}
};

struct StepSizeCollapse : std::runtime_error {
  double t;
  explicit StepSizeCollapse(double t_)
      : std::runtime_error("integrator step size collapsed at t = " +
                           std::to_string(t_)),
        t(t_) {}
};

struct NoCycleFound : std::runtime_error {
  NoCycleFound() : std::runtime_error("no mean-crossing cycle found") {}
};

struct WindowTooLarge : std::invalid_argument {
  explicit WindowTooLarge(int window, long n)
      : std::invalid_argument("smoothing window " + std::to_string(window) +
                              " exceeds trace length " + std::to_string(n)) {}
};

struct InsufficientPeaks : std::runtime_error {
  explicit InsufficientPeaks(int found)
      : std::runtime_error("log-decrement fit needs at least 3 peaks, found " +
                           std::to_string(found)) {}
};

}  // namespace snake
