#pragma once

#include <array>

#include "snake/types.hpp"

// Planar three-link wheeled vehicle, middle link of half length h carrying
// wheel 0 at its center (x, y), side links hinged at the middle link's ends.
// Link 1 points along angle theta - phi1 from the +h end, link 2 along
// -(theta + phi2) from the -h end. Wheels sit at distance l from the joints,
// side-link mass centers at distance b. Everything here is a pure function of
// (q, qd, params) and is templated on the scalar type.

namespace snake {

template <class T>
Vec2<T> heading(const T& a) {
  using std::cos, std::sin;
  return Vec2<T>(cos(a), sin(a));
}

template <class T>
Vec2<T> lateral(const T& a) {
  using std::cos, std::sin;
  return Vec2<T>(-sin(a), cos(a));
}

template <class Derived>
Vec3<typename Derived::Scalar> link_angles(const Eigen::MatrixBase<Derived>& q) {
  using T = typename Derived::Scalar;
  eigen_assert(q.size() == 5);
  return Vec3<T>(q[ITH], q[ITH] - q[IPHI1], q[ITH] + q[IPHI2]);
}

template <class T>
struct WheelFrame {
  Vec2<T> r;  // wheel position
  Vec2<T> t;  // roll (longitudinal) direction
  Vec2<T> n;  // skid (lateral) direction
};

template <class Derived, class T = typename Derived::Scalar>
std::array<WheelFrame<T>, 3> wheel_frames(const Eigen::MatrixBase<Derived>& q,
                                          const RobotParamsT<T>& p) {
  eigen_assert(q.size() == 5);
  const Vec3<T> th = link_angles(q);
  const Vec2<T> r0(q[IX], q[IY]);
  std::array<WheelFrame<T>, 3> w;
  w[0] = {r0, heading(th[0]), lateral(th[0])};
  w[1] = {r0 + p.h * heading(th[0]) + p.l * heading(th[1]), heading(th[1]),
          lateral(th[1])};
  w[2] = {r0 - p.h * heading(th[0]) - p.l * heading(th[2]), heading(th[2]),
          lateral(th[2])};
  return w;
}

/// Velocity Jacobians of the three wheel positions, v_wheel_i = J_i * qd.
template <class Derived, class T = typename Derived::Scalar>
std::array<Mat25<T>, 3> wheel_jacobians(const Eigen::MatrixBase<Derived>& q,
                                        const RobotParamsT<T>& p) {
  eigen_assert(q.size() == 5);
  const Vec3<T> th = link_angles(q);
  std::array<Mat25<T>, 3> J;
  for (auto& Ji : J) {
    Ji.setZero();
    Ji(0, IX) = T(1);
    Ji(1, IY) = T(1);
  }
  J[1].col(ITH) = p.h * lateral(th[0]) + p.l * lateral(th[1]);
  J[1].col(IPHI1) = -p.l * lateral(th[1]);
  J[2].col(ITH) = -p.h * lateral(th[0]) - p.l * lateral(th[2]);
  J[2].col(IPHI2) = -p.l * lateral(th[2]);
  return J;
}

/// Time derivatives of the wheel Jacobians along (q, qd).
template <class D1, class D2, class T = typename D1::Scalar>
std::array<Mat25<T>, 3> wheel_jacobian_rates(const Eigen::MatrixBase<D1>& q,
                                             const Eigen::MatrixBase<D2>& qd,
                                             const RobotParamsT<T>& p) {
  eigen_assert(q.size() == 5 && qd.size() == 5);
  const Vec3<T> th = link_angles(q);
  const Vec3<T> thd(qd[ITH], qd[ITH] - qd[IPHI1], qd[ITH] + qd[IPHI2]);
  std::array<Mat25<T>, 3> Jd;
  for (auto& Ji : Jd) Ji.setZero();
  Jd[1].col(ITH) =
      -p.h * thd[0] * heading(th[0]) - p.l * thd[1] * heading(th[1]);
  Jd[1].col(IPHI1) = p.l * thd[1] * heading(th[1]);
  Jd[2].col(ITH) =
      p.h * thd[0] * heading(th[0]) + p.l * thd[2] * heading(th[2]);
  Jd[2].col(IPHI2) = p.l * thd[2] * heading(th[2]);
  return Jd;
}

/// No-slip constraint matrix, rows n_i . v_wheel_i = (W qd)_i.
template <class Derived, class T = typename Derived::Scalar>
Mat35<T> constraint_matrix(const Eigen::MatrixBase<Derived>& q,
                           const RobotParamsT<T>& p) {
  const auto frames = wheel_frames(q, p);
  const auto J = wheel_jacobians(q, p);
  Mat35<T> W;
  for (int i = 0; i < 3; ++i) W.row(i) = frames[i].n.transpose() * J[i];
  return W;
}

/// Time derivative of the constraint matrix along (q, qd).
template <class D1, class D2, class T = typename D1::Scalar>
Mat35<T> constraint_matrix_dot(const Eigen::MatrixBase<D1>& q,
                               const Eigen::MatrixBase<D2>& qd,
                               const RobotParamsT<T>& p) {
  const Vec3<T> thd(qd[ITH], qd[ITH] - qd[IPHI1], qd[ITH] + qd[IPHI2]);
  const auto frames = wheel_frames(q, p);
  const auto J = wheel_jacobians(q, p);
  const auto Jd = wheel_jacobian_rates(q, qd, p);
  Mat35<T> Wd;
  for (int i = 0; i < 3; ++i) {
    const Vec2<T> nd = -thd[i] * frames[i].t;  // d/dt of lateral(th_i)
    Wd.row(i) = nd.transpose() * J[i] + frames[i].n.transpose() * Jd[i];
  }
  return Wd;
}

/// Closed-form determinant of the body block W_b (columns x, y, theta).
/// Vanishes exactly when phi1 = phi2 (straight-line family) and on the
/// second singular family where the three wheel axes meet in a point.
template <class Derived, class T = typename Derived::Scalar>
T det_Wb(const Eigen::MatrixBase<Derived>& q, const RobotParamsT<T>& p) {
  using std::sin;
  eigen_assert(q.size() == 5);
  const T p1 = q[IPHI1], p2 = q[IPHI2];
  return p.h * sin(p1 - p2) + p.l * (sin(p1) - sin(p2));
}

/// Residual of the bounded-velocity condition at a straight configuration
/// phi1 = phi2: phi1dot*sin(phi2) + phi2dot*sin(phi1). Body rates pass
/// through such a singular crossing bounded iff this vanishes there.
template <class D1, class D2, class T = typename D1::Scalar>
T boundedness_residual(const Eigen::MatrixBase<D1>& q,
                       const Eigen::MatrixBase<D2>& qd_s) {
  using std::sin;
  return qd_s[0] * sin(q[IPHI2]) + qd_s[1] * sin(q[IPHI1]);
}

template <class T>
struct LinkKinematics {
  Mat25<T> J;                    // mass-center velocity Jacobian
  std::array<Mat25<T>, 3> dJ;    // partials wrt theta, phi1, phi2
  Vec5<T> w;                     // angular velocity row (constant in q)
};

template <class Derived, class T = typename Derived::Scalar>
std::array<LinkKinematics<T>, 3> link_kinematics(
    const Eigen::MatrixBase<Derived>& q, const RobotParamsT<T>& p) {
  eigen_assert(q.size() == 5);
  const Vec3<T> th = link_angles(q);
  const Vec2<T> e0 = heading(th[0]), e1 = heading(th[1]), e2 = heading(th[2]);
  const Vec2<T> n0 = lateral(th[0]), n1 = lateral(th[1]), n2 = lateral(th[2]);

  std::array<LinkKinematics<T>, 3> L;
  for (auto& Lk : L) {
    Lk.J.setZero();
    Lk.J(0, IX) = T(1);
    Lk.J(1, IY) = T(1);
    for (auto& d : Lk.dJ) d.setZero();
    Lk.w.setZero();
    Lk.w[ITH] = T(1);
  }

  L[1].J.col(ITH) = p.h * n0 + p.b * n1;
  L[1].J.col(IPHI1) = -p.b * n1;
  L[1].w[IPHI1] = T(-1);
  L[1].dJ[0].col(ITH) = -p.h * e0 - p.b * e1;
  L[1].dJ[0].col(IPHI1) = p.b * e1;
  L[1].dJ[1].col(ITH) = p.b * e1;
  L[1].dJ[1].col(IPHI1) = -p.b * e1;

  L[2].J.col(ITH) = -p.h * n0 - p.b * n2;
  L[2].J.col(IPHI2) = -p.b * n2;
  L[2].w[IPHI2] = T(1);
  L[2].dJ[0].col(ITH) = p.h * e0 + p.b * e2;
  L[2].dJ[0].col(IPHI2) = p.b * e2;
  L[2].dJ[2].col(ITH) = p.b * e2;
  L[2].dJ[2].col(IPHI2) = p.b * e2;

  return L;
}

template <class Derived, class T = typename Derived::Scalar>
Mat5<T> mass_matrix(const Eigen::MatrixBase<Derived>& q,
                    const RobotParamsT<T>& p) {
  const auto L = link_kinematics(q, p);
  Mat5<T> M = Mat5<T>::Zero();
  for (int k = 0; k < 3; ++k) {
    M += p.mass(k) * L[k].J.transpose() * L[k].J;
    M += p.inertia(k) * L[k].w * L[k].w.transpose();
  }
  return M;
}

template <class D1, class D2, class T = typename D1::Scalar>
T kinetic_energy(const Eigen::MatrixBase<D1>& q,
                 const Eigen::MatrixBase<D2>& qd, const RobotParamsT<T>& p) {
  eigen_assert(qd.size() == 5);
  const Vec5<T> v = qd;
  return T(0.5) * v.dot(mass_matrix(q, p) * v);
}

template <class Derived, class T = typename Derived::Scalar>
T potential_energy(const Eigen::MatrixBase<Derived>& q,
                   const RobotParamsT<T>& p, const ModelConfig& cfg) {
  if (cfg.actuation != Actuation::SemiPassive) return T(0);
  const T d = q[IPHI1] - p.gamma1;
  return T(0.5) * p.k_tau * d * d;
}

/// Quadratic-velocity (Coriolis/centrifugal) vector: M qdd + B + G = Q.
template <class D1, class D2, class T = typename D1::Scalar>
Vec5<T> coriolis_vector(const Eigen::MatrixBase<D1>& q,
                        const Eigen::MatrixBase<D2>& qd,
                        const RobotParamsT<T>& p) {
  eigen_assert(q.size() == 5 && qd.size() == 5);
  const auto L = link_kinematics(q, p);
  const Vec5<T> v = qd;

  std::array<Mat5<T>, 3> dM;  // partials of M wrt theta, phi1, phi2
  for (auto& m : dM) m.setZero();
  for (int k = 0; k < 3; ++k) {
    for (int a = 0; a < 3; ++a) {
      const Mat5<T> s = L[k].dJ[a].transpose() * L[k].J;
      dM[a] += p.mass(k) * (s + s.transpose());
    }
  }

  Mat5<T> Mdot = Mat5<T>::Zero();
  for (int a = 0; a < 3; ++a) Mdot += dM[a] * v[ITH + a];

  Vec5<T> B = Mdot * v;
  for (int a = 0; a < 3; ++a) B[ITH + a] -= T(0.5) * v.dot(dM[a] * v);
  return B;
}

/// Spring force vector (gradient of the potential).
template <class Derived, class T = typename Derived::Scalar>
Vec5<T> spring_vector(const Eigen::MatrixBase<Derived>& q,
                      const RobotParamsT<T>& p, const ModelConfig& cfg) {
  Vec5<T> G = Vec5<T>::Zero();
  if (cfg.actuation == Actuation::SemiPassive)
    G[IPHI1] = p.k_tau * (q[IPHI1] - p.gamma1);
  return G;
}

/// Rayleigh dissipation matrix R: D = qd . R . qd / 2, F_d = -R qd.
/// Skid terms enter only in the viscous-skid wheel model (the no-skid model
/// replaces them with hard constraints), roll terms only when enabled, and
/// the joint damper only in the semi-passive configuration.
template <class Derived, class T = typename Derived::Scalar>
Mat5<T> rayleigh_matrix(const Eigen::MatrixBase<Derived>& q,
                        const RobotParamsT<T>& p, const ModelConfig& cfg) {
  const auto frames = wheel_frames(q, p);
  const auto J = wheel_jacobians(q, p);
  Mat5<T> R = Mat5<T>::Zero();
  for (int i = 0; i < 3; ++i) {
    if (cfg.roll_dissipation) {
      const Vec5<T> a = J[i].transpose() * frames[i].t;
      R += p.cR(i) * a * a.transpose();
    }
    if (cfg.wheels == Wheels::ViscousSkid) {
      const Vec5<T> w = J[i].transpose() * frames[i].n;
      R += p.cS(i) * w * w.transpose();
    }
  }
  if (cfg.actuation == Actuation::SemiPassive) R(IPHI1, IPHI1) += p.c_tau;
  return R;
}

template <class D1, class D2, class T = typename D1::Scalar>
Vec5<T> dissipative_forces(const Eigen::MatrixBase<D1>& q,
                           const Eigen::MatrixBase<D2>& qd,
                           const RobotParamsT<T>& p, const ModelConfig& cfg) {
  const Vec5<T> v = qd;
  return -(rayleigh_matrix(q, p, cfg) * v);
}

/// Instantaneous dissipated power, 2D = qd . R . qd >= 0.
template <class D1, class D2, class T = typename D1::Scalar>
T dissipation_power(const Eigen::MatrixBase<D1>& q,
                    const Eigen::MatrixBase<D2>& qd, const RobotParamsT<T>& p,
                    const ModelConfig& cfg) {
  const Vec5<T> v = qd;
  return v.dot(rayleigh_matrix(q, p, cfg) * v);
}

/// Longitudinal and lateral wheel speeds, v_par[i] = t_i . v_i,
/// v_perp[i] = n_i . v_i.
template <class D1, class D2, class T = typename D1::Scalar>
void wheel_velocities(const Eigen::MatrixBase<D1>& q,
                      const Eigen::MatrixBase<D2>& qd,
                      const RobotParamsT<T>& p, Vec3<T>& v_par,
                      Vec3<T>& v_perp) {
  const auto frames = wheel_frames(q, p);
  const auto J = wheel_jacobians(q, p);
  const Vec5<T> v = qd;
  for (int i = 0; i < 3; ++i) {
    const Vec2<T> vi = J[i] * v;
    v_par[i] = frames[i].t.dot(vi);
    v_perp[i] = frames[i].n.dot(vi);
  }
}

template <class T>
struct DynamicsTerms {
  Mat5<T> M;
  Vec5<T> B;   // quadratic-velocity vector
  Vec5<T> G;   // spring forces
  Vec5<T> Fd;  // dissipative generalized forces
};

template <class D1, class D2, class T = typename D1::Scalar>
DynamicsTerms<T> dynamics_terms(const Eigen::MatrixBase<D1>& q,
                                const Eigen::MatrixBase<D2>& qd,
                                const RobotParamsT<T>& p,
                                const ModelConfig& cfg) {
  return {mass_matrix(q, p), coriolis_vector(q, qd, p),
          spring_vector(q, p, cfg), dissipative_forces(q, qd, p, cfg)};
}

}  // namespace snake
