#include <doctest.h>

#include <random>

#include "snake/model.hpp"

using namespace snake;

namespace {

std::mt19937 rng(12345);

double uniform(double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

Vec5d random_q() {
  Vec5d q;
  q << uniform(-2, 2), uniform(-2, 2), uniform(-kPi, kPi), uniform(-2.0, 2.0),
      uniform(-2.0, 2.0);
  return q;
}

Vec5d random_qd() {
  Vec5d v;
  for (int i = 0; i < 5; ++i) v[i] = uniform(-1, 1);
  return v;
}

/// Independent kinematics: positions and orientations written straight from
/// the layout (middle link at (x, y) heading theta; joints at +-h along the
/// heading; side links tilted by -phi1 / +phi2 with wheel and mass center at
/// l and b outward from the joint).
struct HandKinematics {
  Vec2d r0, rw1, rw2, rc1, rc2;
  double th0, th1, th2;
};

HandKinematics hand_kinematics(const Vec5d& q, const RobotParams& p) {
  HandKinematics k;
  k.th0 = q[ITH];
  k.th1 = q[ITH] - q[IPHI1];
  k.th2 = q[ITH] + q[IPHI2];
  const Vec2d e0(std::cos(k.th0), std::sin(k.th0));
  const Vec2d e1(std::cos(k.th1), std::sin(k.th1));
  const Vec2d e2(std::cos(k.th2), std::sin(k.th2));
  k.r0 = q.head<2>();
  k.rw1 = k.r0 + p.h * e0 + p.l * e1;
  k.rw2 = k.r0 - p.h * e0 - p.l * e2;
  k.rc1 = k.r0 + p.h * e0 + p.b * e1;
  k.rc2 = k.r0 - p.h * e0 - p.b * e2;
  return k;
}

/// Kinetic energy by direct velocity composition, independent of the
/// Jacobian assembly under test.
double hand_kinetic_energy(const Vec5d& q, const Vec5d& qd,
                           const RobotParams& p) {
  const double th0 = q[ITH], th1 = th0 - q[IPHI1], th2 = th0 + q[IPHI2];
  const double w0 = qd[ITH], w1 = w0 - qd[IPHI1], w2 = w0 + qd[IPHI2];
  const Vec2d n0(-std::sin(th0), std::cos(th0));
  const Vec2d n1(-std::sin(th1), std::cos(th1));
  const Vec2d n2(-std::sin(th2), std::cos(th2));
  const Vec2d v0 = qd.head<2>();
  const Vec2d vc1 = v0 + p.h * w0 * n0 + p.b * w1 * n1;
  const Vec2d vc2 = v0 - p.h * w0 * n0 - p.b * w2 * n2;
  return 0.5 * (p.m0 * v0.squaredNorm() + p.I0 * w0 * w0 +
                p.m1 * vc1.squaredNorm() + p.I1 * w1 * w1 +
                p.m2 * vc2.squaredNorm() + p.I2 * w2 * w2);
}

}  // namespace

TEST_SUITE_BEGIN("model");

TEST_CASE("wheel frames in the straight configuration") {
  const RobotParams p = table1_params();
  const auto w = wheel_frames(Vec5d::Zero().eval(), p);
  CHECK(w[0].r.norm() == 0);
  CHECK((w[1].r - Vec2d(0.256, 0)).norm() < 1e-12);
  CHECK((w[2].r - Vec2d(-0.256, 0)).norm() < 1e-12);
  for (int i = 0; i < 3; ++i) {
    CHECK((w[i].t - Vec2d(1, 0)).norm() < 1e-14);
    CHECK((w[i].n - Vec2d(0, 1)).norm() < 1e-14);
  }
}

TEST_CASE("wheel frames rotate rigidly with the heading") {
  const RobotParams p = table1_params();
  Vec5d q = Vec5d::Zero();
  q[IPHI1] = 0.4;
  q[IPHI2] = -0.7;
  const auto base = wheel_frames(q, p);
  q[ITH] = kPi / 2;
  const auto rot = wheel_frames(q, p);
  Eigen::Matrix2d R;
  R << 0, -1, 1, 0;
  for (int i = 0; i < 3; ++i) {
    CHECK((rot[i].r - R * base[i].r).norm() < 1e-14);
    CHECK((rot[i].t - R * base[i].t).norm() < 1e-14);
  }
}

TEST_CASE("wheel 1 position with the first joint folded to 90 degrees") {
  const RobotParams p = table1_params();
  Vec5d q = Vec5d::Zero();
  q[IPHI1] = deg2rad(90);
  const auto w = wheel_frames(q, p);
  CHECK(w[1].r.isApprox(Vec2d(0.144, -0.112), 1e-12));
}

TEST_CASE("mass-center Jacobians match the hand geometry") {
  const RobotParams p = table1_params();
  const double eps = 1e-5;
  for (int trial = 0; trial < 50; ++trial) {
    const Vec5d q = random_q();
    const Vec5d qd = random_qd();
    const auto L = link_kinematics(q, p);
    const auto fwd = hand_kinematics((q + eps * qd).eval(), p);
    const auto bwd = hand_kinematics((q - eps * qd).eval(), p);
    CHECK((Vec2d(L[0].J * qd) - (fwd.r0 - bwd.r0) / (2 * eps)).norm() < 1e-9);
    CHECK((Vec2d(L[1].J * qd) - (fwd.rc1 - bwd.rc1) / (2 * eps)).norm() <
          1e-9);
    CHECK((Vec2d(L[2].J * qd) - (fwd.rc2 - bwd.rc2) / (2 * eps)).norm() <
          1e-9);
    CHECK(L[0].w.dot(qd) == qd[ITH]);
    CHECK(L[1].w.dot(qd) == qd[ITH] - qd[IPHI1]);
    CHECK(L[2].w.dot(qd) == qd[ITH] + qd[IPHI2]);
  }
}

TEST_CASE("constraint rows in the straight configuration") {
  const RobotParams p = table1_params();
  const Mat35d W = constraint_matrix(Vec5d::Zero().eval(), p);
  Mat35d expect;
  expect << 0, 1, 0, 0, 0,
      0, 1, p.l + p.h, -p.l, 0,
      0, 1, -p.l - p.h, 0, -p.l;
  CHECK((W - expect).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("constraint rows match their closed forms at random states") {
  const RobotParams p = table1_params();
  for (int trial = 0; trial < 100; ++trial) {
    const Vec5d q = random_q();
    const double th = q[ITH], p1 = q[IPHI1], p2 = q[IPHI2];
    Mat35d expect;
    expect << -std::sin(th), std::cos(th), 0, 0, 0,
        std::sin(p1 - th), std::cos(p1 - th), p.l + p.h * std::cos(p1), -p.l,
        0,
        -std::sin(th + p2), std::cos(th + p2), -p.l - p.h * std::cos(p2), 0,
        -p.l;
    const Mat35d W = constraint_matrix(q, p);
    CHECK((W - expect).cwiseAbs().maxCoeff() < 1e-13);
  }
}

TEST_CASE("constraint rows project wheel velocities") {
  const RobotParams p = table1_params();
  const double eps = 1e-5;
  for (int trial = 0; trial < 100; ++trial) {
    const Vec5d q = random_q();
    const Vec5d qd = random_qd();
    const auto frames = wheel_frames(q, p);
    const auto fwd = wheel_frames((q + eps * qd).eval(), p);
    const auto bwd = wheel_frames((q - eps * qd).eval(), p);
    const Vec3d Wqd = constraint_matrix(q, p) * qd;
    for (int i = 0; i < 3; ++i) {
      const Vec2d rdot = (fwd[i].r - bwd[i].r) / (2 * eps);
      CHECK(std::abs(Wqd[i] - frames[i].n.dot(rdot)) < 1e-10);
    }
  }
}

TEST_CASE("constraint matrix is independent of position") {
  const RobotParams p = table1_params();
  Vec5d q = random_q();
  const Mat35d W = constraint_matrix(q, p);
  q[IX] += 3.7;
  q[IY] -= 1.2;
  CHECK((constraint_matrix(q, p) - W).cwiseAbs().maxCoeff() == 0);
}

TEST_CASE("body-block determinant closed form") {
  const RobotParams p = table1_params();

  SUBCASE("vanishes whenever the joints agree") {
    for (double a : {-1.0, -0.3, 0.0, 0.5, 1.2}) {
      Vec5d q = random_q();
      q[IPHI1] = q[IPHI2] = a;
      CHECK(std::abs(det_Wb(q, p)) < 1e-15);
    }
  }

  SUBCASE("asymmetric preset value") {
    Vec5d q = Vec5d::Zero();
    q[IPHI1] = deg2rad(45);
    q[IPHI2] = deg2rad(-45);
    CHECK(det_Wb(q, p) ==
          doctest::Approx(0.144 + 0.224 * std::sin(kPi / 4)).epsilon(1e-12));
  }

  SUBCASE("matches the numeric 3x3 determinant at 10^4 random states") {
    for (int trial = 0; trial < 10000; ++trial) {
      const Vec5d q = random_q();
      const Mat3d Wb = constraint_matrix(q, p).leftCols<3>();
      CHECK(std::abs(det_Wb(q, p) - Wb.determinant()) < 1e-12);
    }
  }
}

TEST_CASE("bounded-velocity residual at straight configurations") {
  Vec5d q = Vec5d::Zero();
  q[IPHI1] = q[IPHI2] = deg2rad(30);
  CHECK(boundedness_residual(q, Vec2d(1, -1)) == doctest::Approx(0.0));
  CHECK(boundedness_residual(q, Vec2d(1, 1)) == doctest::Approx(1.0));
  q[IPHI1] = q[IPHI2] = 0;
  CHECK(boundedness_residual(q, Vec2d(3.1, -0.7)) == 0);
}

TEST_CASE("kinetic energy basics") {
  const RobotParams p = table1_params();
  const Vec5d q = random_q();
  CHECK(kinetic_energy(q, Vec5d::Zero().eval(), p) == 0);

  Vec5d qd = Vec5d::Zero();
  qd[IX] = 1;
  CHECK(kinetic_energy(q, qd, p) == doctest::Approx(0.72).epsilon(1e-12));
}

TEST_CASE("kinetic energy matches the velocity-composition oracle") {
  const RobotParams p = table1_params();
  for (int trial = 0; trial < 1000; ++trial) {
    const Vec5d q = random_q();
    const Vec5d qd = random_qd();
    const double T = kinetic_energy(q, qd, p);
    CHECK(T == doctest::Approx(hand_kinetic_energy(q, qd, p)).epsilon(1e-10));
  }
}

TEST_CASE("mass matrix is symmetric positive definite") {
  const RobotParams p = table1_params();
  for (int trial = 0; trial < 1000; ++trial) {
    const Vec5d q = random_q();
    const Mat5d M = mass_matrix(q, p);
    CHECK((M - M.transpose()).cwiseAbs().maxCoeff() < 1e-14);
    Eigen::SelfAdjointEigenSolver<Mat5d> es(M);
    CHECK(es.eigenvalues().minCoeff() > 0);
  }
}

TEST_CASE("mass matrix matches the finite-difference energy Hessian") {
  const RobotParams p = table1_params();
  const double eps = 1e-4;
  for (int trial = 0; trial < 50; ++trial) {
    const Vec5d q = random_q();
    Mat5d H;
    for (int i = 0; i < 5; ++i) {
      for (int j = 0; j < 5; ++j) {
        Vec5d pp = Vec5d::Zero(), pm = Vec5d::Zero();
        pp[i] += eps;
        pp[j] += eps;
        pm[i] += eps;
        pm[j] -= eps;
        const double tpp = kinetic_energy(q, pp, p);
        const double tpm = kinetic_energy(q, pm, p);
        const double tmp = kinetic_energy(q, (-pm).eval(), p);
        const double tmm = kinetic_energy(q, (-pp).eval(), p);
        H(i, j) = (tpp - tpm - tmp + tmm) / (4 * eps * eps);
      }
    }
    const Mat5d M = mass_matrix(q, p);
    CHECK((H - M).norm() / M.norm() < 1e-6);
  }
}

TEST_CASE("quadratic-velocity vector vanishes at rest") {
  const RobotParams p = table1_params();
  for (int trial = 0; trial < 20; ++trial) {
    const Vec5d q = random_q();
    CHECK(coriolis_vector(q, Vec5d::Zero().eval(), p).norm() == 0);
  }
}

TEST_CASE("quadratic-velocity vector matches the Lagrange finite difference") {
  // Along q(t) = q0 + qd t + qdd t^2 / 2, the momentum rate minus dT/dq
  // must equal M qdd + B at t = 0.
  const RobotParams p = table1_params();
  const double eps = 1e-6;
  for (int trial = 0; trial < 50; ++trial) {
    const Vec5d q = random_q();
    const Vec5d qd = random_qd();
    const Vec5d qdd = random_qd();

    auto momentum = [&](double t) -> Vec5d {
      const Vec5d qt = q + t * qd + 0.5 * t * t * qdd;
      const Vec5d qdt = qd + t * qdd;
      return mass_matrix(qt, p) * qdt;
    };
    const Vec5d pdot = (momentum(eps) - momentum(-eps)) / (2 * eps);

    Vec5d dTdq;
    for (int i = 0; i < 5; ++i) {
      Vec5d qp = q, qm = q;
      qp[i] += eps;
      qm[i] -= eps;
      dTdq[i] =
          (kinetic_energy(qp, qd, p) - kinetic_energy(qm, qd, p)) / (2 * eps);
    }

    const Vec5d lhs = pdot - dTdq;
    const Vec5d rhs = mass_matrix(q, p) * qdd + coriolis_vector(q, qd, p);
    CHECK((lhs - rhs).norm() / rhs.norm() < 1e-5);
  }
}

TEST_CASE("spring forces") {
  RobotParams p = table2_params();
  ModelConfig sp{Actuation::SemiPassive, Wheels::NoSkid, false};
  ModelConfig kin{Actuation::Kinematic, Wheels::NoSkid, false};
  p.gamma1 = deg2rad(45);

  Vec5d q = random_q();
  q[IPHI1] = p.gamma1;
  CHECK(spring_vector(q, p, sp).norm() == 0);
  CHECK(potential_energy(q, p, sp) == 0);

  q[IPHI1] = p.gamma1 + 0.2;
  const Vec5d G = spring_vector(q, p, sp);
  CHECK(G[IPHI1] == doctest::Approx(p.k_tau * 0.2).epsilon(1e-12));
  CHECK(potential_energy(q, p, sp) ==
        doctest::Approx(0.5 * p.k_tau * 0.04).epsilon(1e-12));

  CHECK(spring_vector(q, p, kin).norm() == 0);
  CHECK(potential_energy(q, p, kin) == 0);
}

TEST_CASE("dissipation vanishes at rest") {
  const RobotParams p = table2_params();
  const ModelConfig cfg{Actuation::SemiPassive, Wheels::ViscousSkid, true};
  const Vec5d q = random_q();
  CHECK(dissipative_forces(q, Vec5d::Zero().eval(), p, cfg).norm() == 0);
  CHECK(dissipation_power(q, Vec5d::Zero().eval(), p, cfg) == 0);
}

TEST_CASE("pure middle-wheel skid dissipates cS0 v^2") {
  RobotParams p = table1_params();
  p.cS1 = p.cS2 = 0;
  const ModelConfig cfg{Actuation::Kinematic, Wheels::ViscousSkid, false};
  Vec5d qd = Vec5d::Zero();
  qd[IY] = 0.3;
  CHECK(dissipation_power(Vec5d::Zero().eval(), qd, p, cfg) ==
        doctest::Approx(p.cS0 * 0.09).epsilon(1e-12));
}

TEST_CASE("pure roll dissipates the summed roll coefficients") {
  const RobotParams p = table1_params();
  const ModelConfig cfg{Actuation::Kinematic, Wheels::NoSkid, true};
  Vec5d qd = Vec5d::Zero();
  qd[IX] = 0.5;
  CHECK(dissipation_power(Vec5d::Zero().eval(), qd, p, cfg) ==
        doctest::Approx((p.cR0 + p.cR1 + p.cR2) * 0.25).epsilon(1e-12));
}

TEST_CASE("joint damper dissipates c_tau phidot^2 in semi-passive mode") {
  const RobotParams p = table2_params();
  const ModelConfig cfg{Actuation::SemiPassive, Wheels::NoSkid, false};
  Vec5d qd = Vec5d::Zero();
  qd[IPHI1] = 2.0;
  CHECK(dissipation_power(random_q(), qd, p, cfg) ==
        doctest::Approx(p.c_tau * 4.0).epsilon(1e-12));

  const ModelConfig kin{Actuation::Kinematic, Wheels::NoSkid, false};
  CHECK(dissipation_power(random_q(), qd, p, kin) == 0);
}

TEST_CASE("dissipative force obeys the quadratic-form identity") {
  const RobotParams p = table2_params();
  for (int a = 0; a < 2; ++a) {
    for (int w = 0; w < 2; ++w) {
      for (int r = 0; r < 2; ++r) {
        const ModelConfig cfg{a ? Actuation::SemiPassive : Actuation::Kinematic,
                              w ? Wheels::ViscousSkid : Wheels::NoSkid,
                              r == 1};
        for (int trial = 0; trial < 50; ++trial) {
          const Vec5d q = random_q();
          const Vec5d qd = random_qd();
          const double twoD = dissipation_power(q, qd, p, cfg);
          CHECK(twoD >= 0);
          const double work = dissipative_forces(q, qd, p, cfg).dot(qd);
          CHECK(std::abs(work + twoD) < 1e-10);
        }
      }
    }
  }
}

TEST_CASE("energy and dissipation are invariant under rigid motions") {
  const RobotParams p = table2_params();
  const ModelConfig cfg{Actuation::SemiPassive, Wheels::ViscousSkid, true};
  for (int trial = 0; trial < 50; ++trial) {
    const Vec5d q = random_q();
    const Vec5d qd = random_qd();
    const double T = kinetic_energy(q, qd, p);
    const double P = dissipation_power(q, qd, p, cfg);
    const double det = det_Wb(q, p);

    Vec5d qt = q;
    qt[IX] += 5.5;
    qt[IY] -= 2.1;
    CHECK(kinetic_energy(qt, qd, p) == doctest::Approx(T).epsilon(1e-12));
    CHECK(dissipation_power(qt, qd, p, cfg) ==
          doctest::Approx(P).epsilon(1e-12));
    CHECK(det_Wb(qt, p) == det);

    const double beta = uniform(-kPi, kPi);
    Eigen::Rotation2D<double> R(beta);
    Vec5d qr = q, qdr = qd;
    qr.head<2>() = R * q.head<2>();
    qr[ITH] += beta;
    qdr.head<2>() = R * qd.head<2>();
    CHECK(kinetic_energy(qr, qdr, p) == doctest::Approx(T).epsilon(1e-11));
    CHECK(dissipation_power(qr, qdr, p, cfg) ==
          doctest::Approx(P).epsilon(1e-11));
    CHECK(det_Wb(qr, p) == doctest::Approx(det).epsilon(1e-12));
  }
}

TEST_CASE("wheel velocities split into roll and skid components") {
  const RobotParams p = table1_params();
  for (int trial = 0; trial < 50; ++trial) {
    const Vec5d q = random_q();
    const Vec5d qd = random_qd();
    Vec3d v_par, v_perp;
    wheel_velocities(q, qd, p, v_par, v_perp);
    const auto frames = wheel_frames(q, p);
    const double eps = 1e-5;
    const auto fwd = wheel_frames((q + eps * qd).eval(), p);
    const auto bwd = wheel_frames((q - eps * qd).eval(), p);
    for (int i = 0; i < 3; ++i) {
      const Vec2d rdot = (fwd[i].r - bwd[i].r) / (2 * eps);
      CHECK(std::abs(v_par[i] - frames[i].t.dot(rdot)) < 1e-9);
      CHECK(std::abs(v_perp[i] - frames[i].n.dot(rdot)) < 1e-9);
      CHECK(v_par[i] * v_par[i] + v_perp[i] * v_perp[i] ==
            doctest::Approx(rdot.squaredNorm()).epsilon(1e-7));
    }
  }
}

TEST_CASE("parameter validation names the offending field") {
  RobotParams p = table1_params();
  p.m0 = -1;
  CHECK_THROWS_WITH_AS(p.validate(),
                       "RobotParams.m0 must be positive and finite",
                       std::invalid_argument);
  p = table1_params();
  p.cS1 = -5;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = table1_params();
  p.h = 0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  table1_params().validate();
  table2_params().validate();
  table1_params(ParamVariant::FittedAsymmetric).validate();
  table1_params(ParamVariant::FittedSymmetric).validate();
  table2_params(ParamVariant::FittedSymmetric).validate();
  CHECK_THROWS_AS(table2_params(ParamVariant::FittedAsymmetric),
                  std::invalid_argument);
}

TEST_SUITE_END();
