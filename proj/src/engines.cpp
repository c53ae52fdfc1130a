#include "snake/engines.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace snake {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

int unprescribed_count(Actuation a) {
  return a == Actuation::Kinematic ? 3 : 4;
}

double effective_eps(double requested, const RobotParams& p) {
  return requested > 0 ? requested : 1e-4 * p.h * p.l;
}

}  // namespace

Vec3d kinematic_body_rates(const Vec5d& q, const Vec2d& qd_s,
                           const RobotParams& p, double singularity_eps) {
  const double det = det_Wb(q, p);
  if (std::abs(det) <= effective_eps(singularity_eps, p))
    throw SingularConfiguration(q, det);
  const Mat35d W = constraint_matrix(q, p);
  const Mat3d Wb = W.leftCols<3>();
  const Vec3d rhs = -(W.rightCols<2>() * qd_s);
  return Wb.partialPivLu().solve(rhs);
}

ConstrainedSolution solve_constrained_dynamics(const Vec5d& q, const Vec5d& qd,
                                               const VecXd& qdd_a,
                                               const RobotParams& p,
                                               const ModelConfig& cfg,
                                               double cond_bound) {
  if (cfg.wheels != Wheels::NoSkid)
    throw std::invalid_argument(
        "solve_constrained_dynamics requires the no-skid wheel model");
  const int np = unprescribed_count(cfg.actuation);
  const int na = 5 - np;
  if (qdd_a.size() != na)
    throw std::invalid_argument(
        "prescribed acceleration size does not match the actuation split");

  const auto terms = dynamics_terms(q, qd, p, cfg);
  const Mat35d W = constraint_matrix(q, p);
  const Mat35d Wd = constraint_matrix_dot(q, qd, p);
  const Vec5d f = terms.B + terms.G - terms.Fd;

  const int m = np + 3;
  MatXd A = MatXd::Zero(m, m);
  A.topLeftCorner(np, np) = terms.M.topLeftCorner(np, np);
  A.topRightCorner(np, 3) = -W.leftCols(np).transpose();
  A.bottomLeftCorner(3, np) = W.leftCols(np);
  VecXd rhs(m);
  rhs.head(np) = -(terms.M.topRightCorner(np, na) * qdd_a + f.head(np));
  rhs.tail(3) = -(W.rightCols(na) * qdd_a + Wd * qd);

  Eigen::FullPivLU<MatXd> lu(A);
  const VecXd piv = lu.matrixLU().diagonal().cwiseAbs();
  const double pmin = piv.minCoeff();
  const double cond = pmin > 0 ? piv.maxCoeff() / pmin
                               : std::numeric_limits<double>::infinity();
  if (!(cond < cond_bound)) throw IllConditioned(cond);

  const VecXd x = lu.solve(rhs);
  ConstrainedSolution sol;
  sol.qdd_p = x.head(np);
  sol.lambda = x.tail(3);
  Vec5d qdd;
  qdd.head(np) = sol.qdd_p;
  qdd.tail(na) = qdd_a;
  sol.tau = (terms.M * qdd + f).tail(na) -
            W.rightCols(na).transpose() * sol.lambda;
  return sol;
}

VecXd skid_dynamics_rhs(const Vec5d& q, const Vec5d& qd, const VecXd& qdd_a,
                        const RobotParams& p, const ModelConfig& cfg) {
  if (cfg.wheels != Wheels::ViscousSkid)
    throw std::invalid_argument(
        "skid_dynamics_rhs requires the viscous-skid wheel model");
  const int np = unprescribed_count(cfg.actuation);
  const int na = 5 - np;
  if (qdd_a.size() != na)
    throw std::invalid_argument(
        "prescribed acceleration size does not match the actuation split");

  const auto terms = dynamics_terms(q, qd, p, cfg);
  const Vec5d f = terms.B + terms.G - terms.Fd;
  const MatXd Mpp = terms.M.topLeftCorner(np, np);
  const VecXd rhs = -(terms.M.topRightCorner(np, na) * qdd_a + f.head(np));
  return Mpp.llt().solve(rhs);
}

struct Simulator::Impl {
  ModelConfig cfg;
  GaitSpec gait;
  RobotParams p;
  SolverOpts opts;
  double eps;
  double max_step;
  double t = 0;
  VecXd z;

  Impl(const ModelConfig& cfg_, const GaitSpec& gait_, const RobotParams& p_,
       const SolverOpts& opts_)
      : cfg(cfg_), gait(gait_), p(p_), opts(opts_) {
    p.validate();
    gait.validate();
    opts.validate();
    if (gait.mode != cfg.actuation)
      throw std::invalid_argument(
          "GaitSpec.mode does not match ModelConfig.actuation");
    eps = effective_eps(opts.singularity_eps, p);
    max_step = opts.max_step > 0 ? opts.max_step : gait.period() / 50.0;
    z = initial_state();
  }

  bool no_skid() const { return cfg.wheels == Wheels::NoSkid; }
  bool semi_passive() const { return cfg.actuation == Actuation::SemiPassive; }
  int state_size() const {
    if (!semi_passive() && no_skid()) return 3;
    if (!semi_passive()) return 6;
    return 8;
  }

  VecXd initial_state() const {
    const GaitSample g = eval_gait(gait, 0.0);
    VecXd z0 = VecXd::Zero(state_size());
    if (!semi_passive()) return z0;  // body pose (and rates) start at zero
    z0[IPHI1] = p.gamma1;
    if (no_skid()) {
      Vec5d q;
      q << 0, 0, 0, p.gamma1, g.phi2.angle;
      const Vec3d qd_b =
          kinematic_body_rates(q, Vec2d(0.0, g.phi2.rate), p, eps);
      z0.segment<3>(4) = qd_b;
      z0[7] = 0;  // passive joint released at rest
    }
    return z0;
  }

  void full_state(double time, const VecXd& zz, Vec5d& q, Vec5d& qd) const {
    const GaitSample g = eval_gait(gait, time);
    if (!semi_passive()) {
      q << zz[0], zz[1], zz[2], g.phi1.angle, g.phi2.angle;
      if (no_skid()) {
        const Vec2d qd_s(g.phi1.rate, g.phi2.rate);
        qd.head<3>() = kinematic_body_rates(q, qd_s, p, eps);
        qd.tail<2>() = qd_s;
      } else {
        qd << zz[3], zz[4], zz[5], g.phi1.rate, g.phi2.rate;
      }
    } else {
      q << zz[0], zz[1], zz[2], zz[3], g.phi2.angle;
      qd << zz[4], zz[5], zz[6], zz[7], g.phi2.rate;
    }
  }

  VecXd prescribed_accel(const GaitSample& g) const {
    if (!semi_passive())
      return (VecXd(2) << g.phi1.accel, g.phi2.accel).finished();
    return (VecXd(1) << g.phi2.accel).finished();
  }

  void rhs(double time, const VecXd& zz, VecXd& dz) const {
    Vec5d q, qd;
    full_state(time, zz, q, qd);
    const VecXd qdd_a = prescribed_accel(eval_gait(gait, time));
    if (!semi_passive() && no_skid()) {
      dz = qd.head<3>();
      return;
    }
    const int np = unprescribed_count(cfg.actuation);
    dz.head(np) = zz.tail(np);
    if (no_skid()) {
      const auto sol =
          solve_constrained_dynamics(q, qd, qdd_a, p, cfg, opts.cond_bound);
      dz.tail(np) = sol.qdd_p;
    } else {
      dz.tail(np) = skid_dynamics_rhs(q, qd, qdd_a, p, cfg);
    }
  }

  // Removes accumulated drift off the constraint surface by least-squares
  // projection of the free velocities. Only meaningful when velocities are
  // state and constraints are enforced: the semi-passive no-skid family.
  bool project(double time, VecXd& zz) const {
    if (!(semi_passive() && no_skid())) return false;
    Vec5d q, qd;
    full_state(time, zz, q, qd);
    const Mat35d W = constraint_matrix(q, p);
    const Vec3d r = W * qd;
    if (r.norm() <= 1e-13 * (1.0 + qd.norm())) return false;
    const Eigen::Matrix<double, 3, 4> Wp = W.leftCols<4>();
    const Mat3d S = Wp * Wp.transpose();
    Eigen::LDLT<Mat3d> ldlt(S);
    if (ldlt.info() != Eigen::Success) return false;
    const Vec4d corr = Wp.transpose() * ldlt.solve(r);
    zz.tail<4>() -= corr;
    return true;
  }

  struct Sampled {
    Vec5d q, qd;
    Vec3d lambda;
    Vec2d tau;
    Vec3d v_par, v_perp;
    double abs_det;
  };

  Sampled sample(double time, const VecXd& zz) const {
    Sampled s;
    full_state(time, zz, s.q, s.qd);
    wheel_velocities(s.q, s.qd, p, s.v_par, s.v_perp);
    s.abs_det = std::abs(det_Wb(s.q, p));
    const VecXd qdd_a = prescribed_accel(eval_gait(gait, time));
    const int np = unprescribed_count(cfg.actuation);
    if (no_skid()) {
      const auto sol =
          solve_constrained_dynamics(s.q, s.qd, qdd_a, p, cfg, opts.cond_bound);
      s.lambda = sol.lambda;
      if (semi_passive())
        s.tau << kNaN, sol.tau[0];
      else
        s.tau << sol.tau[0], sol.tau[1];
    } else {
      s.lambda.setConstant(kNaN);
      const VecXd qdd_p = skid_dynamics_rhs(s.q, s.qd, qdd_a, p, cfg);
      Vec5d qdd;
      qdd.head(np) = qdd_p;
      qdd.tail(5 - np) = qdd_a;
      const auto terms = dynamics_terms(s.q, s.qd, p, cfg);
      const Vec2d tau_full =
          (terms.M * qdd + terms.B + terms.G - terms.Fd).tail<2>();
      if (semi_passive())
        s.tau << kNaN, tau_full[1];
      else
        s.tau = tau_full;
    }
    return s;
  }
};

Simulator::Simulator(const ModelConfig& cfg, const GaitSpec& gait,
                     const RobotParams& p, const SolverOpts& opts)
    : impl_(std::make_unique<Impl>(cfg, gait, p, opts)) {}
Simulator::~Simulator() = default;
Simulator::Simulator(Simulator&&) noexcept = default;
Simulator& Simulator::operator=(Simulator&&) noexcept = default;

double Simulator::time() const { return impl_->t; }

Trajectory Simulator::run(double t_end, int samples_per_cycle) {
  Impl& im = *impl_;
  if (!(t_end > im.t))
    throw std::invalid_argument("Simulator::run needs t_end past current time");
  if (samples_per_cycle < 2)
    throw std::invalid_argument("samples_per_cycle must be at least 2");

  const double dt = im.gait.period() / samples_per_cycle;
  std::vector<double> samples;
  samples.push_back(im.t);
  for (long i = long(std::floor(im.t / dt)) + 1; i * dt < t_end - 1e-9 * dt;
       ++i) {
    if (i * dt > im.t + 1e-9 * dt) samples.push_back(i * dt);
  }
  samples.push_back(t_end);

  const long nrows = long(samples.size());
  Trajectory traj;
  traj.cfg = im.cfg;
  traj.gait = im.gait;
  traj.params = im.p;
  traj.t.resize(nrows);
  traj.q.resize(nrows, 5);
  traj.qd.resize(nrows, 5);
  traj.lambda.resize(nrows, 3);
  traj.tau.resize(nrows, 2);
  traj.v_par.resize(nrows, 3);
  traj.v_perp.resize(nrows, 3);

  long row = 0;
  auto on_sample = [&](double ts, const VecXd& zz) {
    const auto s = im.sample(ts, zz);
    traj.t[row] = ts;
    traj.q.row(row) = s.q.transpose();
    traj.qd.row(row) = s.qd.transpose();
    traj.lambda.row(row) = s.lambda.transpose();
    traj.tau.row(row) = s.tau.transpose();
    traj.v_par.row(row) = s.v_par.transpose();
    traj.v_perp.row(row) = s.v_perp.transpose();
    traj.min_abs_det_Wb = std::min(traj.min_abs_det_Wb, s.abs_det);
    ++row;
  };
  auto post = [&](double ts, VecXd& zz) { return im.project(ts, zz); };
  auto rhs = [&](double ts, const VecXd& zz, VecXd& dz) {
    im.rhs(ts, zz, dz);
  };

  const StepperStats stats =
      integrate_dopri5(rhs, im.z, im.t, t_end, im.opts.rtol, im.opts.atol,
                       im.max_step, samples, on_sample, post);
  im.t = t_end;
  if (row != nrows)
    throw std::logic_error("simulation sampling missed requested times");
  traj.steps = stats.accepted;
  traj.step_rejections = stats.rejected;
  return traj;
}

Trajectory simulate(const ModelConfig& cfg, const GaitSpec& gait,
                    const RobotParams& p, double t_end, const SolverOpts& opts,
                    int samples_per_cycle) {
  return Simulator(cfg, gait, p, opts).run(t_end, samples_per_cycle);
}

Trajectory concat_trajectories(const std::vector<Trajectory>& chunks) {
  if (chunks.empty())
    throw std::invalid_argument("concat_trajectories needs at least one chunk");
  long nrows = chunks.front().rows();
  for (std::size_t c = 1; c < chunks.size(); ++c) {
    if (std::abs(chunks[c].t[0] - chunks[c - 1].t[chunks[c - 1].rows() - 1]) >
        1e-9)
      throw std::invalid_argument(
          "concat_trajectories chunks do not share boundary samples");
    nrows += chunks[c].rows() - 1;
  }
  Trajectory out;
  out.cfg = chunks.front().cfg;
  out.gait = chunks.front().gait;
  out.params = chunks.front().params;
  out.t.resize(nrows);
  out.q.resize(nrows, 5);
  out.qd.resize(nrows, 5);
  out.lambda.resize(nrows, 3);
  out.tau.resize(nrows, 2);
  out.v_par.resize(nrows, 3);
  out.v_perp.resize(nrows, 3);
  out.min_abs_det_Wb = std::numeric_limits<double>::infinity();
  long row = 0;
  for (std::size_t c = 0; c < chunks.size(); ++c) {
    const Trajectory& ch = chunks[c];
    const long start = c == 0 ? 0 : 1;
    for (long i = start; i < ch.rows(); ++i, ++row) {
      out.t[row] = ch.t[i];
      out.q.row(row) = ch.q.row(i);
      out.qd.row(row) = ch.qd.row(i);
      out.lambda.row(row) = ch.lambda.row(i);
      out.tau.row(row) = ch.tau.row(i);
      out.v_par.row(row) = ch.v_par.row(i);
      out.v_perp.row(row) = ch.v_perp.row(i);
    }
    out.steps += ch.steps;
    out.step_rejections += ch.step_rejections;
    out.min_abs_det_Wb = std::min(out.min_abs_det_Wb, ch.min_abs_det_Wb);
  }
  return out;
}

}  // namespace snake
