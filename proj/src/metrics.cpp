#include "snake/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "snake/model.hpp"

namespace snake {

namespace {

// Linear interpolation of column c of m at time ts.
double interp_col(const VecXd& t, const MatXd& m, int c, double ts) {
  const long n = t.size();
  if (ts <= t[0]) return m(0, c);
  if (ts >= t[n - 1]) return m(n - 1, c);
  long lo = 0, hi = n - 1;
  while (hi - lo > 1) {
    const long mid = (lo + hi) / 2;
    (t[mid] <= ts ? lo : hi) = mid;
  }
  const double w = (ts - t[lo]) / (t[hi] - t[lo]);
  return (1 - w) * m(lo, c) + w * m(hi, c);
}

struct CycleWindow {
  long first = 0;  // first sample with t >= t0
  long last = 0;   // last sample with t <= t1
};

CycleWindow window_samples(const VecXd& t, double t0, double t1) {
  CycleWindow w;
  const long n = t.size();
  w.first = std::lower_bound(t.data(), t.data() + n, t0) - t.data();
  w.last = std::upper_bound(t.data(), t.data() + n, t1) - t.data() - 1;
  if (w.first > w.last)
    throw std::invalid_argument("cycle window contains no samples");
  return w;
}

// Simpson quadrature on a uniform grid, trapezoid fallback elsewhere.
double integrate_samples(const VecXd& t, const VecXd& y, long first,
                         long last) {
  const long n = last - first + 1;
  if (n < 2) return 0;
  bool uniform = true;
  const double dt0 = t[first + 1] - t[first];
  for (long i = first + 1; i < last && uniform; ++i)
    uniform = std::abs((t[i + 1] - t[i]) - dt0) <= 1e-9 * dt0;
  double acc = 0;
  long i = first;
  if (uniform) {
    for (; i + 2 <= last; i += 2)
      acc += dt0 / 3.0 * (y[i] + 4.0 * y[i + 1] + y[i + 2]);
  }
  for (; i + 1 <= last; ++i)
    acc += 0.5 * (t[i + 1] - t[i]) * (y[i] + y[i + 1]);
  return acc;
}

}  // namespace

std::vector<double> cycle_bounds(const Trajectory& traj, const GaitSpec& gait) {
  const long n = traj.rows();
  if (n < 2) throw NoCycleFound();
  const double t_p = gait.period();
  std::vector<double> bounds;
  double last_t = -std::numeric_limits<double>::infinity();
  for (long i = 0; i + 1 < n; ++i) {
    const double s0 = traj.q(i, IPHI2) - gait.gamma2;
    const double s1 = traj.q(i + 1, IPHI2) - gait.gamma2;
    if (!(s0 > 0 && s1 <= 0)) continue;
    const double tc =
        traj.t[i] + s0 / (s0 - s1) * (traj.t[i + 1] - traj.t[i]);
    if (tc - last_t < 0.5 * t_p) continue;  // one downward crossing per period
    bounds.push_back(tc);
    last_t = tc;
  }
  if (bounds.empty()) throw NoCycleFound();
  return bounds;
}

CycleMetrics cycle_metrics(const Trajectory& traj, const GaitSpec& gait,
                           int cycle_index) {
  const auto bounds = cycle_bounds(traj, gait);
  if (cycle_index < 0 || std::size_t(cycle_index) + 1 >= bounds.size())
    throw std::out_of_range("cycle index " + std::to_string(cycle_index) +
                            " has no complete cycle in the trajectory");
  const double t0 = bounds[cycle_index];
  const double t1 = bounds[cycle_index + 1];

  CycleMetrics m;
  m.t0 = t0;
  m.t_p = gait.period();
  const double dx =
      interp_col(traj.t, traj.q, IX, t1) - interp_col(traj.t, traj.q, IX, t0);
  const double dy =
      interp_col(traj.t, traj.q, IY, t1) - interp_col(traj.t, traj.q, IY, t0);
  m.d = std::hypot(dx, dy);
  m.v_bar = m.d / m.t_p;
  m.dtheta = interp_col(traj.t, traj.q, ITH, t1) -
             interp_col(traj.t, traj.q, ITH, t0);

  const auto w = window_samples(traj.t, t0, t1);
  double st = 0, sth = 0, stt = 0, stth = 0;
  const long cnt = w.last - w.first + 1;
  for (long i = w.first; i <= w.last; ++i) {
    st += traj.t[i];
    sth += traj.q(i, ITH);
  }
  const double tbar = st / cnt, thbar = sth / cnt;
  for (long i = w.first; i <= w.last; ++i) {
    stt += (traj.t[i] - tbar) * (traj.t[i] - tbar);
    stth += (traj.t[i] - tbar) * (traj.q(i, ITH) - thbar);
  }
  m.theta_slope = stt > 0 ? stth / stt : 0;

  double lo = traj.q(w.first, IPHI1), hi = lo;
  for (long i = w.first; i <= w.last; ++i) {
    lo = std::min(lo, traj.q(i, IPHI1));
    hi = std::max(hi, traj.q(i, IPHI1));
  }
  m.alpha1 = 0.5 * (hi - lo);

  m.sigma = skid_ratio(traj, gait, cycle_index);
  return m;
}

std::vector<CycleMetrics> all_cycle_metrics(const Trajectory& traj,
                                            const GaitSpec& gait) {
  const auto bounds = cycle_bounds(traj, gait);
  std::vector<CycleMetrics> out;
  for (std::size_t i = 0; i + 1 < bounds.size(); ++i)
    out.push_back(cycle_metrics(traj, gait, int(i)));
  return out;
}

Vec3d skid_ratio(const Trajectory& traj, const GaitSpec& gait,
                 int cycle_index) {
  if (!(traj.params.l > 0))
    throw std::invalid_argument(
        "skid_ratio needs Trajectory.params (wheel arm length l)");
  const auto bounds = cycle_bounds(traj, gait);
  if (cycle_index < 0 || std::size_t(cycle_index) + 1 >= bounds.size())
    throw std::out_of_range("cycle index " + std::to_string(cycle_index) +
                            " has no complete cycle in the trajectory");
  const auto w =
      window_samples(traj.t, bounds[cycle_index], bounds[cycle_index + 1]);
  const long cnt = w.last - w.first + 1;
  if (cnt < 100)
    throw std::invalid_argument(
        "skid_ratio needs at least 100 samples per cycle, got " +
        std::to_string(cnt));
  Vec3d acc = Vec3d::Zero();
  for (long i = w.first; i <= w.last; ++i)
    acc += traj.v_perp.row(i).transpose().cwiseAbs2();
  return (acc / double(cnt)).cwiseSqrt() / (traj.params.l * gait.omega);
}

double energy_audit(const Trajectory& traj, const RobotParams& p,
                    const ModelConfig& cfg) {
  const long n = traj.rows();
  if (n < 2) return 0;
  VecXd p_act(n), p_diss(n);
  VecXd energy(n);
  for (long i = 0; i < n; ++i) {
    const Vec5d q = traj.q.row(i).transpose();
    const Vec5d qd = traj.qd.row(i).transpose();
    energy[i] = kinetic_energy(q, qd, p) + potential_energy(q, p, cfg);
    double w = traj.tau(i, 1) * qd[IPHI2];
    if (cfg.actuation == Actuation::Kinematic)
      w += traj.tau(i, 0) * qd[IPHI1];
    p_act[i] = w;
    p_diss[i] = dissipation_power(q, qd, p, cfg);
  }
  const double work = integrate_samples(traj.t, p_act, 0, n - 1);
  const double dissipated = integrate_samples(traj.t, p_diss, 0, n - 1);
  const double de = energy[n - 1] - energy[0];
  return std::abs(de - work + dissipated) / std::max(1.0, std::abs(work));
}

}  // namespace snake
