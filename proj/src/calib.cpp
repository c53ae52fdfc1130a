#include "snake/calib.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "snake/model.hpp"

namespace snake {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kFailPenalty = 1e3;
}  // namespace

void MeasuredTrace::validate() const {
  const long n = rows();
  if (n < 2 || q.rows() != n || q.cols() != 5)
    throw std::invalid_argument("MeasuredTrace needs matching t and q rows");
  VecXd dt(n - 1);
  for (long i = 0; i + 1 < n; ++i) {
    dt[i] = t[i + 1] - t[i];
    if (!(dt[i] > 0))
      throw std::invalid_argument(
          "MeasuredTrace times must be strictly increasing (sample " +
          std::to_string(i + 1) + ")");
  }
  std::vector<double> sorted(dt.data(), dt.data() + n - 1);
  std::nth_element(sorted.begin(), sorted.begin() + (n - 1) / 2, sorted.end());
  const double nominal = sorted[(n - 1) / 2];
  for (long i = 0; i + 1 < n; ++i)
    if (dt[i] > 3.0 * nominal)
      throw std::invalid_argument(
          "MeasuredTrace has a gap of " + std::to_string(dt[i]) +
          " s at t = " + std::to_string(t[i]) +
          " (over 3 nominal sample intervals)");
}

MeasuredTrace smooth_trace(const MeasuredTrace& trace, int window) {
  const long n = trace.rows();
  if (window < 1 || window % 2 == 0)
    throw std::invalid_argument("smoothing window must be odd and positive");
  if (window > n) throw WindowTooLarge(window, n);
  MeasuredTrace out = trace;
  const long r = window / 2;
  for (long i = 0; i < n; ++i) {
    const long ri = std::min({r, i, n - 1 - i});
    const long lo = i - ri, cnt = 2 * ri + 1;
    out.q.row(i) = trace.q.middleRows(lo, cnt).colwise().mean();
  }
  return out;
}

Trajectory trace_to_trajectory(const MeasuredTrace& trace,
                               const RobotParams& p) {
  trace.validate();
  p.validate();
  const long n = trace.rows();
  Trajectory traj;
  traj.cfg.actuation = trace.commanded.mode;
  traj.cfg.wheels = Wheels::ViscousSkid;  // measured runs are unconstrained
  traj.gait = trace.commanded;
  traj.params = p;
  traj.t = trace.t;
  traj.q = trace.q;
  traj.qd.resize(n, 5);
  for (long i = 0; i < n; ++i) {
    const long lo = std::max<long>(0, i - 1);
    const long hi = std::min<long>(n - 1, i + 1);
    traj.qd.row(i) =
        (trace.q.row(hi) - trace.q.row(lo)) / (trace.t[hi] - trace.t[lo]);
  }
  traj.lambda.setConstant(n, 3, kNaN);
  traj.tau.setConstant(n, 2, kNaN);
  traj.v_par.resize(n, 3);
  traj.v_perp.resize(n, 3);
  for (long i = 0; i < n; ++i) {
    const Vec5d q = traj.q.row(i).transpose();
    const Vec5d qd = traj.qd.row(i).transpose();
    Vec3d vpar, vperp;
    wheel_velocities(q, qd, p, vpar, vperp);
    traj.v_par.row(i) = vpar.transpose();
    traj.v_perp.row(i) = vperp.transpose();
    traj.min_abs_det_Wb =
        std::min(traj.min_abs_det_Wb, std::abs(det_Wb(q, p)));
  }
  return traj;
}

std::vector<CycleMetrics> trace_metrics(const MeasuredTrace& trace,
                                        const GaitSpec& gait,
                                        const RobotParams& p) {
  return all_cycle_metrics(trace_to_trajectory(trace, p), gait);
}

GaitSpec estimate_gait(const MeasuredTrace& trace) {
  GaitSpec g = trace.commanded;
  const double p1_max = trace.q.col(IPHI1).maxCoeff();
  const double p1_min = trace.q.col(IPHI1).minCoeff();
  const double p2_max = trace.q.col(IPHI2).maxCoeff();
  const double p2_min = trace.q.col(IPHI2).minCoeff();
  g.gamma1 = 0.5 * (p1_max + p1_min);
  g.alpha1 = 0.5 * (p1_max - p1_min);
  g.gamma2 = 0.5 * (p2_max + p2_min);
  g.alpha2 = 0.5 * (p2_max - p2_min);
  return g;
}

const char* to_string(FitParam p) {
  switch (p) {
    case FitParam::cS0: return "cS0";
    case FitParam::cS1: return "cS1";
    case FitParam::cS2: return "cS2";
    case FitParam::cR0: return "cR0";
    case FitParam::cR1: return "cR1";
    case FitParam::cR2: return "cR2";
    case FitParam::k_tau: return "k_tau";
    case FitParam::c_tau: return "c_tau";
  }
  return "?";
}

FitParam fit_param_from_string(const std::string& s) {
  for (FitParam p : {FitParam::cS0, FitParam::cS1, FitParam::cS2,
                     FitParam::cR0, FitParam::cR1, FitParam::cR2,
                     FitParam::k_tau, FitParam::c_tau})
    if (s == to_string(p)) return p;
  throw std::invalid_argument("unknown fit parameter '" + s + "'");
}

namespace {

double& param_ref(RobotParams& p, FitParam f) {
  switch (f) {
    case FitParam::cS0: return p.cS0;
    case FitParam::cS1: return p.cS1;
    case FitParam::cS2: return p.cS2;
    case FitParam::cR0: return p.cR0;
    case FitParam::cR1: return p.cR1;
    case FitParam::cR2: return p.cR2;
    case FitParam::k_tau: return p.k_tau;
    case FitParam::c_tau: return p.c_tau;
  }
  throw std::logic_error("bad FitParam");
}

}  // namespace

void FitProblem::validate() const {
  base.validate();
  gait.validate();
  if (free.empty()) throw std::invalid_argument("FitProblem has no free parameters");
  if (lower.size() != long(free.size()) || upper.size() != long(free.size()))
    throw std::invalid_argument("FitProblem bounds must match the free set");
  for (long i = 0; i < lower.size(); ++i)
    if (!(lower[i] < upper[i]) || !std::isfinite(lower[i]) ||
        !std::isfinite(upper[i]))
      throw std::invalid_argument(
          std::string("FitProblem bounds for ") + to_string(free[i]) +
          " must be finite with lower < upper");
  if (weights.d < 0 || weights.v < 0 || weights.sigma < 0 || weights.alpha < 0)
    throw std::invalid_argument("FitProblem weights must be non-negative");
  if (records.empty())
    throw std::invalid_argument("FitProblem needs experiment records");
  for (const auto& r : records) {
    if (!(r.omega > 0))
      throw std::invalid_argument("ExperimentRecord.omega must be positive");
    if (weights.d > 0 && !(r.d > 0))
      throw std::invalid_argument(
          "ExperimentRecord.d must be positive when weighted");
    if (weights.v > 0 && !(r.v_bar > 0))
      throw std::invalid_argument(
          "ExperimentRecord.v_bar must be positive when weighted");
    if (weights.sigma > 0 && !(r.sigma.minCoeff() > 0))
      throw std::invalid_argument(
          "ExperimentRecord.sigma must be positive when weighted");
    if (weights.alpha > 0 && !(r.alpha1 > 0))
      throw std::invalid_argument(
          "ExperimentRecord.alpha1 must be positive when weighted");
  }
}

RobotParams FitProblem::apply(const VecXd& x) const {
  if (x.size() != long(free.size()))
    throw std::invalid_argument("candidate size does not match the free set");
  RobotParams p = base;
  for (std::size_t i = 0; i < free.size(); ++i) param_ref(p, free[i]) = x[i];
  return p;
}

VecXd FitProblem::initial_guess() const {
  VecXd x(free.size());
  RobotParams p = base;
  for (std::size_t i = 0; i < free.size(); ++i) x[i] = param_ref(p, free[i]);
  return x;
}

std::vector<RecordResidual> objective_breakdown(const FitProblem& prob,
                                                const VecXd& x) {
  prob.validate();
  const RobotParams p = prob.apply(x);
  std::vector<RecordResidual> out(prob.records.size());

  auto eval_record = [&](std::size_t i) {
    const ExperimentRecord& rec = prob.records[i];
    RecordResidual& res = out[i];
    res.omega = rec.omega;
    GaitSpec g = prob.gait;
    g.omega = rec.omega;
    try {
      const SteadyStateResult ss =
          steady_state(prob.cfg, g, p, prob.steady_tol, prob.max_cycles,
                       prob.solver, prob.samples_per_cycle);
      const CycleMetrics& m = ss.metrics;
      res.converged = ss.converged;
      if (prob.weights.d > 0) res.e_d = std::abs((rec.d - m.d) / rec.d);
      if (prob.weights.v > 0)
        res.e_v = std::abs((rec.v_bar - m.v_bar) / rec.v_bar);
      if (prob.weights.sigma > 0)
        for (int k = 0; k < 3; ++k)
          res.e_sigma[k] = std::abs((rec.sigma[k] - m.sigma[k]) / rec.sigma[k]);
      if (prob.weights.alpha > 0)
        res.e_alpha = std::abs((rec.alpha1 - m.alpha1) / rec.alpha1);
      res.J = prob.weights.d * res.e_d + prob.weights.v * res.e_v +
              prob.weights.sigma * res.e_sigma.sum() +
              prob.weights.alpha * res.e_alpha;
    } catch (const std::exception&) {
      res.failed = true;
      res.J = kFailPenalty;
    }
  };

  if (prob.records.size() == 1) {
    eval_record(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(prob.records.size());
    for (std::size_t i = 0; i < prob.records.size(); ++i)
      pool.emplace_back(eval_record, i);
    for (auto& th : pool) th.join();
  }
  return out;
}

double objective(const FitProblem& prob, const VecXd& x) {
  double J = 0;
  for (const auto& r : objective_breakdown(prob, x)) J += r.J;
  return J;
}

FitResult fit(const FitProblem& prob, const VecXd& guess) {
  prob.validate();
  NelderMeadOptions nm;
  nm.max_evals = prob.max_evals;
  nm.f_rel_tol = prob.j_rel_tol;
  const NelderMeadResult r = nelder_mead(
      [&](const VecXd& x) { return objective(prob, x); }, guess, prob.lower,
      prob.upper, nm);
  FitResult out;
  out.params = r.x;
  out.J = r.f;
  out.j_history = r.history;
  out.evaluations = r.evaluations;
  out.budget_exhausted = r.budget_exhausted;
  out.residuals = objective_breakdown(prob, r.x);
  return out;
}

LogDecrementFit log_decrement_fit(const VecXd& t, const VecXd& x) {
  const long n = t.size();
  if (n != x.size() || n < 3)
    throw std::invalid_argument("log_decrement_fit needs matching t and x");

  std::vector<double> peak_t, peak_x;
  for (long i = 1; i + 1 < n; ++i) {
    if (!(x[i] > 0)) continue;
    if (!(x[i] >= x[i - 1] && x[i] > x[i + 1])) continue;
    // parabola through the three samples around the discrete maximum
    const double ym = x[i - 1], y0 = x[i], yp = x[i + 1];
    const double denom = ym - 2.0 * y0 + yp;
    double ts = t[i], xs = y0;
    if (denom < 0) {
      const double s = 0.5 * (ym - yp) / denom;
      const double dt = 0.5 * (t[i + 1] - t[i - 1]);
      ts = t[i] + s * dt;
      xs = y0 - 0.125 * (ym - yp) * (ym - yp) / denom;
    }
    peak_t.push_back(ts);
    peak_x.push_back(xs);
  }
  if (peak_t.size() < 3) throw InsufficientPeaks(int(peak_t.size()));

  double delta_sum = 0, dt_sum = 0;
  for (std::size_t k = 0; k + 1 < peak_t.size(); ++k) {
    delta_sum += std::log(peak_x[k] / peak_x[k + 1]);
    dt_sum += peak_t[k + 1] - peak_t[k];
  }
  const double pairs = double(peak_t.size() - 1);
  LogDecrementFit fit;
  fit.peaks = int(peak_t.size());
  fit.delta = delta_sum / pairs;
  fit.omega_d = 2.0 * kPi / (dt_sum / pairs);
  fit.zeta = fit.delta / std::sqrt(4.0 * kPi * kPi + fit.delta * fit.delta);
  fit.omega_n = fit.omega_d / std::sqrt(1.0 - fit.zeta * fit.zeta);
  return fit;
}

}  // namespace snake
