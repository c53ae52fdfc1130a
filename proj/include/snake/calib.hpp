#pragma once

#include <string>
#include <vector>

#include "snake/metrics.hpp"
#include "snake/optimize.hpp"
#include "snake/sweep.hpp"

namespace snake {

/// Planar state trace from motion capture, nominally sampled at 120 Hz.
struct MeasuredTrace {
  VecXd t;
  MatXd q;  // rows x 5, (x, y, theta, phi1, phi2), angles unwrapped [rad]
  GaitSpec commanded;

  long rows() const { return t.size(); }
  /// Rejects non-increasing times and gaps over 3 nominal intervals.
  void validate() const;
};

/// Centered moving average per coordinate with an odd window; endpoint
/// windows shrink symmetrically so the length is preserved.
MeasuredTrace smooth_trace(const MeasuredTrace& trace, int window);

/// Rates by central finite differences, wheel speeds through the same
/// kinematic frames the simulator uses; undefined columns hold NaN.
Trajectory trace_to_trajectory(const MeasuredTrace& trace,
                               const RobotParams& p);

/// Per-cycle metrics of a measured trace under the simulator's conventions.
std::vector<CycleMetrics> trace_metrics(const MeasuredTrace& trace,
                                        const GaitSpec& gait,
                                        const RobotParams& p);

/// Realized gait parameters (per-joint mean and half peak-to-peak) read off
/// the trace, for replaying measured inputs; omega and phases stay as
/// commanded.
GaitSpec estimate_gait(const MeasuredTrace& trace);

/// Steady-state experiment summary used by the fitting objective.
struct ExperimentRecord {
  double omega = 0;  // [rad/s]
  double d = 0;      // [m]
  double v_bar = 0;  // [m/s]
  Vec3d sigma = Vec3d::Zero();
  double alpha1 = std::numeric_limits<double>::quiet_NaN();  // [rad], optional
};

struct FitWeights {
  double d = 0, v = 0, sigma = 0, alpha = 0;
};

inline FitWeights weights_kinematic_asymmetric() { return {10, 1, 1, 0}; }
inline FitWeights weights_kinematic_symmetric() { return {10, 1, 0.2, 0}; }
inline FitWeights weights_semi_passive_symmetric() { return {10, 1, 1, 50}; }

enum class FitParam { cS0, cS1, cS2, cR0, cR1, cR2, k_tau, c_tau };

const char* to_string(FitParam p);
FitParam fit_param_from_string(const std::string& s);

struct FitProblem {
  std::vector<FitParam> free;
  VecXd lower, upper;  // one entry per free parameter
  FitWeights weights;
  ModelConfig cfg;
  GaitSpec gait;  // omega substituted per record
  RobotParams base;
  std::vector<ExperimentRecord> records;
  double steady_tol = 1e-3;
  int max_cycles = 50;
  SolverOpts solver;
  int samples_per_cycle = 256;
  int max_evals = 200;
  double j_rel_tol = 1e-3;

  void validate() const;
  /// base with the free parameters replaced by x.
  RobotParams apply(const VecXd& x) const;
  /// The free parameters' current values in base.
  VecXd initial_guess() const;
};

struct RecordResidual {
  double omega = 0;
  double e_d = 0, e_v = 0, e_alpha = 0;
  Vec3d e_sigma = Vec3d::Zero();
  double J = 0;
  bool failed = false;
  bool converged = true;
};

/// Weighted sum of normalized steady-state deviations across all records;
/// a failed simulation contributes a flat 1e3 penalty instead of throwing.
double objective(const FitProblem& prob, const VecXd& x);

/// Per-record terms behind objective(), evaluated concurrently.
std::vector<RecordResidual> objective_breakdown(const FitProblem& prob,
                                                const VecXd& x);

struct FitResult {
  VecXd params;
  double J = 0;
  std::vector<double> j_history;
  int evaluations = 0;
  bool budget_exhausted = false;
  std::vector<RecordResidual> residuals;
};

/// Bounded simplex minimization of objective() starting from guess.
FitResult fit(const FitProblem& prob, const VecXd& guess);

struct LogDecrementFit {
  double zeta = 0;     // damping ratio
  double omega_n = 0;  // natural frequency [rad/s]
  double delta = 0;    // mean log decrement
  double omega_d = 0;  // damped oscillation frequency [rad/s]
  int peaks = 0;
};

/// Damping estimate from a free-oscillation trace about zero equilibrium:
/// delta = mean ln(x_k / x_{k+1}) over successive positive peaks,
/// zeta = delta / sqrt(4 pi^2 + delta^2), omega_n = omega_d / sqrt(1-zeta^2).
/// Peak values and times are refined by local parabola fits.
LogDecrementFit log_decrement_fit(const VecXd& t, const VecXd& x);

}  // namespace snake
