#pragma once

#include <string>
#include <vector>

#include "snake/metrics.hpp"

namespace snake {

struct SteadyStateResult {
  CycleMetrics metrics;   // last measured cycle
  int cycles = 0;         // periods integrated when the run stopped
  bool converged = false;
  Trajectory window;      // trailing two-period window behind the metrics
};

/// Integrates cycle by cycle until the per-cycle displacement (and, for
/// semi-passive runs, the passive amplitude) settles:
/// |d_k - d_{k-1}| / max(d_k, 1e-6) < tol and |a1_k - a1_{k-1}| < tol*alpha2.
/// A run that hits max_cycles first is returned with converged = false.
/// Kinematic no-skid runs carry no dynamic state and report after one cycle.
SteadyStateResult steady_state(const ModelConfig& cfg, const GaitSpec& gait,
                               const RobotParams& p, double tol = 1e-3,
                               int max_cycles = 50,
                               const SolverOpts& opts = {},
                               int samples_per_cycle = 256);

struct SweepSpec {
  std::vector<double> omegas;  // [rad/s]
  ModelConfig cfg;
  GaitSpec gait;  // omega is substituted per run
  double tol = 1e-3;
  int max_cycles = 50;
  SolverOpts solver;
  int samples_per_cycle = 256;
  unsigned max_threads = 0;  // 0 uses the hardware concurrency
};

struct SweepRow {
  double omega = 0;
  CycleMetrics metrics;
  int cycles = 0;
  bool converged = false;
  bool failed = false;
  std::string error;
};

struct SweepResult {
  std::vector<SweepRow> rows;  // one per requested frequency, same order
};

/// Independent steady-state runs per frequency, executed in parallel and
/// assembled in request order. Per-frequency failures are recorded in the
/// row and do not abort the sweep.
SweepResult frequency_sweep(const SweepSpec& spec, const RobotParams& p);

}  // namespace snake
