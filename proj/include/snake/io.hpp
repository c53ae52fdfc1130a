#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "snake/calib.hpp"
#include "snake/engines.hpp"
#include "snake/metrics.hpp"
#include "snake/sweep.hpp"

namespace snake {

using json = nlohmann::json;

/// Fixed 9-significant-digit float formatting; all CSV output goes through
/// this so identical inputs produce byte-identical files.
std::string g9(double v);

/// Writes via a temporary file plus rename, so failed runs leave no partial
/// output behind.
void write_file_atomic(const std::string& path, const std::string& content);

/// Columns: t, the five coordinates, their rates, lambda1..3, tau1, tau2,
/// vpar0..2, vperp0..2 (SI units). NaN exports as an empty field.
void write_trajectory_csv(const std::string& path, const Trajectory& traj);

/// Per-cycle rows keyed by (run, cycle); lengths in mm, angles in degrees.
void write_metrics_csv(const std::string& path, const std::string& run_id,
                       const std::vector<CycleMetrics>& rows);

/// Columns: omega, d_mm, vbar_mm_s, alpha1_deg, alpha_ratio, sigma0..2,
/// cycles, converged. alpha_ratio is alpha1 over the commanded alpha2.
void write_sweep_csv(const std::string& path, const SweepResult& result,
                     const GaitSpec& gait);

/// Columns: omega, d_mm, vbar_mm_s, sigma0, sigma1, sigma2, alpha1_deg
/// (alpha1_deg may be empty for kinematic experiments).
void write_records_csv(const std::string& path,
                       const std::vector<ExperimentRecord>& records);
std::vector<ExperimentRecord> read_records_csv(const std::string& path);

/// Trace CSV columns: t, x, y, theta, phi1, phi2 (SI, radians); the sidecar
/// JSON carries the commanded gait.
void write_trace_csv(const std::string& csv_path, const std::string& meta_path,
                     const MeasuredTrace& trace);
MeasuredTrace read_trace_csv(const std::string& csv_path,
                             const std::string& meta_path);

json gait_to_json(const GaitSpec& g);
GaitSpec gait_from_json(const json& j, const std::string& context = "gait");

json params_to_json(const RobotParams& p);
/// Applies the keys present in j onto p; unknown keys raise errors naming
/// the offending field. Returns true if gamma1_deg was set explicitly.
bool apply_params_json(RobotParams& p, const json& j,
                       const std::string& context = "params");

json fit_report_json(const FitProblem& prob, const FitResult& result);

}  // namespace snake
