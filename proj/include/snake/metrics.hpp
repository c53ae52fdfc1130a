#pragma once

#include <vector>

#include "snake/engines.hpp"

namespace snake {

/// Per-cycle locomotion summary. A cycle runs between successive downward
/// crossings of phi2 through its gait center gamma2.
struct CycleMetrics {
  double t0 = 0;           // cycle start [s]
  double t_p = 0;          // actuation period 2*pi/omega [s]
  double d = 0;            // middle-link displacement over the cycle [m]
  double v_bar = 0;        // d / t_p [m/s]
  double dtheta = 0;       // net heading change over the cycle [rad]
  double theta_slope = 0;  // least-squares slope of theta(t) [rad/s]
  Vec3d sigma = Vec3d::Zero();  // skid ratios, RMS(v_perp_i) / (l omega)
  double alpha1 = 0;       // half peak-to-peak of phi1 over the cycle [rad]
};

/// Successive cycle start times: downward crossings of phi2 through gamma2,
/// located by linear interpolation between samples. Throws NoCycleFound when
/// the trace never crosses.
std::vector<double> cycle_bounds(const Trajectory& traj, const GaitSpec& gait);

/// Metrics of the cycle between cycle_bounds()[i] and [i+1].
CycleMetrics cycle_metrics(const Trajectory& traj, const GaitSpec& gait,
                           int cycle_index);

/// Metrics for every complete cycle in the trajectory.
std::vector<CycleMetrics> all_cycle_metrics(const Trajectory& traj,
                                            const GaitSpec& gait);

/// Skid ratios over the in-cycle samples. Requires at least 100 samples in
/// the cycle for a trustworthy RMS.
Vec3d skid_ratio(const Trajectory& traj, const GaitSpec& gait,
                 int cycle_index);

/// Work-energy balance over the whole trajectory window:
/// |delta(T+U) - integral(tau . phidot_actuated) + integral(2D)| divided by
/// max(1, actuator work). Small residuals certify a consistent simulation.
double energy_audit(const Trajectory& traj, const RobotParams& p,
                    const ModelConfig& cfg);

}  // namespace snake
