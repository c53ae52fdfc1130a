#pragma once

#include <limits>
#include <memory>
#include <vector>

#include "snake/gait.hpp"
#include "snake/integrate.hpp"
#include "snake/model.hpp"
#include "snake/types.hpp"

namespace snake {

/// Sampled simulation (or ingested measurement) output. Quantities that are
/// undefined for the mode (lambda under viscous skid, tau1 when joint 1 is
/// passive) hold NaN and export as empty CSV fields.
struct Trajectory {
  ModelConfig cfg;
  GaitSpec gait;
  RobotParams params;
  VecXd t;
  MatXd q;       // rows x 5, (x, y, theta, phi1, phi2)
  MatXd qd;      // rows x 5
  MatXd lambda;  // rows x 3, constraint forces [N]
  MatXd tau;     // rows x 2, joint torques [N m]
  MatXd v_par;   // rows x 3, wheel roll speeds [m/s]
  MatXd v_perp;  // rows x 3, wheel skid speeds [m/s]
  long steps = 0;
  long step_rejections = 0;
  double min_abs_det_Wb = std::numeric_limits<double>::infinity();

  long rows() const { return t.size(); }
};

/// Body rates from the no-slip constraints for prescribed shape rates:
/// qd_b = -W_b^{-1} W_s qd_s. Throws SingularConfiguration when
/// |det(W_b)| <= singularity_eps.
Vec3d kinematic_body_rates(const Vec5d& q, const Vec2d& qd_s,
                           const RobotParams& p, double singularity_eps = 0);

struct ConstrainedSolution {
  VecXd qdd_p;   // accelerations of the unprescribed coordinates
  Vec3d lambda;  // constraint forces
  VecXd tau;     // torques at the driven joints
};

/// Solves the constrained (no-skid) dynamics for prescribed joint
/// accelerations qdd_a: the block system
///   [[M_pp, -W_p^T], [W_p, 0]] (qdd_p; lambda) =
///   (-(M_pa qdd_a + B_p + G_p - Fd_p); -(W_a qdd_a + Wdot qd))
/// followed by torque recovery on the driven rows. The passive/prescribed
/// split follows cfg.actuation: kinematic drives both joints (qdd_a is 2
/// long, unknowns are the body coordinates), semi-passive drives only phi2.
ConstrainedSolution solve_constrained_dynamics(const Vec5d& q, const Vec5d& qd,
                                               const VecXd& qdd_a,
                                               const RobotParams& p,
                                               const ModelConfig& cfg,
                                               double cond_bound = 1e12);

/// Unconstrained (viscous skid) accelerations of the unprescribed
/// coordinates: M_pp qdd_p = -(M_pa qdd_a + B_p + G_p - Fd_p). M_pp is
/// symmetric positive definite, so this never becomes singular.
VecXd skid_dynamics_rhs(const Vec5d& q, const Vec5d& qd, const VecXd& qdd_a,
                        const RobotParams& p, const ModelConfig& cfg);

/// Resumable single-run integrator. Initial conditions: x = y = theta = 0,
/// shape from the gait at t = 0 (the passive joint starts at its free angle,
/// at rest), body rates from the constraints in no-skid modes and zero in
/// skid modes.
class Simulator {
 public:
  Simulator(const ModelConfig& cfg, const GaitSpec& gait, const RobotParams& p,
            const SolverOpts& opts = {});
  ~Simulator();
  Simulator(Simulator&&) noexcept;
  Simulator& operator=(Simulator&&) noexcept;

  /// Integrates from the current time to t_end, sampling every
  /// period/samples_per_cycle. The returned chunk includes a sample at the
  /// current time, so consecutive chunks share their boundary row.
  Trajectory run(double t_end, int samples_per_cycle = 256);

  double time() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// One-shot convenience wrapper around Simulator.
Trajectory simulate(const ModelConfig& cfg, const GaitSpec& gait,
                    const RobotParams& p, double t_end,
                    const SolverOpts& opts = {}, int samples_per_cycle = 256);

/// Concatenates chunks that share boundary samples (the duplicated first row
/// of each later chunk is dropped). Diagnostics are accumulated.
Trajectory concat_trajectories(const std::vector<Trajectory>& chunks);

}  // namespace snake
