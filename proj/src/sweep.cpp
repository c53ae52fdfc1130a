#include "snake/sweep.hpp"

#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace snake {

SteadyStateResult steady_state(const ModelConfig& cfg, const GaitSpec& gait,
                               const RobotParams& p, double tol,
                               int max_cycles, const SolverOpts& opts,
                               int samples_per_cycle) {
  if (!(tol >= 0)) throw std::invalid_argument("steady_state tol must be >= 0");
  if (max_cycles < 2)
    throw std::invalid_argument("steady_state needs max_cycles >= 2");
  const double t_p = gait.period();
  Simulator sim(cfg, gait, p, opts);

  if (cfg.actuation == Actuation::Kinematic && cfg.wheels == Wheels::NoSkid) {
    // The state is the pose alone; every cycle repeats the first one.
    SteadyStateResult r;
    r.window = sim.run(2 * t_p, samples_per_cycle);
    r.metrics = cycle_metrics(r.window, gait, 0);
    r.cycles = 1;
    r.converged = true;
    return r;
  }

  SteadyStateResult r;
  Trajectory prev = sim.run(t_p, samples_per_cycle);
  CycleMetrics last{};
  bool have_last = false;
  for (int k = 2; k <= max_cycles; ++k) {
    Trajectory cur = sim.run(k * t_p, samples_per_cycle);
    r.window = concat_trajectories({prev, cur});
    prev = std::move(cur);
    const auto bounds = cycle_bounds(r.window, gait);
    if (bounds.size() < 2) continue;
    const CycleMetrics m =
        cycle_metrics(r.window, gait, int(bounds.size()) - 2);
    r.metrics = m;
    r.cycles = k;
    if (have_last) {
      const bool ok_d =
          std::abs(m.d - last.d) / std::max(m.d, 1e-6) < tol;
      const bool ok_a =
          cfg.actuation != Actuation::SemiPassive ||
          std::abs(m.alpha1 - last.alpha1) < tol * gait.alpha2;
      if (ok_d && ok_a) {
        r.converged = true;
        return r;
      }
    }
    last = m;
    have_last = true;
  }
  r.cycles = max_cycles;
  r.converged = false;
  return r;
}

SweepResult frequency_sweep(const SweepSpec& spec, const RobotParams& p) {
  if (spec.omegas.empty())
    throw std::invalid_argument("frequency_sweep needs a non-empty list");
  for (double w : spec.omegas)
    if (!(w > 0) || !std::isfinite(w))
      throw std::invalid_argument("sweep frequencies must be positive");

  SweepResult result;
  result.rows.resize(spec.omegas.size());

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= spec.omegas.size()) return;
      SweepRow row;
      row.omega = spec.omegas[i];
      GaitSpec g = spec.gait;
      g.omega = row.omega;
      try {
        const SteadyStateResult ss =
            steady_state(spec.cfg, g, p, spec.tol, spec.max_cycles,
                         spec.solver, spec.samples_per_cycle);
        row.metrics = ss.metrics;
        row.cycles = ss.cycles;
        row.converged = ss.converged;
      } catch (const std::exception& e) {
        row.failed = true;
        row.error = e.what();
      }
      result.rows[i] = std::move(row);
    }
  };

  unsigned n_threads = spec.max_threads > 0
                           ? spec.max_threads
                           : std::max(1u, std::thread::hardware_concurrency());
  n_threads = std::min<unsigned>(n_threads, unsigned(spec.omegas.size()));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (unsigned i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return result;
}

}  // namespace snake
