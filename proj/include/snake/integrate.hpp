#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "snake/types.hpp"

namespace snake {

struct SolverOpts {
  double rtol = 1e-6;
  double atol = 1e-8;
  double max_step = 0;         // [s]; 0 lets the engine pick period/50
  double singularity_eps = 0;  // [m^2]; 0 lets the engine pick 1e-4*h*l
  double cond_bound = 1e12;    // conditioning guard for constrained solves

  void validate() const {
    if (!(rtol > 0) || !(atol > 0))
      throw std::invalid_argument("SolverOpts tolerances must be positive");
    if (!(max_step >= 0) || !(singularity_eps >= 0) || !(cond_bound > 0))
      throw std::invalid_argument("SolverOpts fields must be non-negative");
  }
};

struct StepperStats {
  long accepted = 0;
  long rejected = 0;
};

/// Embedded Dormand-Prince 5(4) integrator with FSAL stage reuse.
/// Steps land exactly on each requested sample time; on_sample(t, y) fires
/// there, and post_step(t, y) runs after every accepted step and may mutate
/// y (returning true if it did, so the cached end stage is refreshed).
template <class RHS, class OnSample, class PostStep>
StepperStats integrate_dopri5(RHS&& rhs, VecXd& y, double t0, double t1,
                              double rtol, double atol, double max_step,
                              const std::vector<double>& samples,
                              OnSample&& on_sample, PostStep&& post_step) {
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                          a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                          a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5,
                          c5 = 8.0 / 9;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                          b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static constexpr double e1 = 35.0 / 384 - 5179.0 / 57600,
                          e3 = 500.0 / 1113 - 7571.0 / 16695,
                          e4 = 125.0 / 192 - 393.0 / 640,
                          e5 = -2187.0 / 6784 + 92097.0 / 339200,
                          e6 = 11.0 / 84 - 187.0 / 2100, e7 = -1.0 / 40;

  const long n = y.size();
  VecXd k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ytmp(n), y5(n);

  StepperStats stats;
  double t = t0;
  std::size_t si = 0;
  auto near = [](double a, double b) {
    return std::abs(a - b) <= 1e-12 * std::max({1.0, std::abs(a), std::abs(b)});
  };
  while (si < samples.size() && (samples[si] < t || near(samples[si], t))) {
    on_sample(samples[si], y);
    ++si;
  }
  if (t1 <= t0) return stats;

  const double hmax = max_step > 0 ? std::min(max_step, t1 - t0) : t1 - t0;
  double h = hmax;
  if (si < samples.size()) h = std::min(h, samples[si] - t);

  rhs(t, y, k1);
  bool just_rejected = false;

  while (t < t1 && !near(t, t1)) {
    h = std::min({h, hmax, t1 - t});
    bool lands = false;
    if (si < samples.size() && samples[si] - t <= h * (1 + 1e-12)) {
      h = samples[si] - t;
      lands = true;
    }
    if (h < 1e-13 * std::max(1.0, std::abs(t))) throw StepSizeCollapse(t);

    ytmp = y + h * (a21 * k1);
    rhs(t + c2 * h, ytmp, k2);
    ytmp = y + h * (a31 * k1 + a32 * k2);
    rhs(t + c3 * h, ytmp, k3);
    ytmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
    rhs(t + c4 * h, ytmp, k4);
    ytmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
    rhs(t + c5 * h, ytmp, k5);
    ytmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
    rhs(t + h, ytmp, k6);
    y5 = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    rhs(t + h, y5, k7);

    double err2 = 0;
    for (long i = 0; i < n; ++i) {
      const double e =
          h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] +
               e6 * k6[i] + e7 * k7[i]);
      const double scale =
          atol + rtol * std::max(std::abs(y[i]), std::abs(y5[i]));
      err2 += (e / scale) * (e / scale);
    }
    const double errnorm = std::sqrt(err2 / double(n));

    if (std::isfinite(errnorm) && errnorm <= 1.0) {
      t = lands ? samples[si] : t + h;
      y.swap(y5);
      k1.swap(k7);
      ++stats.accepted;
      if (post_step(t, y)) rhs(t, y, k1);
      while (si < samples.size() && (samples[si] < t || near(samples[si], t))) {
        on_sample(samples[si], y);
        ++si;
      }
      double factor = 0.9 * std::pow(std::max(errnorm, 1e-10), -0.2);
      factor = std::clamp(factor, 0.2, 5.0);
      if (just_rejected) factor = std::min(factor, 1.0);
      h *= factor;
      just_rejected = false;
    } else {
      ++stats.rejected;
      const double factor =
          std::isfinite(errnorm)
              ? std::clamp(0.9 * std::pow(errnorm, -0.2), 0.2, 0.9)
              : 0.2;
      h *= factor;
      just_rejected = true;
    }
  }
  while (si < samples.size() && (samples[si] < t || near(samples[si], t))) {
    on_sample(samples[si], y);
    ++si;
  }
  return stats;
}

}  // namespace snake
