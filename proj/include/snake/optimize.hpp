#pragma once

#include <functional>
#include <vector>

#include "snake/types.hpp"

namespace snake {

struct NelderMeadOptions {
  int max_evals = 200;
  double f_rel_tol = 1e-3;     // relative spread of simplex values
  double initial_step = 0.05;  // fraction of each bound range
};

struct NelderMeadResult {
  VecXd x;
  double f = 0;
  std::vector<double> history;  // best value after each improvement
  int evaluations = 0;
  bool budget_exhausted = false;
};

/// Bounded derivative-free simplex search. Candidates are clipped to
/// [lower, upper] before every evaluation, so bounds hold exactly. The
/// history of accepted best values is non-increasing by construction.
NelderMeadResult nelder_mead(const std::function<double(const VecXd&)>& f,
                             const VecXd& x0, const VecXd& lower,
                             const VecXd& upper,
                             const NelderMeadOptions& opts = {});

}  // namespace snake
