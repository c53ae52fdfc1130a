#include "snake/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace snake {

NelderMeadResult nelder_mead(const std::function<double(const VecXd&)>& f,
                             const VecXd& x0, const VecXd& lower,
                             const VecXd& upper,
                             const NelderMeadOptions& opts) {
  const long n = x0.size();
  if (n < 1) throw std::invalid_argument("nelder_mead needs parameters");
  if (lower.size() != n || upper.size() != n)
    throw std::invalid_argument("nelder_mead bound sizes must match x0");
  for (long i = 0; i < n; ++i) {
    if (!(lower[i] < upper[i]) || !std::isfinite(lower[i]) ||
        !std::isfinite(upper[i]))
      throw std::invalid_argument(
          "nelder_mead bounds must be finite with lower < upper");
    if (x0[i] < lower[i] || x0[i] > upper[i])
      throw std::invalid_argument("nelder_mead initial guess out of bounds");
  }
  if (opts.max_evals < 1)
    throw std::invalid_argument("nelder_mead needs a positive budget");

  auto clip = [&](VecXd x) {
    for (long i = 0; i < n; ++i) x[i] = std::clamp(x[i], lower[i], upper[i]);
    return x;
  };

  NelderMeadResult res;
  int evals = 0;
  bool out_of_budget = false;
  auto eval = [&](const VecXd& x) {
    if (evals >= opts.max_evals) {
      out_of_budget = true;
      return std::numeric_limits<double>::infinity();
    }
    ++evals;
    const double v = f(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };

  std::vector<VecXd> xs;
  std::vector<double> fs;
  xs.push_back(clip(x0));
  fs.push_back(eval(xs[0]));
  res.history.push_back(fs[0]);

  double best = fs[0];
  auto note_best = [&](double v) {
    if (v < best) {
      best = v;
      res.history.push_back(v);
    }
  };

  if (fs[0] == 0.0) {  // nothing to improve
    res.x = xs[0];
    res.f = 0.0;
    res.evaluations = evals;
    return res;
  }

  for (long i = 0; i < n && !out_of_budget; ++i) {
    VecXd xi = xs[0];
    double step = opts.initial_step * (upper[i] - lower[i]);
    if (xi[i] + step > upper[i]) step = -step;
    xi[i] += step;
    xs.push_back(clip(xi));
    fs.push_back(eval(xs.back()));
    note_best(fs.back());
  }

  std::vector<long> order(xs.size());
  auto sort_simplex = [&]() {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](long a, long b) { return fs[a] < fs[b]; });
  };

  while (!out_of_budget) {
    sort_simplex();
    const long ib = order.front(), iw = order.back();
    const long isw = order[order.size() - 2];  // second worst
    const double fb = fs[ib], fw = fs[iw];
    if (fb == 0.0) break;
    if (std::abs(fw - fb) <= opts.f_rel_tol * std::max(std::abs(fb), 1e-12))
      break;

    VecXd centroid = VecXd::Zero(n);
    for (long k : order)
      if (k != iw) centroid += xs[k];
    centroid /= double(xs.size() - 1);

    const VecXd xr = clip(centroid + (centroid - xs[iw]));
    const double fr = eval(xr);
    if (out_of_budget) break;

    if (fr < fs[ib]) {
      const VecXd xe = clip(centroid + 2.0 * (centroid - xs[iw]));
      const double fe = eval(xe);
      if (!out_of_budget && fe < fr) {
        xs[iw] = xe;
        fs[iw] = fe;
      } else {
        xs[iw] = xr;
        fs[iw] = fr;
      }
      note_best(fs[iw]);
      continue;
    }
    if (fr < fs[isw]) {
      xs[iw] = xr;
      fs[iw] = fr;
      note_best(fr);
      continue;
    }
    const bool outside = fr < fw;
    const VecXd xc = outside
                         ? clip(centroid + 0.5 * (xr - centroid))
                         : clip(centroid + 0.5 * (xs[iw] - centroid));
    const double fc = eval(xc);
    if (out_of_budget) break;
    if (fc < std::min(fr, fw)) {
      xs[iw] = xc;
      fs[iw] = fc;
      note_best(fc);
      continue;
    }
    for (std::size_t k = 1; k < order.size(); ++k) {  // shrink toward best
      const long idx = order[k];
      xs[idx] = clip(xs[ib] + 0.5 * (xs[idx] - xs[ib]));
      fs[idx] = eval(xs[idx]);
      note_best(fs[idx]);
      if (out_of_budget) break;
    }
  }

  sort_simplex();
  res.x = xs[order.front()];
  res.f = fs[order.front()];
  res.evaluations = evals;
  res.budget_exhausted = out_of_budget;
  return res;
}

}  // namespace snake
