#pragma once

#include <functional>
#include <span>
#include <vector>

namespace scalekit {

/// Strong-Wolfe line search constants, 0 < c1 < c2 < 1.
struct WolfeParams {
  double c1 = 1e-4;  // sufficient decrease
  double c2 = 0.9;   // curvature
};

struct OptConfig {
  int memory_pairs = 10;    // L-BFGS history size
  double grad_tol = 1e-8;   // stop when ||grad||_2 <= grad_tol
  int max_iters = 1000;
  WolfeParams line_search;
};

struct OptResult {
  std::vector<double> x_min;
  double f_min = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
  bool converged = false;  // implies grad_norm <= grad_tol
};

using ObjectiveFn = std::function<double(std::span<const double>)>;
using GradientFn =
    std::function<void(std::span<const double>, std::span<double>)>;

/// Unconstrained minimization by L-BFGS with a strong-Wolfe line search.
///
/// Deterministic: identical inputs produce bit-identical results. Accepted
/// iterates decrease monotonically, so f_min <= f(x0) always holds. A failed
/// line search is a soft failure: the best point found so far is returned
/// with converged = false. A non-finite objective or gradient at the initial
/// point throws NumericalError.
OptResult minimize(const ObjectiveFn& objective, const GradientFn& gradient,
                   std::vector<double> x0, const OptConfig& config = {});

/// Huber error function: r^2/2 inside [-delta, delta], delta*(|r|-delta/2)
/// outside. C1 at the branch point.
double huber(double residual, double delta);

/// d/dr of huber(); the value at |r| == delta is the shared branch value.
double huber_derivative(double residual, double delta);

/// Central-difference check of an analytic gradient. Returns the maximum
/// over coordinates of |analytic - numeric| / max(1, |analytic|, |numeric|).
double grad_check(const ObjectiveFn& objective, const GradientFn& gradient,
                  std::span<const double> x, double step);

}  // namespace scalekit
