#include "scalekit/alloc.hpp"

#include <cmath>
#include <sstream>

#include "scalekit/errors.hpp"

namespace scalekit {
namespace {

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw ValidationError(std::string(name) + " must be positive and finite");
  }
}

}  // namespace

AllocationConstants allocation_constants(const ChinchillaParams& p) {
  validate_params(p);
  AllocationConstants c;
  c.G = std::pow(p.alpha * p.A / (p.beta * p.B), 1.0 / (p.alpha + p.beta));
  c.a = p.beta / (p.alpha + p.beta);
  c.b = 1.0 - c.a;
  return c;
}

AllocationResult optimal_allocation(const ChinchillaParams& p, double compute) {
  require_positive(compute, "compute");
  const AllocationConstants c = allocation_constants(p);
  const double budget = compute / 6.0;
  AllocationResult r;
  r.compute = compute;
  r.n_opt = c.G * std::pow(budget, c.a);
  r.d_opt = std::pow(budget, c.b) / c.G;
  r.predicted_loss = predict_loss(p, r.n_opt, r.d_opt);
  return r;
}

double optimal_params_for_tokens(const ChinchillaParams& p, double u_d) {
  require_positive(u_d, "u_d");
  const AllocationConstants c = allocation_constants(p);
  return c.G * std::pow(c.G * u_d, c.a / c.b);
}

double compute_for_loss(const ChinchillaParams& p, double target_loss) {
  validate_params(p);
  if (!std::isfinite(target_loss) || target_loss <= p.E) {
    std::ostringstream ss;
    ss << "target loss " << target_loss
       << " is unreachable: the fitted loss floor is E = " << p.E;
    throw ValidationError(ss.str());
  }

  const auto loss_at = [&](double compute) {
    return optimal_allocation(p, compute).predicted_loss;
  };

  // exponential bracket around the crossing, then bisection on log C
  double lo = 1.0, hi = 1.0;
  int guard = 0;
  while (loss_at(lo) <= target_loss) {
    lo /= 1e3;
    if (++guard > 200) throw NumericalError("compute_for_loss: bracket failed");
  }
  guard = 0;
  while (loss_at(hi) > target_loss) {
    hi *= 1e3;
    if (++guard > 200) throw NumericalError("compute_for_loss: bracket failed");
  }

  double log_lo = std::log(lo), log_hi = std::log(hi);
  while (log_hi - log_lo > 1e-6) {
    const double mid = 0.5 * (log_lo + log_hi);
    if (loss_at(std::exp(mid)) > target_loss) {
      log_lo = mid;
    } else {
      log_hi = mid;
    }
  }
  return std::exp(log_hi);  // loss(hi) <= target
}

AllocationCheck verify_allocation(const ChinchillaParams& p, double compute,
                                  double tolerance) {
  require_positive(compute, "compute");
  require_positive(tolerance, "tolerance");

  const double budget = compute / 6.0;
  const auto loss_at_log_n = [&](double u) {
    const double n = std::exp(u);
    return predict_loss(p, n, budget / n);
  };

  // golden-section over log N in [0, log(C/6)]; the objective is strictly
  // convex in log N (a sum of two exponentials), hence unimodal
  constexpr double kInvPhi = 0.6180339887498949;
  double lo = 0.0, hi = std::log(budget);
  double x1 = hi - kInvPhi * (hi - lo);
  double x2 = lo + kInvPhi * (hi - lo);
  double f1 = loss_at_log_n(x1);
  double f2 = loss_at_log_n(x2);
  for (int i = 0; i < 200 && hi - lo > 1e-12; ++i) {
    if (f1 < f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - kInvPhi * (hi - lo);
      f1 = loss_at_log_n(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + kInvPhi * (hi - lo);
      f2 = loss_at_log_n(x2);
    }
  }

  AllocationCheck check;
  check.compute = compute;
  check.n_closed = optimal_allocation(p, compute).n_opt;
  check.n_numeric = std::exp(0.5 * (lo + hi));
  check.rel_err = std::abs(check.n_numeric - check.n_closed) / check.n_closed;
  if (check.rel_err > tolerance) {
    std::ostringstream ss;
    ss << "allocation cross-check failed at C = " << compute << ": closed form "
       << check.n_closed << " vs numeric " << check.n_numeric
       << " (relative error " << check.rel_err << " > tolerance " << tolerance
       << ")";
    throw NumericalError(ss.str());
  }
  return check;
}

}  // namespace scalekit
