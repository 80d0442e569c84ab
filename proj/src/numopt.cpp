#include "scalekit/numopt.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <sstream>

#include "scalekit/errors.hpp"

namespace scalekit {
namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> v) { return std::sqrt(dot(v, v)); }

bool all_finite(std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

std::string point_to_string(std::span<const double> x) {
  std::ostringstream ss;
  ss << "[";
  for (size_t i = 0; i < x.size(); ++i) ss << (i ? ", " : "") << x[i];
  ss << "]";
  return ss.str();
}

void validate_config(const OptConfig& cfg) {
  const auto& w = cfg.line_search;
  if (!(w.c1 > 0.0 && w.c1 < w.c2 && w.c2 < 1.0)) {
    throw ValidationError("line search requires 0 < c1 < c2 < 1");
  }
  if (cfg.memory_pairs < 1) throw ValidationError("memory_pairs must be >= 1");
  if (!(cfg.grad_tol > 0.0)) throw ValidationError("grad_tol must be > 0");
  if (cfg.max_iters < 1) throw ValidationError("max_iters must be >= 1");
}

struct Evaluation {
  double f = 0.0;
  std::vector<double> grad;
  bool finite = false;
};

Evaluation evaluate(const ObjectiveFn& objective, const GradientFn& gradient,
                    std::span<const double> x) {
  Evaluation e;
  e.grad.assign(x.size(), 0.0);
  e.f = objective(x);
  gradient(x, e.grad);
  e.finite = std::isfinite(e.f) && all_finite(e.grad);
  return e;
}

struct LineSearchOut {
  bool ok = false;
  double t = 0.0;
  Evaluation eval;
  std::vector<double> x;
};

// Strong-Wolfe search (bracket + zoom with bisection). Non-finite trial
// values are treated as "step too long" and pulled back into the bracket,
// which keeps the search total and deterministic.
LineSearchOut line_search(const ObjectiveFn& objective,
                          const GradientFn& gradient,
                          std::span<const double> x0,
                          std::span<const double> dir, double phi0,
                          double dphi0, double t_init, const WolfeParams& w) {
  constexpr int kMaxBracket = 60;
  constexpr int kMaxZoom = 64;
  const size_t n = x0.size();

  std::vector<double> xt(n);
  const auto at = [&](double t) -> std::span<const double> {
    for (size_t i = 0; i < n; ++i) xt[i] = x0[i] + t * dir[i];
    return xt;
  };
  const auto accept = [&](double t, Evaluation&& e) {
    LineSearchOut out;
    out.ok = true;
    out.t = t;
    out.eval = std::move(e);
    out.x.assign(xt.begin(), xt.end());
    return out;
  };
  const auto armijo = [&](double t, double f) {
    return f <= phi0 + w.c1 * t * dphi0;
  };

  // zoom phase: lo satisfies Armijo with the lowest f seen, hi bounds it.
  const auto zoom = [&](double lo, double f_lo, double hi) -> LineSearchOut {
    for (int j = 0; j < kMaxZoom; ++j) {
      const double t = 0.5 * (lo + hi);
      Evaluation e = evaluate(objective, gradient, at(t));
      if (!e.finite || !armijo(t, e.f) || e.f >= f_lo) {
        hi = t;
      } else {
        const double dphi = dot(e.grad, dir);
        if (std::abs(dphi) <= -w.c2 * dphi0) return accept(t, std::move(e));
        if (dphi * (hi - lo) >= 0.0) hi = lo;
        lo = t;
        f_lo = e.f;
      }
      if (std::abs(hi - lo) <= 1e-16 * std::max(1.0, std::abs(lo))) break;
    }
    return {};
  };

  double t_prev = 0.0;
  double f_prev = phi0;
  double t = t_init;
  for (int i = 0; i < kMaxBracket; ++i) {
    Evaluation e = evaluate(objective, gradient, at(t));
    if (!e.finite || !armijo(t, e.f) || (i > 0 && e.f >= f_prev)) {
      return zoom(t_prev, f_prev, t);
    }
    const double dphi = dot(e.grad, dir);
    if (std::abs(dphi) <= -w.c2 * dphi0) return accept(t, std::move(e));
    if (dphi >= 0.0) return zoom(t, e.f, t_prev);
    t_prev = t;
    f_prev = e.f;
    t *= 2.0;
    if (t > 1e20) break;
  }
  return {};
}

}  // namespace

OptResult minimize(const ObjectiveFn& objective, const GradientFn& gradient,
                   std::vector<double> x0, const OptConfig& config) {
  validate_config(config);
  if (x0.empty()) throw ValidationError("minimize: empty initial point");

  Evaluation cur = evaluate(objective, gradient, x0);
  if (!cur.finite) {
    throw NumericalError("non-finite objective or gradient at " +
                         point_to_string(x0));
  }

  std::vector<double> x = std::move(x0);
  std::deque<std::pair<std::vector<double>, std::vector<double>>> pairs;  // (s, y)

  const size_t n = x.size();
  std::vector<double> dir(n), alpha_buf;
  int iter = 0;
  for (; iter < config.max_iters; ++iter) {
    const double gnorm = norm2(cur.grad);
    if (gnorm <= config.grad_tol) {
      return {std::move(x), cur.f, gnorm, iter, true};
    }

    // two-loop recursion
    for (size_t i = 0; i < n; ++i) dir[i] = -cur.grad[i];
    alpha_buf.assign(pairs.size(), 0.0);
    for (size_t k = pairs.size(); k-- > 0;) {
      const auto& [s, y] = pairs[k];
      const double rho = 1.0 / dot(s, y);
      alpha_buf[k] = rho * dot(s, dir);
      for (size_t i = 0; i < n; ++i) dir[i] -= alpha_buf[k] * y[i];
    }
    if (!pairs.empty()) {
      const auto& [s, y] = pairs.back();
      const double gamma = dot(s, y) / dot(y, y);
      for (size_t i = 0; i < n; ++i) dir[i] *= gamma;
    }
    for (size_t k = 0; k < pairs.size(); ++k) {
      const auto& [s, y] = pairs[k];
      const double rho = 1.0 / dot(s, y);
      const double beta = rho * dot(y, dir);
      for (size_t i = 0; i < n; ++i) dir[i] += (alpha_buf[k] - beta) * s[i];
    }

    double dphi0 = dot(dir, cur.grad);
    if (!(dphi0 < 0.0)) {
      // stale curvature information; fall back to steepest descent
      pairs.clear();
      for (size_t i = 0; i < n; ++i) dir[i] = -cur.grad[i];
      dphi0 = -dot(cur.grad, cur.grad);
    }

    const double t_init = iter == 0 ? std::min(1.0, 1.0 / gnorm) : 1.0;
    LineSearchOut ls = line_search(objective, gradient, x, dir, cur.f, dphi0,
                                   t_init, config.line_search);
    if (!ls.ok) {
      return {std::move(x), cur.f, gnorm, iter, false};
    }

    std::vector<double> s(n), y(n);
    for (size_t i = 0; i < n; ++i) {
      s[i] = ls.x[i] - x[i];
      y[i] = ls.eval.grad[i] - cur.grad[i];
    }
    // keep the inverse-Hessian estimate positive definite
    if (dot(s, y) > 1e-10 * norm2(s) * norm2(y)) {
      pairs.emplace_back(std::move(s), std::move(y));
      if (pairs.size() > static_cast<size_t>(config.memory_pairs)) {
        pairs.pop_front();
      }
    }
    x = std::move(ls.x);
    cur = std::move(ls.eval);
  }

  const double gnorm = norm2(cur.grad);
  return {std::move(x), cur.f, gnorm, iter, gnorm <= config.grad_tol};
}

double huber(double residual, double delta) {
  if (!(delta > 0.0)) throw ValidationError("huber: delta must be > 0");
  const double a = std::abs(residual);
  if (a <= delta) return 0.5 * residual * residual;
  return delta * (a - 0.5 * delta);
}

double huber_derivative(double residual, double delta) {
  if (!(delta > 0.0)) throw ValidationError("huber: delta must be > 0");
  if (std::abs(residual) <= delta) return residual;
  return std::copysign(delta, residual);
}

double grad_check(const ObjectiveFn& objective, const GradientFn& gradient,
                  std::span<const double> x, double step) {
  if (!(step > 0.0)) throw ValidationError("grad_check: step must be > 0");
  if (x.empty()) throw ValidationError("grad_check: empty point");

  std::vector<double> analytic(x.size(), 0.0);
  gradient(x, analytic);

  std::vector<double> probe(x.begin(), x.end());
  double worst = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + step;
    const double fp = objective(probe);
    probe[i] = x[i] - step;
    const double fm = objective(probe);
    probe[i] = x[i];
    const double numeric = (fp - fm) / (2.0 * step);
    if (!std::isfinite(numeric) || !std::isfinite(analytic[i])) {
      throw NumericalError("grad_check: non-finite evaluation at " +
                           point_to_string(x));
    }
    const double scale =
        std::max({1.0, std::abs(analytic[i]), std::abs(numeric)});
    worst = std::max(worst, std::abs(analytic[i] - numeric) / scale);
  }
  return worst;
}

}  // namespace scalekit
