#include "scalekit/lawfit.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <thread>

#include "scalekit/alloc.hpp"
#include "scalekit/errors.hpp"

namespace scalekit {
namespace {

struct Lse3 {
  double value;
  double w1, w2, w3;  // softmax weights of the three terms
};

Lse3 log_sum_exp3(double t1, double t2, double t3) {
  const double m = std::max({t1, t2, t3});
  const double e1 = std::exp(t1 - m);
  const double e2 = std::exp(t2 - m);
  const double e3 = std::exp(t3 - m);
  const double s = e1 + e2 + e3;
  return {m + std::log(s), e1 / s, e2 / s, e3 / s};
}

// theta layout for the stage-1 objective
constexpr int kLogE = 0;
constexpr int kLogA = 1;
constexpr int kLogB = 2;
constexpr int kAlpha = 3;
constexpr int kBeta = 4;

struct StartResult {
  bool valid = false;
  double f = 0.0;
  std::vector<double> theta;
};

// Runs `one_start` for every index in [0, n_starts), optionally on several
// threads. Each index computes independently into its own slot, so the
// outcome does not depend on scheduling.
std::vector<StartResult> run_starts(
    int n_starts, int threads,
    const std::function<StartResult(int)>& one_start) {
  std::vector<StartResult> results(n_starts);
  if (threads <= 1) {
    for (int i = 0; i < n_starts; ++i) results[i] = one_start(i);
    return results;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      for (int i = t; i < n_starts; i += threads) results[i] = one_start(i);
    });
  }
  for (auto& th : pool) th.join();
  return results;
}

// Deterministic merge: lowest objective wins, ties break to the lowest
// grid index. Returns -1 when no start produced a usable result.
int select_best(const std::vector<StartResult>& results) {
  int best = -1;
  for (int i = 0; i < static_cast<int>(results.size()); ++i) {
    if (!results[i].valid) continue;
    if (best < 0 || results[i].f < results[best].f) best = i;
  }
  return best;
}

void validate_fit_config(const FitConfig& cfg) {
  if (!(cfg.huber_delta > 0.0)) throw ValidationError("huber_delta must be > 0");
  const GridSpec& g = cfg.grid;
  if (g.alpha.empty() || g.beta.empty() || g.log_a.empty() ||
      g.log_b.empty() || g.log_e.empty()) {
    throw ValidationError("initialization grid must be non-empty on every axis");
  }
  if (cfg.rho_grid.empty()) throw ValidationError("rho grid must be non-empty");
  if (cfg.threads < 1) throw ValidationError("threads must be >= 1");
  if (!(cfg.single_epoch_max_repetitions >= 0.0)) {
    throw ValidationError("single_epoch_max_repetitions must be >= 0");
  }
}

}  // namespace

void validate_params(const ChinchillaParams& p) {
  const bool finite = std::isfinite(p.E) && std::isfinite(p.A) &&
                      std::isfinite(p.B) && std::isfinite(p.alpha) &&
                      std::isfinite(p.beta);
  if (!finite || p.E <= 0.0 || p.A <= 0.0 || p.B <= 0.0) {
    throw ValidationError("invalid loss-surface constants: E, A, B must be "
                          "positive and finite");
  }
  if (!(p.alpha > 0.0 && p.alpha < 2.0 && p.beta > 0.0 && p.beta < 2.0)) {
    throw ValidationError("invalid loss-surface exponents: alpha, beta must "
                          "lie in (0, 2)");
  }
}

void validate_params(const MultiEpochParams& p) {
  validate_params(p.base);
  if (!std::isfinite(p.r_star_n) || !std::isfinite(p.r_star_d) ||
      p.r_star_n <= 0.0 || p.r_star_d <= 0.0) {
    throw ValidationError("decay constants R*_N, R*_D must be positive");
  }
}

double predict_loss(const ChinchillaParams& p, double n, double d) {
  validate_params(p);
  if (!(n > 0.0) || !(d > 0.0)) {
    throw ValidationError("predict_loss requires n > 0 and d > 0");
  }
  return p.E + p.A * std::pow(n, -p.alpha) + p.B * std::pow(d, -p.beta);
}

EffectiveBudget effective_budget(const MultiEpochParams& p, double n, double d,
                                 double u_d, double u_n) {
  validate_params(p);
  if (!(n > 0.0) || !(d > 0.0) || !(u_d > 0.0) || !(u_n > 0.0)) {
    throw ValidationError("effective_budget requires positive n, d, u_d, u_n");
  }
  if (u_d > d) throw ValidationError("effective_budget: u_d exceeds d");

  const double r_d = d / u_d - 1.0;
  const double d_eff =
      u_d + u_d * p.r_star_d * (1.0 - std::exp(-r_d / p.r_star_d));

  const double r_n = n / u_n - 1.0;
  // no inflation for undersized models: the decay covers excess capacity only
  const double n_eff =
      r_n <= 0.0 ? n
                 : u_n + u_n * p.r_star_n * (1.0 - std::exp(-r_n / p.r_star_n));
  return {n_eff, d_eff};
}

double predict_loss_multi(const MultiEpochParams& p, double n, double d,
                          double u_d, double u_n) {
  const EffectiveBudget eb = effective_budget(p, n, d, u_d, u_n);
  return predict_loss(p.base, eb.n_eff, eb.d_eff);
}

std::vector<LogPoint> single_epoch_points(const RunSet& runs,
                                          double max_repetitions) {
  validate_runs(runs);
  std::vector<LogPoint> pts;
  for (const auto& r : runs.records) {
    if (r.d_tokens / r.u_tokens - 1.0 > max_repetitions) continue;
    pts.push_back({std::log(r.n_params), std::log(r.d_tokens),
                   std::log(r.test_loss)});
  }
  return pts;
}

double huber_lse_objective(std::span<const double> theta,
                           std::span<const LogPoint> points, double delta) {
  double sum = 0.0;
  for (const auto& p : points) {
    const Lse3 lse =
        log_sum_exp3(theta[kLogE], theta[kLogA] - theta[kAlpha] * p.log_n,
                     theta[kLogB] - theta[kBeta] * p.log_d);
    sum += huber(lse.value - p.log_loss, delta);
  }
  return sum;
}

void huber_lse_gradient(std::span<const double> theta,
                        std::span<const LogPoint> points, double delta,
                        std::span<double> grad) {
  std::fill(grad.begin(), grad.end(), 0.0);
  for (const auto& p : points) {
    const Lse3 lse =
        log_sum_exp3(theta[kLogE], theta[kLogA] - theta[kAlpha] * p.log_n,
                     theta[kLogB] - theta[kBeta] * p.log_d);
    const double psi = huber_derivative(lse.value - p.log_loss, delta);
    grad[kLogE] += psi * lse.w1;
    grad[kLogA] += psi * lse.w2;
    grad[kAlpha] -= psi * lse.w2 * p.log_n;
    grad[kLogB] += psi * lse.w3;
    grad[kBeta] -= psi * lse.w3 * p.log_d;
  }
}

std::vector<MultiEpochPoint> multi_epoch_points(const RunSet& runs,
                                                const ChinchillaParams& base,
                                                double min_repetitions) {
  validate_runs(runs);
  validate_params(base);
  std::vector<MultiEpochPoint> pts;
  for (const auto& r : runs.records) {
    const double r_d = r.d_tokens / r.u_tokens - 1.0;
    if (r_d <= min_repetitions) continue;
    const double u_n = optimal_params_for_tokens(base, r.u_tokens);
    pts.push_back({r.n_params, u_n, r.n_params / u_n - 1.0, r.u_tokens, r_d,
                   std::log(r.test_loss)});
  }
  return pts;
}

double multi_epoch_objective(std::span<const double> rho,
                             const ChinchillaParams& base,
                             std::span<const MultiEpochPoint> points,
                             double delta) {
  const double rs_n = std::exp(rho[0]);
  const double rs_d = std::exp(rho[1]);
  const double log_e = std::log(base.E);
  const double log_a = std::log(base.A);
  const double log_b = std::log(base.B);
  double sum = 0.0;
  for (const auto& p : points) {
    const double d_eff = p.u_d * (1.0 + rs_d * (1.0 - std::exp(-p.r_d / rs_d)));
    const double n_eff =
        p.r_n <= 0.0
            ? p.n
            : p.u_n * (1.0 + rs_n * (1.0 - std::exp(-p.r_n / rs_n)));
    const Lse3 lse = log_sum_exp3(log_e, log_a - base.alpha * std::log(n_eff),
                                  log_b - base.beta * std::log(d_eff));
    sum += huber(lse.value - p.log_loss, delta);
  }
  return sum;
}

void multi_epoch_gradient(std::span<const double> rho,
                          const ChinchillaParams& base,
                          std::span<const MultiEpochPoint> points, double delta,
                          std::span<double> grad) {
  const double rs_n = std::exp(rho[0]);
  const double rs_d = std::exp(rho[1]);
  const double log_e = std::log(base.E);
  const double log_a = std::log(base.A);
  const double log_b = std::log(base.B);
  grad[0] = grad[1] = 0.0;
  for (const auto& p : points) {
    const double x_d = p.r_d / rs_d;
    const double d_eff = p.u_d * (1.0 + rs_d * (1.0 - std::exp(-x_d)));
    // d(D')/d(R*_D), always >= 0
    const double dd_drs = p.u_d * (1.0 - std::exp(-x_d) * (1.0 + x_d));

    double n_eff = p.n;
    double dn_drs = 0.0;
    if (p.r_n > 0.0) {
      const double x_n = p.r_n / rs_n;
      n_eff = p.u_n * (1.0 + rs_n * (1.0 - std::exp(-x_n)));
      dn_drs = p.u_n * (1.0 - std::exp(-x_n) * (1.0 + x_n));
    }

    const Lse3 lse = log_sum_exp3(log_e, log_a - base.alpha * std::log(n_eff),
                                  log_b - base.beta * std::log(d_eff));
    const double psi = huber_derivative(lse.value - p.log_loss, delta);
    // chain: rho -> R* -> effective budget -> log prediction
    grad[0] += psi * lse.w2 * (-base.alpha / n_eff) * dn_drs * rs_n;
    grad[1] += psi * lse.w3 * (-base.beta / d_eff) * dd_drs * rs_d;
  }
}

FitReport fit_single_epoch(const RunSet& runs, const FitConfig& config) {
  validate_fit_config(config);
  const std::vector<LogPoint> pts =
      single_epoch_points(runs, config.single_epoch_max_repetitions);
  if (pts.size() < 6) {
    throw ValidationError("fit_single_epoch requires at least 6 single-epoch "
                          "runs (5 unknowns); got " +
                          std::to_string(pts.size()));
  }
  std::set<double> distinct_n, distinct_d;
  for (const auto& p : pts) {
    distinct_n.insert(p.log_n);
    distinct_d.insert(p.log_d);
  }
  if (distinct_n.size() < 2) {
    throw ValidationError("degenerate span: all runs share one n_params value");
  }
  if (distinct_d.size() < 2) {
    throw ValidationError("degenerate span: all runs share one d_tokens value");
  }

  const GridSpec& g = config.grid;
  const int n_starts = static_cast<int>(g.alpha.size() * g.beta.size() *
                                        g.log_a.size() * g.log_b.size() *
                                        g.log_e.size());
  const auto start_theta = [&](int idx) {
    const int ne = static_cast<int>(g.log_e.size());
    const int nb = static_cast<int>(g.log_b.size());
    const int na = static_cast<int>(g.log_a.size());
    const int nbeta = static_cast<int>(g.beta.size());
    const int i_e = idx % ne;
    const int i_b = (idx / ne) % nb;
    const int i_a = (idx / (ne * nb)) % na;
    const int i_beta = (idx / (ne * nb * na)) % nbeta;
    const int i_alpha = idx / (ne * nb * na * nbeta);
    return std::vector<double>{g.log_e[i_e], g.log_a[i_a], g.log_b[i_b],
                               g.alpha[i_alpha], g.beta[i_beta]};
  };

  const double delta = config.huber_delta;
  const ObjectiveFn objective = [&pts, delta](std::span<const double> th) {
    return huber_lse_objective(th, pts, delta);
  };
  const GradientFn gradient = [&pts, delta](std::span<const double> th,
                                            std::span<double> gr) {
    huber_lse_gradient(th, pts, delta, gr);
  };

  const auto one_start = [&](int idx) {
    StartResult res;
    const OptResult opt =
        minimize(objective, gradient, start_theta(idx), config.opt);
    res.f = opt.f_min;
    res.theta = opt.x_min;
    const double alpha = res.theta[kAlpha];
    const double beta = res.theta[kBeta];
    res.valid = std::isfinite(res.f) &&
                std::isfinite(std::exp(res.theta[kLogE])) &&
                std::isfinite(std::exp(res.theta[kLogA])) &&
                std::isfinite(std::exp(res.theta[kLogB])) && alpha > 0.0 &&
                alpha < 2.0 && beta > 0.0 && beta < 2.0;
    return res;
  };

  const auto results = run_starts(n_starts, config.threads, one_start);
  const int best = select_best(results);
  if (best < 0) {
    throw NumericalError("fit_single_epoch: all " + std::to_string(n_starts) +
                         " grid starts failed");
  }

  const auto& theta = results[best].theta;
  const ChinchillaParams params{std::exp(theta[kLogE]), std::exp(theta[kLogA]),
                                std::exp(theta[kLogB]), theta[kAlpha],
                                theta[kBeta]};
  // report the objective re-evaluated from the returned constants, so the
  // published number is self-consistent with the published parameters
  const std::vector<double> final_theta = {std::log(params.E),
                                           std::log(params.A),
                                           std::log(params.B), params.alpha,
                                           params.beta};
  FitReport report;
  report.params = params;
  report.objective = huber_lse_objective(final_theta, pts, delta);
  report.n_runs_used = static_cast<int>(pts.size());
  report.winning_init = best;
  report.per_run_residuals.reserve(pts.size());
  for (const auto& p : pts) {
    const Lse3 lse = log_sum_exp3(
        final_theta[kLogE], final_theta[kLogA] - final_theta[kAlpha] * p.log_n,
        final_theta[kLogB] - final_theta[kBeta] * p.log_d);
    report.per_run_residuals.push_back(lse.value - p.log_loss);
  }
  return report;
}

FitReport fit_multi_epoch(const RunSet& runs, const ChinchillaParams& base,
                          const FitConfig& config) {
  validate_fit_config(config);
  validate_params(base);
  const std::vector<MultiEpochPoint> pts =
      multi_epoch_points(runs, base, config.single_epoch_max_repetitions);
  if (pts.empty()) throw ValidationError("fit_multi_epoch: no multi-epoch runs");
  if (pts.size() < 2) {
    throw ValidationError("fit_multi_epoch requires at least 2 multi-epoch "
                          "runs (2 unknowns); got 1");
  }

  const auto& rho = config.rho_grid;
  const int n_starts = static_cast<int>(rho.size() * rho.size());
  const double delta = config.huber_delta;
  const ObjectiveFn objective = [&](std::span<const double> r) {
    return multi_epoch_objective(r, base, pts, delta);
  };
  const GradientFn gradient = [&](std::span<const double> r,
                                  std::span<double> gr) {
    multi_epoch_gradient(r, base, pts, delta, gr);
  };

  const auto one_start = [&](int idx) {
    const int nd = static_cast<int>(rho.size());
    const std::vector<double> rho0 = {rho[idx / nd], rho[idx % nd]};
    StartResult res;
    const OptResult opt = minimize(objective, gradient, rho0, config.opt);
    res.f = opt.f_min;
    res.theta = opt.x_min;
    res.valid = std::isfinite(res.f) && std::isfinite(std::exp(res.theta[0])) &&
                std::isfinite(std::exp(res.theta[1]));
    return res;
  };

  const auto results = run_starts(n_starts, config.threads, one_start);
  const int best = select_best(results);
  if (best < 0) {
    throw NumericalError("fit_multi_epoch: all " + std::to_string(n_starts) +
                         " grid starts failed");
  }

  const MultiEpochParams params{base, std::exp(results[best].theta[0]),
                                std::exp(results[best].theta[1])};
  const std::vector<double> final_rho = {std::log(params.r_star_n),
                                         std::log(params.r_star_d)};
  FitReport report;
  report.params = params;
  report.objective = multi_epoch_objective(final_rho, base, pts, delta);
  report.n_runs_used = static_cast<int>(pts.size());
  report.winning_init = best;
  report.per_run_residuals.reserve(pts.size());
  for (const auto& p : pts) {
    const double d_eff =
        p.u_d *
        (1.0 + params.r_star_d * (1.0 - std::exp(-p.r_d / params.r_star_d)));
    const double n_eff =
        p.r_n <= 0.0
            ? p.n
            : p.u_n * (1.0 + params.r_star_n *
                                 (1.0 - std::exp(-p.r_n / params.r_star_n)));
    const Lse3 lse = log_sum_exp3(
        std::log(base.E), std::log(base.A) - base.alpha * std::log(n_eff),
        std::log(base.B) - base.beta * std::log(d_eff));
    report.per_run_residuals.push_back(lse.value - p.log_loss);
  }
  return report;
}

}  // namespace scalekit
