#pragma once

#include <span>
#include <string>
#include <variant>
#include <vector>

#include "scalekit/numopt.hpp"
#include "scalekit/runstore.hpp"

namespace scalekit {

/// Constants of the parametric loss surface L(N, D) = E + A/N^alpha + B/D^beta.
struct ChinchillaParams {
  double E = 0.0;      // irreducible loss, nats
  double A = 0.0;
  double B = 0.0;
  double alpha = 0.0;  // exponent in N
  double beta = 0.0;   // exponent in D

  friend bool operator==(const ChinchillaParams&,
                         const ChinchillaParams&) = default;
};

/// The multi-epoch generalization: the base surface evaluated at effective
/// parameters N' and effective data D', with decay constants R*_N and R*_D.
struct MultiEpochParams {
  ChinchillaParams base;
  double r_star_n = 0.0;
  double r_star_d = 0.0;

  friend bool operator==(const MultiEpochParams&,
                         const MultiEpochParams&) = default;
};

/// Throws ValidationError unless E > 0, A > 0, B > 0 and 0 < alpha, beta < 2.
void validate_params(const ChinchillaParams& p);
/// Additionally requires r_star_n > 0 and r_star_d > 0.
void validate_params(const MultiEpochParams& p);

/// L(N, D) = E + A/N^alpha + B/D^beta. Strictly decreasing in each argument,
/// tends to E as both grow without bound.
double predict_loss(const ChinchillaParams& p, double n, double d);

struct EffectiveBudget {
  double n_eff = 0.0;  // N'
  double d_eff = 0.0;  // D'
};

/// Repetition- and excess-discounted budgets:
///   D' = U_D + U_D * R*_D * (1 - exp(-R_D / R*_D)),  R_D = D/U_D - 1
///   N' = U_N + U_N * R*_N * (1 - exp(-R_N / R*_N)),  R_N = N/U_N - 1
/// An undersized model (N < U_N, i.e. R_N < 0) contributes N' = N unchanged:
/// the decay models only excess parameters. D' never exceeds U_D*(1 + R*_D),
/// and D' = D exactly when R_D = 0; same bounds for N'.
EffectiveBudget effective_budget(const MultiEpochParams& p, double n, double d,
                                 double u_d, double u_n);

/// predict_loss on the effective budgets.
double predict_loss_multi(const MultiEpochParams& p, double n, double d,
                          double u_d, double u_n);

/// Stage-1 multistart initialization grid over the transformed parameters
/// (log E, log A, log B, alpha, beta). Starts are enumerated with alpha
/// outermost, then beta, log_a, log_b, and log_e innermost; that enumeration
/// order defines the grid index used for tie-breaking.
struct GridSpec {
  std::vector<double> alpha = {0.1, 0.3, 0.5, 0.7, 1.0};
  std::vector<double> beta = {0.1, 0.3, 0.5, 0.7, 1.0};
  std::vector<double> log_a = {1.0, 3.0, 5.0, 7.0};
  std::vector<double> log_b = {1.0, 3.0, 5.0, 7.0};
  std::vector<double> log_e = {-0.5, 0.0, 0.5, 1.0};
};

struct FitConfig {
  double huber_delta = 0.03;
  GridSpec grid;
  /// Stage-2 starts: (log R*_N, log R*_D) over rho_grid x rho_grid,
  /// rho_n outermost.
  std::vector<double> rho_grid = {0.0, 1.0, 2.0, 3.0, 4.0};
  OptConfig opt;
  int threads = 1;  // grid starts evaluated concurrently when > 1
  /// Runs with R_D at or below this count as single-epoch (a run that used
  /// just under one pass of its corpus is a single-epoch run).
  double single_epoch_max_repetitions = 0.01;
};

struct FitReport {
  std::variant<ChinchillaParams, MultiEpochParams> params;
  double objective = 0.0;  // Huber objective re-evaluated at params
  int n_runs_used = 0;
  int winning_init = 0;    // grid index of the winning start
  std::vector<double> per_run_residuals;  // log L_hat - log L, run order
};

/// Fits (E, A, B, alpha, beta) to the single-epoch runs of `runs` by
/// minimizing sum_i huber_delta(log L_hat(N_i, D_i) - log L_i) over the
/// transformed parameters, from every grid start. Ties on the final
/// objective break toward the lowest grid index; concurrent and serial
/// execution return bit-identical reports.
///
/// Preconditions: at least 6 single-epoch runs spanning >= 2 distinct N and
/// >= 2 distinct D. Throws ValidationError on precondition violations and
/// NumericalError if every start fails.
FitReport fit_single_epoch(const RunSet& runs, const FitConfig& config = {});

/// Stage 2: holds `base` fixed and fits (R*_N, R*_D) to the multi-epoch
/// runs with the same Huber log-residual objective. U_N for each run comes
/// from the compute-optimal allocation of its unique-token budget.
FitReport fit_multi_epoch(const RunSet& runs, const ChinchillaParams& base,
                          const FitConfig& config = {});

// --- fitting objective internals, exposed for gradient checks -------------

/// One single-epoch observation in log space.
struct LogPoint {
  double log_n = 0.0;
  double log_d = 0.0;
  double log_loss = 0.0;
};

/// Extracts the single-epoch observations (R_D <= max_repetitions).
std::vector<LogPoint> single_epoch_points(const RunSet& runs,
                                          double max_repetitions = 0.01);

/// Objective over theta = (log E, log A, log B, alpha, beta):
/// sum_i huber_delta(LSE(logE, logA - alpha*log N_i, logB - beta*log D_i)
///                   - log L_i).
double huber_lse_objective(std::span<const double> theta,
                           std::span<const LogPoint> points, double delta);
void huber_lse_gradient(std::span<const double> theta,
                        std::span<const LogPoint> points, double delta,
                        std::span<double> grad);

/// One multi-epoch observation with its precomputed repetition quantities.
struct MultiEpochPoint {
  double n = 0.0;
  double u_n = 0.0;
  double r_n = 0.0;  // N/U_N - 1, may be negative
  double u_d = 0.0;
  double r_d = 0.0;  // D/U_D - 1, > 0 for multi-epoch runs
  double log_loss = 0.0;
};

/// Extracts multi-epoch observations (R_D > min_repetitions), computing U_N
/// from `base` for each run.
std::vector<MultiEpochPoint> multi_epoch_points(
    const RunSet& runs, const ChinchillaParams& base,
    double min_repetitions = 0.01);

/// Stage-2 objective over rho = (log R*_N, log R*_D), base held fixed.
double multi_epoch_objective(std::span<const double> rho,
                             const ChinchillaParams& base,
                             std::span<const MultiEpochPoint> points,
                             double delta);
void multi_epoch_gradient(std::span<const double> rho,
                          const ChinchillaParams& base,
                          std::span<const MultiEpochPoint> points, double delta,
                          std::span<double> grad);

}  // namespace scalekit
