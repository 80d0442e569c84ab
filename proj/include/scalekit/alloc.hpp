#pragma once

#include "scalekit/lawfit.hpp"

namespace scalekit {

/// Constants of the compute-optimal split:
///   G = (alpha*A / (beta*B))^(1/(alpha+beta)),
///   a = beta/(alpha+beta), b = alpha/(alpha+beta).
/// b is stored as 1 - a, which makes a + b == 1 exact in floating point
/// (the two divisions do not always sum to 1 exactly).
struct AllocationConstants {
  double G = 0.0;
  double a = 0.0;  // exponent of N_opt in (C/6)
  double b = 0.0;  // exponent of D_opt in (C/6)
};

struct AllocationResult {
  double compute = 0.0;         // FLOPs
  double n_opt = 0.0;           // parameters
  double d_opt = 0.0;           // tokens
  double predicted_loss = 0.0;  // nats
};

AllocationConstants allocation_constants(const ChinchillaParams& params);

/// Minimizer of predict_loss(N, D) subject to 6*N*D = compute:
///   N_opt = G * (C/6)^a,  D_opt = (1/G) * (C/6)^b.
/// The constraint holds to floating-point rounding because a + b == 1.
AllocationResult optimal_allocation(const ChinchillaParams& params,
                                    double compute);

/// U_N: the model size whose compute-optimal token budget equals u_d.
/// Closed form G * (G * u_d)^(a/b), the inverse of D_opt.
double optimal_params_for_tokens(const ChinchillaParams& params, double u_d);

/// Minimal compute whose optimal allocation reaches `target_loss`, found by
/// bisection on log C to 1e-6 relative (loss is strictly decreasing along
/// the optimal path). Targets at or below the loss floor E are unreachable
/// and throw ValidationError naming E.
double compute_for_loss(const ChinchillaParams& params, double target_loss);

struct AllocationCheck {
  double compute = 0.0;
  double n_closed = 0.0;   // closed-form N_opt
  double n_numeric = 0.0;  // golden-section minimizer over log N
  double rel_err = 0.0;
};

/// Cross-checks the closed form against a derivative-free golden-section
/// minimization of predict_loss(N, C/(6N)) over log N. A mismatch beyond
/// `tolerance` (relative) throws NumericalError: it indicates a bug, not
/// bad user input. The search resolves about 1e-8 relative, so tolerances
/// tighter than that are expected to fail.
AllocationCheck verify_allocation(const ChinchillaParams& params,
                                  double compute, double tolerance);

}  // namespace scalekit
