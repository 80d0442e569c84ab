#pragma once

#include <span>
#include <string>
#include <vector>

#include "scalekit/runstore.hpp"

namespace scalekit {

/// y = coefficient * C^exponent fitted in log-log space.
struct PowerLawFit {
  double coefficient = 0.0;  // k > 0
  double exponent = 0.0;     // gamma, signed
  double r_squared = 0.0;    // goodness of the log-log regression
  double c_min = 0.0;        // compute domain of the supporting points
  double c_max = 0.0;
  int n_points = 0;

  friend bool operator==(const PowerLawFit&, const PowerLawFit&) = default;
};

struct EnvelopePoint {
  double compute = 0.0;
  double value = 0.0;

  friend bool operator==(const EnvelopePoint&, const EnvelopePoint&) = default;
};

enum class Orientation { min, max };

/// Non-dominated frontier, sorted by compute. Under `min`, a kept point has
/// strictly lower value than every input point of smaller-or-equal compute;
/// equal-compute ties keep the best value (first occurrence on exact
/// duplicates). `max` flips the value comparisons. Throws on empty input.
std::vector<EnvelopePoint> pareto_envelope(std::span<const EnvelopePoint> points,
                                           Orientation orientation);

/// Ordinary least squares on (log C, log value): k = exp(intercept),
/// gamma = slope. Requires >= 2 points, distinct compute values, and
/// positive values. All-equal values fit slope 0 with r_squared = 0 by
/// convention.
PowerLawFit fit_power_law(std::span<const EnvelopePoint> points);

/// Minimal-loss-per-FLOP envelope of the curve set, then fit_power_law.
PowerLawFit loss_compute_law(const CurveSet& curves);

/// Maximal-metric-per-FLOP envelope over points carrying `metric`, then
/// fit_power_law on the raw percentage values.
PowerLawFit metric_compute_law(const CurveSet& curves,
                               const std::string& metric);

}  // namespace scalekit
