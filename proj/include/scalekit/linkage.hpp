#pragma once

#include <optional>
#include <string>

#include "scalekit/runstore.hpp"
#include "scalekit/scalecurves.hpp"

namespace scalekit {

/// Saturation filter for the loss-metric regression. Both bounds are off by
/// default: which points count as saturated is a judgement call the caller
/// makes explicitly, and the fit records what was applied.
struct SaturationFilter {
  std::optional<double> metric_cap;  // keep runs with metric <= cap
  std::optional<double> loss_min;    // keep runs with loss >= loss_min

  std::string describe() const;
};

/// OLS of a downstream metric on upstream test loss.
struct LinearFit {
  double slope = 0.0;      // metric percent per nat
  double intercept = 0.0;  // metric percent
  double pearson_r = 0.0;
  int n_points = 0;
  std::string filter_applied;

  friend bool operator==(const LinearFit&, const LinearFit&) = default;
};

LinearFit loss_metric_correlation(const RunSet& runs, const std::string& metric,
                                  const SaturationFilter& filter = {});

/// Relative efficiency with scale: the ratio of two metric-compute
/// power-law exponents. A compute increase of factor 10^x in the reference
/// modality needs a factor 10^(x*ratio) in the other to buy the same metric
/// gain; compute_multiplier = 10^ratio is that factor for one decade.
struct EfficiencyReport {
  std::string metric;
  double gamma_ref = 0.0;
  double gamma_other = 0.0;
  double ratio = 0.0;               // gamma_ref / gamma_other
  double compute_multiplier = 0.0;  // 10^ratio
};

EfficiencyReport efficiency_ratio(const PowerLawFit& fit_ref,
                                  const PowerLawFit& fit_other,
                                  const std::string& metric);

/// Exponent-only variant for when the paper-style gammas are given directly.
EfficiencyReport efficiency_ratio(double gamma_ref, double gamma_other,
                                  const std::string& metric);

/// Compute at which `fit_other` predicts the value `fit_ref` reaches at
/// c_ref:  C_other = (k_ref/k_other)^(1/gamma_other) *
/// c_ref^(gamma_ref/gamma_other). Extrapolation beyond either fit's
/// supporting domain is reported, not rejected.
struct ParityProjection {
  double c_other = 0.0;
  double target_value = 0.0;       // fit_ref evaluated at c_ref
  bool extrapolated_ref = false;   // c_ref outside fit_ref's domain
  bool extrapolated_other = false; // c_other outside fit_other's domain
  bool target_above_100 = false;   // nonsense for accuracy metrics; flagged
};

ParityProjection project_parity(const PowerLawFit& fit_ref,
                                const PowerLawFit& fit_other, double c_ref);

}  // namespace scalekit
