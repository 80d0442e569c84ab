#include "scalekit/linkage.hpp"

#include <cmath>
#include <sstream>
#include <vector>

#include "scalekit/errors.hpp"

namespace scalekit {

std::string SaturationFilter::describe() const {
  if (!metric_cap && !loss_min) return "none";
  std::ostringstream ss;
  if (metric_cap) ss << "metric_cap=" << *metric_cap;
  if (loss_min) ss << (metric_cap ? ", " : "") << "loss_min=" << *loss_min;
  return ss.str();
}

LinearFit loss_metric_correlation(const RunSet& runs, const std::string& metric,
                                  const SaturationFilter& filter) {
  validate_runs(runs);

  std::vector<std::pair<double, double>> pts;  // (loss, metric)
  bool metric_seen = false;
  for (const auto& r : runs.records) {
    const auto it = r.metrics.find(metric);
    if (it == r.metrics.end()) continue;
    metric_seen = true;
    if (filter.metric_cap && it->second > *filter.metric_cap) continue;
    if (filter.loss_min && r.test_loss < *filter.loss_min) continue;
    pts.emplace_back(r.test_loss, it->second);
  }
  if (!metric_seen) {
    throw ValidationError("metric '" + metric + "' is absent from all runs");
  }
  if (pts.size() < 2) {
    throw ValidationError("fewer than 2 runs survive the saturation filter (" +
                          filter.describe() + ")");
  }

  const double n = static_cast<double>(pts.size());
  double mean_x = 0.0, mean_y = 0.0;
  for (const auto& [x, y] : pts) {
    mean_x += x;
    mean_y += y;
  }
  mean_x /= n;
  mean_y /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& [x, y] : pts) {
    sxx += (x - mean_x) * (x - mean_x);
    sxy += (x - mean_x) * (y - mean_y);
    syy += (y - mean_y) * (y - mean_y);
  }
  if (sxx == 0.0) {
    throw ValidationError("all surviving runs share one test_loss value");
  }

  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = mean_y - fit.slope * mean_x;
  fit.pearson_r = syy == 0.0 ? 0.0 : sxy / std::sqrt(sxx * syy);
  fit.n_points = static_cast<int>(pts.size());
  fit.filter_applied = filter.describe();
  return fit;
}

EfficiencyReport efficiency_ratio(double gamma_ref, double gamma_other,
                                  const std::string& metric) {
  if (!std::isfinite(gamma_ref) || !std::isfinite(gamma_other) ||
      gamma_ref == 0.0 || gamma_other == 0.0) {
    throw ValidationError("efficiency ratio requires non-zero exponents");
  }
  if ((gamma_ref > 0.0) != (gamma_other > 0.0)) {
    throw ValidationError(
        "exponents have opposite signs: one modality improves while the other "
        "degrades, so their scaling efficiencies are incomparable");
  }
  EfficiencyReport rep;
  rep.metric = metric;
  rep.gamma_ref = gamma_ref;
  rep.gamma_other = gamma_other;
  rep.ratio = gamma_ref / gamma_other;
  rep.compute_multiplier = std::pow(10.0, rep.ratio);
  return rep;
}

EfficiencyReport efficiency_ratio(const PowerLawFit& fit_ref,
                                  const PowerLawFit& fit_other,
                                  const std::string& metric) {
  return efficiency_ratio(fit_ref.exponent, fit_other.exponent, metric);
}

ParityProjection project_parity(const PowerLawFit& fit_ref,
                                const PowerLawFit& fit_other, double c_ref) {
  if (!(c_ref > 0.0) || !std::isfinite(c_ref)) {
    throw ValidationError("c_ref must be positive and finite");
  }
  if (fit_ref.exponent == 0.0 || fit_other.exponent == 0.0) {
    throw ValidationError("parity projection requires non-zero exponents");
  }
  if ((fit_ref.exponent > 0.0) != (fit_other.exponent > 0.0)) {
    throw ValidationError("parity projection requires exponents of equal sign");
  }

  ParityProjection out;
  out.target_value = fit_ref.coefficient * std::pow(c_ref, fit_ref.exponent);
  if (!(out.target_value > 0.0)) {
    throw ValidationError("projected target value is not positive");
  }
  out.target_above_100 = out.target_value > 100.0;
  out.c_other =
      std::pow(fit_ref.coefficient / fit_other.coefficient,
               1.0 / fit_other.exponent) *
      std::pow(c_ref, fit_ref.exponent / fit_other.exponent);
  out.extrapolated_ref = c_ref < fit_ref.c_min || c_ref > fit_ref.c_max;
  out.extrapolated_other =
      out.c_other < fit_other.c_min || out.c_other > fit_other.c_max;
  return out;
}

}  // namespace scalekit
