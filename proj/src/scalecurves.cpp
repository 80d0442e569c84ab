#include "scalekit/scalecurves.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "scalekit/errors.hpp"

namespace scalekit {
namespace {

void validate_points(std::span<const EnvelopePoint> points) {
  if (points.empty()) throw ValidationError("no points given");
  for (const auto& p : points) {
    if (!std::isfinite(p.compute) || p.compute <= 0.0) {
      throw ValidationError("compute values must be positive and finite");
    }
    if (!std::isfinite(p.value)) {
      throw ValidationError("values must be finite");
    }
  }
}

}  // namespace

std::vector<EnvelopePoint> pareto_envelope(std::span<const EnvelopePoint> points,
                                           Orientation orientation) {
  validate_points(points);
  const bool want_min = orientation == Orientation::min;
  const auto better = [want_min](double a, double b) {
    return want_min ? a < b : a > b;
  };

  // stable sort keeps input order within equal compute, which decides
  // exact-duplicate ties
  std::vector<size_t> order(points.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](size_t i, size_t j) {
    return points[i].compute < points[j].compute;
  });

  std::vector<EnvelopePoint> envelope;
  bool have_best = false;
  double best = 0.0;
  size_t i = 0;
  while (i < order.size()) {
    // one group of equal compute; its first best-valued point is the candidate
    size_t j = i;
    size_t cand = order[i];
    while (j + 1 < order.size() &&
           points[order[j + 1]].compute == points[order[i]].compute) {
      ++j;
      if (better(points[order[j]].value, points[cand].value)) cand = order[j];
    }
    const double v = points[cand].value;
    if (!have_best || better(v, best)) {
      envelope.push_back(points[cand]);
      best = v;
      have_best = true;
    }
    i = j + 1;
  }
  return envelope;
}

PowerLawFit fit_power_law(std::span<const EnvelopePoint> points) {
  validate_points(points);
  if (points.size() < 2) {
    throw ValidationError("power-law fit needs at least 2 points");
  }
  double c_min = points[0].compute, c_max = points[0].compute;
  for (const auto& p : points) {
    if (p.value <= 0.0) {
      throw ValidationError("power-law fit needs positive values");
    }
    c_min = std::min(c_min, p.compute);
    c_max = std::max(c_max, p.compute);
  }
  if (c_min == c_max) {
    throw ValidationError("power-law fit: degenerate compute span");
  }

  const double n = static_cast<double>(points.size());
  double mean_x = 0.0, mean_y = 0.0;
  for (const auto& p : points) {
    mean_x += std::log(p.compute);
    mean_y += std::log(p.value);
  }
  mean_x /= n;
  mean_y /= n;

  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& p : points) {
    const double dx = std::log(p.compute) - mean_x;
    const double dy = std::log(p.value) - mean_y;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }

  PowerLawFit fit;
  fit.exponent = sxy / sxx;
  fit.coefficient = std::exp(mean_y - fit.exponent * mean_x);
  // constant input carries no explainable variance: r^2 = 0 by convention
  fit.r_squared = syy == 0.0 ? 0.0 : (sxy * sxy) / (sxx * syy);
  fit.c_min = c_min;
  fit.c_max = c_max;
  fit.n_points = static_cast<int>(points.size());
  return fit;
}

PowerLawFit loss_compute_law(const CurveSet& curves) {
  validate_curves(curves);
  std::vector<EnvelopePoint> pts;
  pts.reserve(curves.points.size());
  for (const auto& p : curves.points) pts.push_back({p.compute, p.loss});
  const auto env = pareto_envelope(pts, Orientation::min);
  if (env.size() < 2) {
    throw ValidationError("loss envelope has fewer than 2 points");
  }
  return fit_power_law(env);
}

PowerLawFit metric_compute_law(const CurveSet& curves,
                               const std::string& metric) {
  validate_curves(curves);
  std::vector<EnvelopePoint> pts;
  for (const auto& p : curves.points) {
    const auto it = p.metrics.find(metric);
    if (it != p.metrics.end()) pts.push_back({p.compute, it->second});
  }
  if (pts.empty()) {
    throw ValidationError("metric '" + metric + "' is absent from the curves");
  }
  if (pts.size() < 2) {
    throw ValidationError("metric '" + metric +
                          "' present on fewer than 2 points");
  }
  const auto env = pareto_envelope(pts, Orientation::max);
  if (env.size() < 2) {
    throw ValidationError("metric envelope has fewer than 2 points");
  }
  return fit_power_law(env);
}

}  // namespace scalekit
