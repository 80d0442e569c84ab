#include "scalekit/synthgen.hpp"

#include <cmath>
#include <cstdio>

#include "scalekit/alloc.hpp"
#include "scalekit/errors.hpp"
#include "scalekit/rng.hpp"

namespace scalekit {
namespace {

void validate_spec(const SynthSpec& spec) {
  if (const auto* multi = std::get_if<MultiEpochParams>(&spec.law)) {
    validate_params(*multi);
    if (spec.epoch_grid.empty()) {
      throw ValidationError("multi-epoch generation needs a non-empty epoch grid");
    }
    for (double e : spec.epoch_grid) {
      if (!std::isfinite(e) || e < 1.0) {
        throw ValidationError("epoch counts must be >= 1");
      }
    }
  } else {
    validate_params(std::get<ChinchillaParams>(spec.law));
  }
  if (spec.sizes.empty()) throw ValidationError("sizes must be non-empty");
  if (spec.ratios.empty()) throw ValidationError("ratios must be non-empty");
  for (double s : spec.sizes) {
    if (!std::isfinite(s) || s <= 0.0) throw ValidationError("sizes must be positive");
  }
  for (double r : spec.ratios) {
    if (!std::isfinite(r) || r <= 0.0) throw ValidationError("ratios must be positive");
  }
  if (!std::isfinite(spec.noise_sigma) || spec.noise_sigma < 0.0) {
    throw ValidationError("noise_sigma must be >= 0");
  }
}

std::string run_name(int index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "synth-%04d", index);
  return buf;
}

// Loss of a (possibly partial) run: n parameters, d tokens drawn from a
// corpus of u_d unique tokens.
double law_loss(const SynthSpec& spec, double n, double d, double u_d) {
  if (const auto* multi = std::get_if<MultiEpochParams>(&spec.law)) {
    const double u_n = optimal_params_for_tokens(multi->base, u_d);
    return predict_loss_multi(*multi, n, d, u_d, u_n);
  }
  return predict_loss(std::get<ChinchillaParams>(spec.law), n, d);
}

template <typename Emit>
void for_each_run(const SynthSpec& spec, const Emit& emit) {
  const bool multi = std::holds_alternative<MultiEpochParams>(spec.law);
  int index = 0;
  for (double n : spec.sizes) {
    for (double ratio : spec.ratios) {
      const double d = n * ratio;
      if (multi) {
        for (double epochs : spec.epoch_grid) emit(index++, n, d, d / epochs);
      } else {
        emit(index++, n, d, d);
      }
    }
  }
}

}  // namespace

RunSet generate_runs(const SynthSpec& spec) {
  validate_spec(spec);
  SplitMix64 rng(spec.seed);
  RunSet rs;
  for_each_run(spec, [&](int index, double n, double d, double u_d) {
    const double eps = spec.noise_sigma * rng.next_normal();
    RunRecord r;
    r.run_id = run_name(index);
    r.modality = "synthetic";
    r.n_params = n;
    r.d_tokens = d;
    r.u_tokens = u_d;
    r.test_loss = std::exp(std::log(law_loss(spec, n, d, u_d)) + eps);
    rs.records.push_back(std::move(r));
  });
  validate_runs(rs);
  return rs;
}

CurveSet generate_curves(const SynthSpec& spec, int checkpoints) {
  validate_spec(spec);
  if (checkpoints < 2) throw ValidationError("checkpoints must be >= 2");
  SplitMix64 rng(spec.seed);
  CurveSet cs;
  for_each_run(spec, [&](int index, double n, double d, double u_d) {
    for (int t = 1; t <= checkpoints; ++t) {
      const double d_t =
          t == checkpoints
              ? d
              : std::pow(d, static_cast<double>(t) / checkpoints);
      const double u_t = std::min(d_t, u_d);
      const double eps = spec.noise_sigma * rng.next_normal();
      CurvePoint p;
      p.run_id = run_name(index);
      p.compute = 6.0 * n * d_t;
      p.loss = std::exp(std::log(law_loss(spec, n, d_t, u_t)) + eps);
      cs.points.push_back(std::move(p));
    }
  });
  validate_curves(cs);
  return cs;
}

}  // namespace scalekit
