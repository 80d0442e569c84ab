#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include "scalekit/lawfit.hpp"
#include "scalekit/runstore.hpp"

namespace scalekit {

/// Recipe for a synthetic run/curve set drawn from a known law.
///
/// A ChinchillaParams law emits one single-epoch record per (size, ratio).
/// A MultiEpochParams law emits one record per (size, ratio, epoch) with
/// U_D = D/epochs; epoch_grid applies only in that mode. Losses are
/// exp(log L_hat + eps) with eps ~ Normal(0, noise_sigma^2).
///
/// Generation is reproducible down to the bit: the noise stream is
/// splitmix64(seed) (see rng.hpp), one normal variate consumed per emitted
/// record or curve point, in emission order, even when noise_sigma is 0.
struct SynthSpec {
  std::variant<ChinchillaParams, MultiEpochParams> law;
  std::vector<double> sizes = {20e6, 85e6, 155e6, 309e6, 823e6};
  std::vector<double> ratios = {2, 4, 8, 10, 20, 32, 64, 100};
  std::vector<double> epoch_grid = {2, 4, 8, 10};
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
};

/// Runs are emitted sizes-outermost, then ratios, then (multi-epoch mode)
/// epochs. run_id is "synth-NNNN" by emission index, modality "synthetic".
RunSet generate_runs(const SynthSpec& spec);

/// Learning-curve surrogate: a checkpoint after t tokens is treated as a
/// completed run of t tokens. For each run, `checkpoints` points are placed
/// log-uniformly over (1, D]: d_t = D^(t/k) for t = 1..k, so the last point
/// coincides with the run itself. Multi-epoch checkpoints see
/// u_d = min(d_t, U_D) unique tokens.
CurveSet generate_curves(const SynthSpec& spec, int checkpoints);

}  // namespace scalekit
