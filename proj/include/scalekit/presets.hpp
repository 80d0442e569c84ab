#pragma once

#include "scalekit/lawfit.hpp"

namespace scalekit::presets {

/// Built-in reference laws for the three tokenizations this toolkit ships
/// analysis defaults for. Used by the `check` self-test and as handy
/// fixtures; real work should fit its own constants.

inline MultiEpochParams speech() {
  return {{1.73, 13.9, 39.8, 0.25, 0.24}, 31.0, 25.0};
}

inline MultiEpochParams text() {
  return {{1.87, 521.0, 1488.0, 0.35, 0.35}, 5.31, 15.4};
}

inline ChinchillaParams speech_unigram() {
  return {1.42, 3.85, 8.90, 0.15, 0.16};
}

}  // namespace scalekit::presets
