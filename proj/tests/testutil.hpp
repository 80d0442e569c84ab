#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "scalekit/runstore.hpp"
#include "scalekit/scalecurves.hpp"

namespace testutil {

/// Unique scratch directory, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    const auto base = std::filesystem::temp_directory_path();
    path_ = base / ("scalekit-test-" + std::to_string(::getpid()) + "-" +
                    std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  std::string file(const std::string& name) const {
    return (path_ / name).string();
  }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// O(n^2) reference for the Pareto envelope: point i is kept iff no other
/// point beats it per the dominance rule (strictly-better value at
/// smaller-or-equal compute; equal compute and equal value defer to the
/// earlier point).
inline std::vector<scalekit::EnvelopePoint> brute_force_envelope(
    const std::vector<scalekit::EnvelopePoint>& pts, bool want_min) {
  const auto better_or_tie_wins = [&](size_t i, size_t j) {
    // does j's presence disqualify i?
    const auto& a = pts[i];
    const auto& b = pts[j];
    if (b.compute < a.compute) {
      return want_min ? b.value <= a.value : b.value >= a.value;
    }
    if (b.compute == a.compute) {
      if (b.value == a.value) return j < i;
      return want_min ? b.value < a.value : b.value > a.value;
    }
    return false;
  };
  std::vector<size_t> kept;
  for (size_t i = 0; i < pts.size(); ++i) {
    bool dominated = false;
    for (size_t j = 0; j < pts.size() && !dominated; ++j) {
      if (j != i && better_or_tie_wins(i, j)) dominated = true;
    }
    if (!dominated) kept.push_back(i);
  }
  std::sort(kept.begin(), kept.end(), [&](size_t i, size_t j) {
    return pts[i].compute < pts[j].compute;
  });
  std::vector<scalekit::EnvelopePoint> out;
  for (size_t i : kept) out.push_back(pts[i]);
  return out;
}

/// Plain two-pass OLS of y on x, independent of the library's accumulation.
struct OlsLine {
  double slope, intercept, r;
};
inline OlsLine ols(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  return {sxy / sxx, my - (sxy / sxx) * mx,
          syy == 0 ? 0.0 : sxy / std::sqrt(sxx * syy)};
}

/// Attaches metric := m*loss + c to every curve point (clamped to [0, 100]
/// stays the caller's concern; pick m, c so values stay in range).
inline scalekit::CurveSet attach_linear_metric(scalekit::CurveSet curves,
                                               const std::string& name,
                                               double m, double c) {
  for (auto& p : curves.points) p.metrics[name] = m * p.loss + c;
  return curves;
}

}  // namespace testutil
