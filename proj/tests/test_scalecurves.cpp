#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "scalekit/errors.hpp"
#include "scalekit/presets.hpp"
#include "scalekit/rng.hpp"
#include "scalekit/scalecurves.hpp"
#include "scalekit/synthgen.hpp"
#include "testutil.hpp"

using namespace scalekit;

TEST_CASE("envelope drops dominated and tie-losing points") {
  const std::vector<EnvelopePoint> pts = {{1, 5}, {2, 4}, {2, 6}, {3, 4.5}};
  const auto env = pareto_envelope(pts, Orientation::min);
  REQUIRE(env.size() == 2);
  CHECK(env[0] == EnvelopePoint{1, 5});
  CHECK(env[1] == EnvelopePoint{2, 4});
}

TEST_CASE("single point is its own envelope") {
  const std::vector<EnvelopePoint> pts = {{7, 3}};
  CHECK(pareto_envelope(pts, Orientation::min) == pts);
  CHECK(pareto_envelope(pts, Orientation::max) == pts);
}

TEST_CASE("empty input rejected") {
  CHECK_THROWS_AS(pareto_envelope({}, Orientation::min), ValidationError);
}

TEST_CASE("envelope equals the brute-force oracle on random sets") {
  SplitMix64 rng(1234);
  for (int trial = 0; trial < 500; ++trial) {
    const int n = 1 + static_cast<int>(rng.next_uniform() * 40.0);
    std::vector<EnvelopePoint> pts;
    pts.reserve(n);
    for (int i = 0; i < n; ++i) {
      // small integer grids force plenty of exact ties
      const double compute = 1.0 + std::floor(rng.next_uniform() * 8.0);
      const double value = std::floor(rng.next_uniform() * 6.0) - 2.0;
      pts.push_back({compute, value});
    }
    for (const bool want_min : {true, false}) {
      const auto got = pareto_envelope(
          pts, want_min ? Orientation::min : Orientation::max);
      const auto want = testutil::brute_force_envelope(pts, want_min);
      CHECK(got == want);
    }
  }
}

TEST_CASE("envelope is idempotent and Pareto-consistent") {
  SplitMix64 rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<EnvelopePoint> pts;
    for (int i = 0; i < 30; ++i) {
      pts.push_back({std::exp(rng.next_uniform() * 10.0),
                     rng.next_uniform() * 10.0});
    }
    const auto env = pareto_envelope(pts, Orientation::min);
    CHECK(pareto_envelope(env, Orientation::min) == env);
    // kept points are dominated by no input point
    for (const auto& kept : env) {
      for (const auto& p : pts) {
        if (p.compute < kept.compute) CHECK(kept.value < p.value);
      }
    }
    // envelope values are strictly decreasing
    for (size_t i = 1; i < env.size(); ++i) {
      CHECK(env[i].value < env[i - 1].value);
      CHECK(env[i].compute > env[i - 1].compute);
    }
  }
}

TEST_CASE("fit_power_law recovers an exact law") {
  std::vector<EnvelopePoint> pts;
  for (double c : {1e18, 1e20, 1e22}) {
    pts.push_back({c, 10.0 * std::pow(c, -0.05)});
  }
  CHECK(pts[0].value == doctest::Approx(1.2589).epsilon(1e-4));
  CHECK(pts[1].value == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(pts[2].value == doctest::Approx(0.7943).epsilon(1e-4));

  const PowerLawFit fit = fit_power_law(pts);
  CHECK(fit.exponent == doctest::Approx(-0.05).epsilon(1e-9));
  CHECK(fit.coefficient == doctest::Approx(10.0).epsilon(1e-9));
  CHECK(fit.r_squared == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(fit.c_min == 1e18);
  CHECK(fit.c_max == 1e22);
  CHECK(fit.n_points == 3);
}

TEST_CASE("two points interpolate exactly") {
  const std::vector<EnvelopePoint> pts = {{1e10, 3.0}, {1e14, 2.0}};
  const PowerLawFit fit = fit_power_law(pts);
  CHECK(fit.r_squared == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(fit.coefficient * std::pow(1e10, fit.exponent) ==
        doctest::Approx(3.0).epsilon(1e-9));
  CHECK(fit.coefficient * std::pow(1e14, fit.exponent) ==
        doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("constant values fit slope zero with r_squared zero") {
  const std::vector<EnvelopePoint> pts = {{1e10, 5.0}, {1e12, 5.0}, {1e14, 5.0}};
  const PowerLawFit fit = fit_power_law(pts);
  CHECK(fit.exponent == 0.0);
  CHECK(fit.coefficient == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(fit.r_squared == 0.0);
}

TEST_CASE("fit_power_law scale equivariance") {
  SplitMix64 rng(8);
  std::vector<EnvelopePoint> pts;
  for (int i = 0; i < 12; ++i) {
    pts.push_back({std::exp(30.0 + rng.next_uniform() * 20.0),
                   std::exp(rng.next_uniform() * 2.0)});
  }
  const PowerLawFit base = fit_power_law(pts);

  const double s = 3.7;
  std::vector<EnvelopePoint> scaled_values = pts;
  for (auto& p : scaled_values) p.value *= s;
  const PowerLawFit fv = fit_power_law(scaled_values);
  CHECK(fv.exponent == doctest::Approx(base.exponent).epsilon(1e-12));
  CHECK(fv.coefficient == doctest::Approx(base.coefficient * s).epsilon(1e-12));

  std::vector<EnvelopePoint> scaled_compute = pts;
  for (auto& p : scaled_compute) p.compute *= s;
  const PowerLawFit fc = fit_power_law(scaled_compute);
  CHECK(fc.exponent == doctest::Approx(base.exponent).epsilon(1e-9));
}

TEST_CASE("fit_power_law input validation") {
  CHECK_THROWS_AS(fit_power_law(std::vector<EnvelopePoint>{{1e10, 2.0}}),
                  ValidationError);
  CHECK_THROWS_AS(
      fit_power_law(std::vector<EnvelopePoint>{{1e10, 2.0}, {1e10, 3.0}}),
      ValidationError);
  CHECK_THROWS_AS(
      fit_power_law(std::vector<EnvelopePoint>{{1e10, 2.0}, {1e12, -1.0}}),
      ValidationError);
}

TEST_CASE("loss_compute_law recovers a single exact power-law curve") {
  CurveSet cs;
  for (int t = 0; t < 10; ++t) {
    const double c = std::pow(10.0, 15.0 + t);
    cs.points.push_back({"r0", c, 50.0 * std::pow(c, -0.02), {}});
  }
  const PowerLawFit fit = loss_compute_law(cs);
  CHECK(fit.exponent == doctest::Approx(-0.02).epsilon(1e-9));
  CHECK(fit.coefficient == doctest::Approx(50.0).epsilon(1e-9));
  CHECK(fit.n_points == 10);
}

TEST_CASE("a dominating curve excludes the dominated one") {
  CurveSet cs;
  for (int t = 0; t < 5; ++t) {
    const double c = std::pow(10.0, 16.0 + t);
    cs.points.push_back({"good", c, 10.0 * std::pow(c, -0.03), {}});
  }
  for (int t = 0; t < 5; ++t) {
    const double c = std::pow(10.0, 16.0 + t) * 1.5;
    cs.points.push_back(
        {"bad", c, 20.0 * std::pow(c, -0.03), {}});  // double the loss
  }
  const PowerLawFit fit = loss_compute_law(cs);
  CHECK(fit.n_points == 5);
  CHECK(fit.coefficient == doctest::Approx(10.0).epsilon(1e-9));
  CHECK(fit.exponent == doctest::Approx(-0.03).epsilon(1e-9));
}

TEST_CASE("synthetic curve family envelope matches the composed oracle") {
  SynthSpec spec;
  spec.law = presets::speech().base;
  spec.seed = 6;
  const CurveSet cs = generate_curves(spec, 12);
  const PowerLawFit fit = loss_compute_law(cs);

  // oracle: brute-force envelope + independent OLS in log-log space
  std::vector<EnvelopePoint> pts;
  for (const auto& p : cs.points) pts.push_back({p.compute, p.loss});
  const auto env = testutil::brute_force_envelope(pts, true);
  std::vector<double> x, y;
  for (const auto& p : env) {
    x.push_back(std::log(p.compute));
    y.push_back(std::log(p.value));
  }
  const testutil::OlsLine line = testutil::ols(x, y);
  CHECK(fit.exponent == doctest::Approx(line.slope).epsilon(1e-12));
  CHECK(fit.coefficient ==
        doctest::Approx(std::exp(line.intercept)).epsilon(1e-12));
}

TEST_CASE("metric_compute_law recovers an exact metric law") {
  CurveSet cs;
  for (int t = 0; t < 8; ++t) {
    const double c = std::pow(10.0, 15.0 + t);
    CurvePoint p{"r0", c, 3.0, {}};
    p.metrics["blimp"] = 30.0 * std::pow(c, 0.021);  // 62..87, inside [0, 100]
    cs.points.push_back(p);
  }
  const PowerLawFit fit = metric_compute_law(cs, "blimp");
  CHECK(fit.exponent == doctest::Approx(0.021).epsilon(1e-9));
  CHECK(fit.coefficient == doctest::Approx(30.0).epsilon(1e-9));
  CHECK(fit.exponent > 0.0);
}

TEST_CASE("metric_compute_law: constant metric yields r_squared 0") {
  CurveSet cs;
  for (int t = 0; t < 4; ++t) {
    CurvePoint p{"r0", std::pow(10.0, 16.0 + t), 2.0 - 0.1 * t, {}};
    p.metrics["blimp"] = 50.0;
    cs.points.push_back(p);
  }
  const PowerLawFit fit = metric_compute_law(cs, "blimp");
  CHECK(fit.exponent == 0.0);
  CHECK(fit.r_squared == 0.0);
}

TEST_CASE("metric_compute_law missing metric") {
  CurveSet cs;
  cs.points.push_back({"r0", 1e16, 2.0, {}});
  cs.points.push_back({"r0", 1e17, 1.9, {}});
  CHECK_THROWS_WITH_AS(metric_compute_law(cs, "blimp"),
                       doctest::Contains("absent"), ValidationError);
}
