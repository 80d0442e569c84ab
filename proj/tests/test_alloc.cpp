#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "scalekit/alloc.hpp"
#include "scalekit/errors.hpp"
#include "scalekit/presets.hpp"
#include "scalekit/rng.hpp"

using namespace scalekit;

TEST_CASE("equal exponents split the budget evenly") {
  const AllocationConstants c = allocation_constants(presets::text().base);
  CHECK(c.a == 0.5);
  CHECK(c.b == 0.5);
  CHECK(c.a + c.b == 1.0);
}

TEST_CASE("speech exponents: a = 24/49, b = 25/49 exactly") {
  const AllocationConstants c = allocation_constants(presets::speech().base);
  CHECK(c.a == 24.0 / 49.0);
  CHECK(c.b == 25.0 / 49.0);
  CHECK(c.a + c.b == 1.0);
  CHECK(std::abs(c.a - 0.5) < 0.02);
  CHECK(std::abs(c.b - 0.5) < 0.02);
  CHECK(c.G == doctest::Approx(0.127).epsilon(1e-2));
}

TEST_CASE("a + b == 1 exactly for random valid params") {
  SplitMix64 rng(31);
  for (int i = 0; i < 5000; ++i) {
    const ChinchillaParams p{1.0,
                             std::exp(8.0 * rng.next_uniform()),
                             std::exp(8.0 * rng.next_uniform()),
                             0.01 + 1.97 * rng.next_uniform(),
                             0.01 + 1.97 * rng.next_uniform()};
    const AllocationConstants c = allocation_constants(p);
    CHECK(c.a + c.b == 1.0);
    CHECK(c.a > 0.0);
    CHECK(c.b > 0.0);
  }
}

TEST_CASE("optimal_allocation satisfies the budget constraint") {
  const ChinchillaParams p = presets::speech().base;
  for (double c = 1e16; c <= 1e24; c *= 10.0) {
    const AllocationResult r = optimal_allocation(p, c);
    CHECK(std::abs(6.0 * r.n_opt * r.d_opt - c) / c <= 1e-12);
    CHECK(r.predicted_loss == predict_loss(p, r.n_opt, r.d_opt));
  }
}

TEST_CASE("speech allocation at C = 6e18") {
  const AllocationResult r =
      optimal_allocation(presets::speech().base, 6e18);
  CHECK(r.n_opt == doctest::Approx(8.3e7).epsilon(5e-3));
  CHECK(r.d_opt == doctest::Approx(1.20e10).epsilon(5e-3));
}

TEST_CASE("doubling compute scales N_opt by 2^a and D_opt by 2^b") {
  const ChinchillaParams p = presets::speech().base;
  const AllocationConstants c = allocation_constants(p);
  const AllocationResult r1 = optimal_allocation(p, 1e19);
  const AllocationResult r2 = optimal_allocation(p, 2e19);
  CHECK(r2.n_opt / r1.n_opt ==
        doctest::Approx(std::pow(2.0, c.a)).epsilon(1e-12));
  CHECK(r2.d_opt / r1.d_opt ==
        doctest::Approx(std::pow(2.0, c.b)).epsilon(1e-12));
}

TEST_CASE("loss along the optimal path decreases toward E") {
  const ChinchillaParams p = presets::speech().base;
  double prev = optimal_allocation(p, 1e14).predicted_loss;
  for (double c = 1e15; c <= 1e30; c *= 10.0) {
    const double cur = optimal_allocation(p, c).predicted_loss;
    CHECK(cur < prev);
    CHECK(cur > p.E);
    prev = cur;
  }
  CHECK(optimal_allocation(p, 1e60).predicted_loss ==
        doctest::Approx(p.E).epsilon(1e-6));
}

TEST_CASE("optimal_params_for_tokens: a = b gives U_N = G^2 * U_D") {
  const ChinchillaParams p = presets::text().base;  // alpha == beta
  const AllocationConstants c = allocation_constants(p);
  const double u_d = 3.7e9;
  CHECK(optimal_params_for_tokens(p, u_d) ==
        doctest::Approx(c.G * c.G * u_d).epsilon(1e-12));
}

TEST_CASE("optimal_params_for_tokens inverts D_opt") {
  const ChinchillaParams p = presets::speech().base;
  const double u_d = 1e9;
  const double u_n = optimal_params_for_tokens(p, u_d);

  // independent route: bisect D_opt(C) = u_d on log C, then take N_opt(C)
  double lo = std::log(1e0), hi = std::log(1e40);
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (optimal_allocation(p, std::exp(mid)).d_opt < u_d) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double u_n_numeric = optimal_allocation(p, std::exp(hi)).n_opt;
  CHECK(u_n == doctest::Approx(u_n_numeric).epsilon(1e-9));

  // round-trip: allocating the implied compute returns (U_N, U_D)
  const double c_implied = 6.0 * u_n * u_d;
  const AllocationResult r = optimal_allocation(p, c_implied);
  CHECK(r.n_opt == doctest::Approx(u_n).epsilon(1e-9));
  CHECK(r.d_opt == doctest::Approx(u_d).epsilon(1e-9));
}

TEST_CASE("compute_for_loss round-trips a known allocation") {
  const ChinchillaParams p = presets::speech().base;
  const AllocationResult known = optimal_allocation(p, 3.7e19);
  const double c = compute_for_loss(p, known.predicted_loss);
  CHECK(c == doctest::Approx(3.7e19).epsilon(1e-5));
}

TEST_CASE("compute_for_loss: speech target 1.9673") {
  const ChinchillaParams p = presets::speech().base;
  const double c = compute_for_loss(p, 1.9673);
  CHECK(c == doctest::Approx(5.38e19).epsilon(0.01));
  // minimality sandwich around the returned budget
  CHECK(optimal_allocation(p, c * (1.0 + 1e-5)).predicted_loss <= 1.9673);
  CHECK(optimal_allocation(p, c * (1.0 - 1e-4)).predicted_loss > 1.9673);
}

TEST_CASE("compute_for_loss rejects targets at or below the floor") {
  const ChinchillaParams p = presets::speech().base;
  CHECK_THROWS_WITH_AS(compute_for_loss(p, p.E), doctest::Contains("1.73"),
                       ValidationError);
  CHECK_THROWS_AS(compute_for_loss(p, 0.5), ValidationError);
}

TEST_CASE("verify_allocation agrees with the closed form") {
  const std::vector<ChinchillaParams> laws = {presets::text().base,
                                              presets::speech().base,
                                              presets::speech_unigram()};
  for (const auto& p : laws) {
    for (double c : {1e18, 1e20, 1e22}) {
      const AllocationCheck chk = verify_allocation(p, c, 1e-3);
      CHECK(chk.rel_err < 1e-3);
    }
  }
}

TEST_CASE("verify_allocation: symmetric params have an analytic optimum") {
  // alpha == beta: N_opt = sqrt(C/6) * (A/B)^(1/(2*alpha))
  const ChinchillaParams p = presets::text().base;
  const double c = 1e20;
  const double analytic =
      std::sqrt(c / 6.0) * std::pow(p.A / p.B, 1.0 / (2.0 * p.alpha));
  const AllocationCheck chk = verify_allocation(p, c, 1e-3);
  CHECK(chk.n_numeric == doctest::Approx(analytic).epsilon(1e-3));
  CHECK(chk.n_closed == doctest::Approx(analytic).epsilon(1e-9));
}

TEST_CASE("verify_allocation fails honestly at impossible tolerances") {
  CHECK_THROWS_AS(verify_allocation(presets::speech().base, 1e20, 1e-15),
                  NumericalError);
}
