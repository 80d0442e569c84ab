#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstring>

#include "scalekit/errors.hpp"
#include "scalekit/numopt.hpp"
#include "scalekit/rng.hpp"

using namespace scalekit;

namespace {

const ObjectiveFn shifted_quadratic = [](std::span<const double> x) {
  double s = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - static_cast<double>(i + 1);
    s += d * d;
  }
  return s;
};
const GradientFn shifted_quadratic_grad = [](std::span<const double> x,
                                             std::span<double> g) {
  for (size_t i = 0; i < x.size(); ++i) {
    g[i] = 2.0 * (x[i] - static_cast<double>(i + 1));
  }
};

const ObjectiveFn rosenbrock = [](std::span<const double> x) {
  const double a = 1.0 - x[0];
  const double b = x[1] - x[0] * x[0];
  return a * a + 100.0 * b * b;
};
const GradientFn rosenbrock_grad = [](std::span<const double> x,
                                      std::span<double> g) {
  g[0] = -2.0 * (1.0 - x[0]) - 400.0 * x[0] * (x[1] - x[0] * x[0]);
  g[1] = 200.0 * (x[1] - x[0] * x[0]);
};

}  // namespace

TEST_CASE("separable quadratic reaches its analytic minimum") {
  const OptResult res =
      minimize(shifted_quadratic, shifted_quadratic_grad,
               std::vector<double>(8, 0.0));
  CHECK(res.converged);
  CHECK(res.grad_norm <= 1e-8);
  for (size_t i = 0; i < res.x_min.size(); ++i) {
    CHECK(res.x_min[i] == doctest::Approx(i + 1.0).epsilon(1e-8));
  }
}

TEST_CASE("rosenbrock from the classic start") {
  const OptResult res =
      minimize(rosenbrock, rosenbrock_grad, std::vector<double>{-1.2, 1.0});
  CHECK(res.converged);
  CHECK(res.x_min[0] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(res.x_min[1] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(res.f_min <= rosenbrock(std::vector<double>{-1.2, 1.0}));
}

TEST_CASE("random strictly convex quadratics in up to 20 dims converge") {
  SplitMix64 rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    const size_t n = 2 + static_cast<size_t>(rng.next_uniform() * 19.0);
    std::vector<double> scale(n), target(n);
    for (size_t i = 0; i < n; ++i) {
      scale[i] = 0.1 + 9.9 * rng.next_uniform();
      target[i] = -5.0 + 10.0 * rng.next_uniform();
    }
    // couple the coordinates so the Hessian is not diagonal
    const ObjectiveFn f = [&](std::span<const double> x) {
      double s = 0.0, chain = 0.0;
      for (size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - target[i];
        s += scale[i] * d * d;
        chain += d;
      }
      return s + 0.25 * chain * chain;
    };
    const GradientFn g = [&](std::span<const double> x, std::span<double> gr) {
      double chain = 0.0;
      for (size_t i = 0; i < x.size(); ++i) chain += x[i] - target[i];
      for (size_t i = 0; i < x.size(); ++i) {
        gr[i] = 2.0 * scale[i] * (x[i] - target[i]) + 0.5 * chain;
      }
    };
    const OptResult res = minimize(f, g, std::vector<double>(n, 0.0));
    CHECK(res.converged);
    CHECK(res.grad_norm <= 1e-8);
    CHECK(res.iterations <= 1000);
  }
}

TEST_CASE("determinism: identical inputs give bit-identical results") {
  const auto run = [] {
    return minimize(rosenbrock, rosenbrock_grad,
                    std::vector<double>{-1.2, 1.0});
  };
  const OptResult a = run();
  const OptResult b = run();
  CHECK(std::memcmp(a.x_min.data(), b.x_min.data(),
                    a.x_min.size() * sizeof(double)) == 0);
  CHECK(std::memcmp(&a.f_min, &b.f_min, sizeof(double)) == 0);
  CHECK(a.iterations == b.iterations);
}

TEST_CASE("f_min never exceeds f(x0), even on a kinked objective") {
  // |x|-like objective whose gradient lies to the analytic subgradient;
  // the line search may soft-fail, but the contract must hold
  const ObjectiveFn f = [](std::span<const double> x) {
    return std::abs(x[0]);
  };
  const GradientFn g = [](std::span<const double> x, std::span<double> gr) {
    gr[0] = x[0] >= 0.0 ? 1.0 : -1.0;
  };
  const OptResult res = minimize(f, g, std::vector<double>{0.7});
  CHECK(res.f_min <= 0.7);
  if (res.converged) CHECK(res.grad_norm <= 1e-8);
}

TEST_CASE("already-optimal start returns immediately") {
  const OptResult res = minimize(shifted_quadratic, shifted_quadratic_grad,
                                 std::vector<double>{1.0, 2.0, 3.0});
  CHECK(res.converged);
  CHECK(res.iterations == 0);
  CHECK(res.f_min == 0.0);
}

TEST_CASE("non-finite objective at the start throws") {
  const ObjectiveFn f = [](std::span<const double> x) {
    return std::log(x[0]);
  };
  const GradientFn g = [](std::span<const double> x, std::span<double> gr) {
    gr[0] = 1.0 / x[0];
  };
  CHECK_THROWS_AS(minimize(f, g, std::vector<double>{-1.0}), NumericalError);
}

TEST_CASE("config invariants enforced") {
  OptConfig bad;
  bad.line_search.c1 = 0.95;  // c1 >= c2
  CHECK_THROWS_AS(minimize(shifted_quadratic, shifted_quadratic_grad,
                           std::vector<double>{0.0}, bad),
                  ValidationError);
  bad = {};
  bad.memory_pairs = 0;
  CHECK_THROWS_AS(minimize(shifted_quadratic, shifted_quadratic_grad,
                           std::vector<double>{0.0}, bad),
                  ValidationError);
}

TEST_CASE("huber values on both branches and at the boundary") {
  CHECK(huber(0.01, 0.03) == doctest::Approx(5.0e-5).epsilon(1e-12));
  CHECK(huber(0.1, 0.03) == doctest::Approx(0.00255).epsilon(1e-12));
  // boundary: both branch formulas agree
  const double quadratic = 0.5 * 0.03 * 0.03;
  const double linear = 0.03 * (0.03 - 0.5 * 0.03);
  CHECK(quadratic == linear);
  CHECK(huber(-0.03, 0.03) == doctest::Approx(4.5e-4).epsilon(1e-12));
}

TEST_CASE("huber properties: non-negative, even, monotone in |r|") {
  SplitMix64 rng(4);
  for (int i = 0; i < 1000; ++i) {
    const double r = (rng.next_uniform() - 0.5) * 2.0;
    const double delta = 0.001 + rng.next_uniform();
    CHECK(huber(r, delta) >= 0.0);
    CHECK(huber(r, delta) == huber(-r, delta));
    const double bigger = std::abs(r) * (1.0 + rng.next_uniform());
    CHECK(huber(bigger, delta) >= huber(r, delta));
  }
}

TEST_CASE("huber derivative is continuous at the branch point") {
  const double delta = 0.03;
  const double eps = 1e-12;
  CHECK(huber_derivative(delta, delta) == delta);
  CHECK(huber_derivative(delta + eps, delta) == delta);
  CHECK(huber_derivative(-delta, delta) == -delta);
  CHECK(huber_derivative(0.01, delta) == 0.01);
  CHECK(huber_derivative(1.0, delta) == delta);
  CHECK_THROWS_AS(huber(1.0, 0.0), ValidationError);
}

TEST_CASE("grad_check accepts a correct gradient") {
  const ObjectiveFn f = [](std::span<const double> x) { return x[0] * x[0]; };
  const GradientFn g = [](std::span<const double> x, std::span<double> gr) {
    gr[0] = 2.0 * x[0];
  };
  CHECK(grad_check(f, g, std::vector<double>{3.0}, 1e-5) < 1e-9);
}

TEST_CASE("grad_check flags a wrong gradient") {
  const ObjectiveFn f = [](std::span<const double> x) { return x[0] * x[0]; };
  const GradientFn g = [](std::span<const double> x, std::span<double> gr) {
    gr[0] = x[0];  // deliberately half the true gradient
  };
  // |3 - 6| / 6
  CHECK(grad_check(f, g, std::vector<double>{3.0}, 1e-5) ==
        doctest::Approx(0.5).epsilon(1e-4));
}

TEST_CASE("grad_check rejects non-finite evaluations") {
  const ObjectiveFn f = [](std::span<const double> x) {
    return std::log(x[0]);
  };
  const GradientFn g = [](std::span<const double> x, std::span<double> gr) {
    gr[0] = 1.0 / x[0];
  };
  CHECK_THROWS_AS(grad_check(f, g, std::vector<double>{1e-7}, 1e-5),
                  NumericalError);
}
