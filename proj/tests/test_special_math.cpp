#include <doctest.h>

#include <cmath>

#include "fpa/special_math.hpp"

using namespace fpa;

TEST_CASE("lambert principal branch at known points") {
  CHECK(lambert_w0(0.0) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(lambert_w0(std::exp(1.0)) == doctest::Approx(1.0).epsilon(1e-12));

  // Bisection oracle for w e^w = -e^{-2} on [-1, 0].
  const double target = -std::exp(-2.0);
  double lo = -1.0, hi = 0.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (mid * std::exp(mid) < target ? hi : lo) = mid;
  }
  const double oracle = 0.5 * (lo + hi);
  CHECK(lambert_w0(target) == doctest::Approx(oracle).epsilon(1e-12));
  CHECK(lambert_w0(target) == doctest::Approx(-0.15859).epsilon(1e-4));
}

TEST_CASE("lambert inverse identity and monotonicity on a grid") {
  const double lo = -std::exp(-1.0) + 1e-6;
  double prev = -2.0;
  for (int i = 0; i < 1000; ++i) {
    const double z = lo + (10.0 - lo) * i / 999.0;
    const double w = lambert_w0(z);
    CHECK(std::abs(w * std::exp(w) - z) <= 1e-10);
    CHECK(w >= prev - 1e-13);
    CHECK(w >= -1.0);
    prev = w;
  }
}

TEST_CASE("lambert derivative matches finite differences") {
  CHECK(lambert_w0_derivative(0.0) == doctest::Approx(1.0));
  CHECK(lambert_w0_derivative(std::exp(1.0)) ==
        doctest::Approx(1.0 / (2.0 * std::exp(1.0))).epsilon(1e-12));

  for (const double z : {-std::exp(-2.0), -0.1, 0.5, 1.0, 3.0, 9.0}) {
    const double h = 1e-6 * std::max(1.0, std::abs(z));
    const double fd = (lambert_w0(z + h) - lambert_w0(z - h)) / (2.0 * h);
    CHECK(lambert_w0_derivative(z) == doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("lambert domain errors") {
  CHECK_THROWS_AS(lambert_w0(-1.0), MathDomainError);
  CHECK_THROWS_AS(lambert_w0_derivative(-std::exp(-1.0)), MathDomainError);
}

TEST_CASE("threshold where the flat bound ends") {
  const double theta = theta_threshold();
  CHECK(theta == doctest::Approx(0.7968).epsilon(2e-4));
  CHECK(theta > 0.79);
  CHECK(theta < 0.80);

  // Same value through a bisection on 2(z - 1) = W0(-2 e^{-2}).
  const double w = lambert_w0(-2.0 * std::exp(-2.0));
  double lo = 0.79, hi = 0.80;
  for (int i = 0; i < 100; ++i) {
    const double mid = 0.5 * (lo + hi);
    (2.0 * (mid - 1.0) < w ? lo : hi) = mid;
  }
  CHECK(theta == doctest::Approx(0.5 * (lo + hi)).epsilon(1e-10));
}

TEST_CASE("fixed point of 1 - e^{-1/z}") {
  const double beta = beta_threshold();
  CHECK(beta == doctest::Approx(0.7406).epsilon(2e-4));
  CHECK(std::abs(beta - (1.0 - std::exp(-1.0 / beta))) <= 1e-10);
  CHECK(beta > 0.74);
  CHECK(beta < 0.75);
  // Sign change bracket.
  auto g = [](double z) { return z - 1.0 + std::exp(-1.0 / z); };
  CHECK(g(0.74) < 0.0);
  CHECK(g(0.75) > 0.0);
}
