#include <cmath>
#include <numbers>

#include "doctest.h"

#include "abk/bounds.hpp"
#include "abk/error.hpp"
#include "abk/stepsize.hpp"

namespace abk {
namespace {

// Bisection on w e^w = x over [0, max(1, ln(1 + x) + 1)].
double BisectLambertW(double x) {
  double lo = 0.0, hi = std::max(1.0, std::log1p(x) + 1.0);
  while (hi - lo > 1e-14) {
    const double mid = 0.5 * (lo + hi);
    (mid * std::exp(mid) < x ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("Lambert W special values") {
  CHECK(LambertW(0.0) == 0.0);
  CHECK(LambertW(std::numbers::e) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(LambertW(10.0) == doctest::Approx(BisectLambertW(10.0)).epsilon(1e-12));
  CHECK(LambertW(10.0) == doctest::Approx(1.7455280027406994).epsilon(1e-12));
  CHECK_THROWS_AS(LambertW(-1e-3), Error);
  CHECK_THROWS_AS(LambertW(std::nan("")), Error);
}

TEST_CASE("Lambert W identity and monotonicity on a log grid") {
  double prev = -1.0;
  for (double e = -8.0; e <= 30.0; e += 0.05) {
    const double x = std::pow(10.0, e);
    const double w = LambertW(x);
    CAPTURE(x);
    CHECK(std::abs(w * std::exp(w) - x) <= 1e-12 * std::max(1.0, x));
    CHECK(w > prev);
    prev = w;
  }
}

TEST_CASE("W(exp(t)) without overflow") {
  for (double t : {-5.0, 0.0, 1.0, 50.0, 500.0}) {
    CHECK(LambertWOfExp(t) == doctest::Approx(LambertW(std::exp(t))).epsilon(1e-13));
  }
  for (double t : {700.0, 1e4, 5e4, 1e8}) {
    const double w = LambertWOfExp(t);
    CHECK(std::abs(w + std::log(w) - t) <= 1e-12 * t);
  }
}

TEST_CASE("g bound") {
  BoundParams p{0.1, 100.0, 1.0, 1.0};
  SUBCASE("valid at the start") {
    CHECK(GBound(p, 0) / p.sigma2 >= p.beta0 * (1.0 - 1e-12));
    CHECK(BetaBound(p, 0) >= p.beta0 * (1.0 - 1e-12));
  }
  SUBCASE("strictly decreasing") {
    p.beta0 = 1e3;
    double prev = GBound(p, 0);
    bool ok = true;
    for (int k = 1; k <= 10000; ++k) {
      const double g = GBound(p, k);
      ok &= g < prev;
      prev = g;
    }
    CHECK(ok);
  }
  SUBCASE("decays like 2 sigma^2 / (gamma^2 k)") {
    const std::int64_t k = 1000000;
    const double ratio = GBound(p, k) * p.gamma * p.gamma * static_cast<double>(k) / (2.0 * p.sigma2);
    CHECK(ratio >= 0.8);
    CHECK(ratio <= 1.2);
  }
  SUBCASE("equals sigma^2 times the beta bound") {
    p.sigma2 = 2.5;
    for (std::int64_t k : {0, 1, 7, 50, 300, 1000, 4000, 12345, 100000, 1000000}) {
      CHECK(GBound(p, k) == doctest::Approx(p.sigma2 * BetaBound(p, k)).epsilon(1e-14));
    }
  }
  SUBCASE("noiseless") {
    p.sigma2 = 0.0;
    CHECK(GBound(p, 10) == 0.0);
    CHECK(NoiselessEnvelope(4.0, 0.2, 3.0, 10) == doctest::Approx(12.0 * std::exp(-1.0)));
  }
  SUBCASE("invalid") {
    p.gamma = 0.0;
    CHECK_THROWS_AS(GBound(p, 1), Error);
    p.gamma = 2.0;
    CHECK_THROWS_AS(BetaBound(p, 1), Error);
    p.gamma = 0.1;
    p.sigma2 = -1.0;
    CHECK_THROWS_AS(GBound(p, 1), Error);
  }
}

TEST_CASE("beta recursion stays below both closed-form bounds") {
  for (double gamma : {0.01, 0.1, 0.5, 1.0}) {
    for (double beta0 : {10.0, 1e3, 1e6}) {
      CAPTURE(gamma);
      CAPTURE(beta0);
      auto s = StepsizeSchedule::Adaptive(gamma, beta0);
      const BoundParams p{gamma, beta0, 1.0, 1.0};
      const double v0 = gamma * beta0;
      bool ok = true;
      for (std::int64_t k = 0; k <= 10000; ++k) {
        const double v = gamma * s.beta();
        ok &= v <= CrudeVBound(gamma, v0, k) * (1.0 + 1e-10);
        ok &= s.beta() <= BetaBound(p, k) * (1.0 + 1e-10);
        s.Advance();
      }
      CHECK(ok);
    }
  }
}

}  // namespace abk
