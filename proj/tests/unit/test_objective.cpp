#include <cmath>

#include "doctest.h"

#include "abk/error.hpp"
#include "abk/objective.hpp"

namespace abk {
namespace {

Vector Vec(std::initializer_list<double> values) {
  Vector v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v[i++] = x;
  return v;
}

Vector RandomVector(Rng& rng, Eigen::Index n, double scale) {
  std::normal_distribution<double> normal(0.0, scale);
  Vector v(n);
  for (auto& c : v) c = normal(rng);
  return v;
}

// Subgradient form: with x = S(x*) and x* = x + lambda * s,
//   D = 0.5 |x - y|^2 + lambda (|y|_1 - <s, y>).
double BregmanSubgradientForm(double lambda, const Vector& xstar, const Vector& y) {
  Vector x(xstar.size());
  for (Eigen::Index j = 0; j < xstar.size(); ++j) {
    x[j] = std::max(std::abs(xstar[j]) - lambda, 0.0) * (xstar[j] > 0 ? 1.0 : (xstar[j] < 0 ? -1.0 : 0.0));
  }
  double d = 0.5 * (x - y).squaredNorm();
  if (lambda > 0.0) {
    const Vector s = (xstar - x) / lambda;
    d += lambda * (y.lpNorm<1>() - s.dot(y));
  }
  return d;
}

}  // namespace

TEST_CASE("soft shrinkage") {
  CHECK(SparseObjective(0.0).SoftShrinkage(Vec({2, -0.5, 3})) == Vec({2, -0.5, 3}));
  CHECK(SparseObjective(1.0).SoftShrinkage(Vec({2, -0.5, -3})) == Vec({1, 0, -2}));
  CHECK(SparseObjective(1.0).SoftShrinkage(Vec({1}))[0] == 0.0);
  CHECK(SparseObjective(1.0).SoftShrinkage(Vec({0}))[0] == 0.0);
  CHECK_THROWS_AS(SparseObjective(-1.0), Error);
}

TEST_CASE("objective and conjugate values") {
  CHECK(SparseObjective(0.3).Value(Vector::Zero(4)) == 0.0);
  CHECK(SparseObjective(0.5).Value(Vec({1, -2})) == doctest::Approx(4.0));
  CHECK(SparseObjective(0.0).Value(Vec({1, -2})) == doctest::Approx(2.5));
  CHECK(SparseObjective(0.7).ConjugateValue(Vector::Zero(3)) == 0.0);
  CHECK(SparseObjective(1.0).ConjugateValue(Vec({2, 0})) == doctest::Approx(0.5));
  CHECK(SparseObjective(0.0).ConjugateValue(Vec({3, 4})) == doctest::Approx(12.5));
}

TEST_CASE("Bregman distance closed forms") {
  const SparseObjective f(1.0);
  CHECK(f.BregmanDistance(Vec({2}), Vec({3})) == doctest::Approx(2.0));
  CHECK(BregmanSubgradientForm(1.0, Vec({2}), Vec({3})) == doctest::Approx(2.0));

  const Vector xstar = Vec({2, -0.5, -3, 0.9});
  CHECK(f.BregmanDistance(xstar, f.SoftShrinkage(xstar)) == doctest::Approx(0.0).epsilon(1e-14));

  const SparseObjective euclid(0.0);
  const Vector y = Vec({-1, 0.25, 4, 2});
  CHECK(euclid.BregmanDistance(xstar, y) == doctest::Approx(0.5 * (xstar - y).squaredNorm()));
}

TEST_CASE("objective properties on random inputs") {
  Rng rng(2024);
  std::uniform_real_distribution<double> lambda_dist(0.0, 2.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const double lambda = trial % 10 == 0 ? 0.0 : lambda_dist(rng);
    const SparseObjective f(lambda);
    const Vector a = RandomVector(rng, 8, 2.0);
    const Vector b = RandomVector(rng, 8, 2.0);
    const Vector x = f.SoftShrinkage(a);

    const double d = f.BregmanDistance(a, b);
    CHECK(d >= 0.0);
    CHECK(d >= 0.5 * (x - b).squaredNorm() - 1e-10);

    const double other = BregmanSubgradientForm(lambda, a, b);
    CHECK(std::abs(d - other) <= 1e-10 * std::max(1.0, std::abs(other)));

    // Fenchel equality for x* in the subdifferential of f at S(x*).
    const double lhs = f.Value(x) + f.ConjugateValue(a);
    const double rhs = x.dot(a);
    CHECK(std::abs(lhs - rhs) <= 1e-10 * std::max(1.0, std::abs(rhs)));

    CHECK((f.SoftShrinkage(a) - f.SoftShrinkage(b)).norm() <= (a - b).norm() + 1e-15);
  }
}

}  // namespace abk
