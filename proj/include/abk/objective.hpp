#pragma once

#include "abk/types.hpp"

namespace abk {

// f(x) = lambda * |x|_1 + 0.5 * |x|_2^2, which is 1-strongly convex.
//
// The conjugate is f*(x*) = 0.5 * |S(x*)|^2 with gradient S(x*), the soft
// shrinkage with threshold lambda. lambda = 0 gives the plain Euclidean
// case where S is the identity and Bregman distances are 0.5 * |x - y|^2.
class SparseObjective {
 public:
  explicit SparseObjective(double lambda = 0.0);

  double lambda() const { return lambda_; }

  // Componentwise max(|t| - lambda, 0) * sign(t), with sign(0) = 0.
  Vector SoftShrinkage(const Vector& xstar) const;
  void SoftShrinkageInPlace(const Vector& xstar, Vector& out) const;

  double Value(const Vector& x) const;
  double ConjugateValue(const Vector& xstar) const;

  // D^{x*}(x, y) = f*(x*) - <x*, y> + f(y) with x = S(x*). Rounding
  // residue below zero is clamped to 0.
  double BregmanDistance(const Vector& xstar, const Vector& y) const;

 private:
  double lambda_;
};

}  // namespace abk
