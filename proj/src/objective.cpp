#include "abk/objective.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "abk/error.hpp"

namespace abk {

SparseObjective::SparseObjective(double lambda) : lambda_(lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw Error(ErrorCode::kDomainError, fmt::format("lambda must be >= 0, got {}", lambda));
  }
}

Vector SparseObjective::SoftShrinkage(const Vector& xstar) const {
  Vector out(xstar.size());
  SoftShrinkageInPlace(xstar, out);
  return out;
}

void SparseObjective::SoftShrinkageInPlace(const Vector& xstar, Vector& out) const {
  out.resize(xstar.size());
  if (lambda_ == 0.0) {
    out = xstar;
    return;
  }
  for (Eigen::Index j = 0; j < xstar.size(); ++j) {
    const double t = xstar[j];
    const double magnitude = std::abs(t) - lambda_;
    out[j] = magnitude > 0.0 ? std::copysign(magnitude, t) : 0.0;
  }
}

double SparseObjective::Value(const Vector& x) const {
  return lambda_ * x.lpNorm<1>() + 0.5 * x.squaredNorm();
}

double SparseObjective::ConjugateValue(const Vector& xstar) const {
  return 0.5 * SoftShrinkage(xstar).squaredNorm();
}

double SparseObjective::BregmanDistance(const Vector& xstar, const Vector& y) const {
  const double d = ConjugateValue(xstar) - xstar.dot(y) + Value(y);
  return std::max(d, 0.0);
}

}  // namespace abk
