#include "abk/stepsize.hpp"

#include <cmath>

#include <fmt/format.h>

#include "abk/error.hpp"

namespace abk {

StepsizeSchedule StepsizeSchedule::Constant(double eta) {
  if (!(eta > 0.0 && eta < 2.0)) {
    throw Error(ErrorCode::kDomainError, fmt::format("constant eta must be in (0, 2), got {}", eta));
  }
  StepsizeSchedule s;
  s.kind_ = Kind::kConstant;
  s.eta_ = eta;
  return s;
}

StepsizeSchedule StepsizeSchedule::Adaptive(double gamma, double beta0) {
  if (!(gamma > 0.0 && gamma < 2.0)) {
    throw Error(ErrorCode::kDomainError, fmt::format("gamma must be in (0, 2), got {}", gamma));
  }
  if (!(beta0 > 0.0) || !std::isfinite(beta0)) {
    throw Error(ErrorCode::kDomainError, fmt::format("beta0 must be > 0, got {}", beta0));
  }
  StepsizeSchedule s;
  s.kind_ = Kind::kAdaptive;
  s.gamma_ = gamma;
  s.beta0_ = beta0;
  s.beta_ = beta0;
  return s;
}

double StepsizeSchedule::NextEta() const {
  if (kind_ == Kind::kConstant) return eta_;
  const double v = gamma_ * beta_;
  return v / (v + 1.0);
}

double StepsizeSchedule::Advance() {
  const double eta = NextEta();
  if (kind_ == Kind::kConstant) return eta;
  const double next = beta_ * (1.0 - 0.5 * gamma_ * eta);
  if (!(next > 0.0)) {
    throw Error(ErrorCode::kInvalidState,
                fmt::format("beta would become non-positive ({} -> {})", beta_, next));
  }
  beta_ = next;
  return eta;
}

}  // namespace abk
