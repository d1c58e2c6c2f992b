#include "abk/bounds.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "abk/error.hpp"

namespace abk {
namespace {

constexpr int kMaxIterations = 100;

// Above this ln(x) the direct Halley residual w*e^w - x loses range, so the
// log-form residual is used instead.
constexpr double kLogFormThreshold = 600.0;

double HalleyDirect(double x) {
  double w = std::log1p(x);
  for (int it = 0; it < kMaxIterations; ++it) {
    const double ew = std::exp(w);
    const double f = w * ew - x;
    const double wp1 = w + 1.0;
    const double step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1));
    w -= step;
    if (std::abs(step) <= 4.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(w))) {
      break;
    }
  }
  return w;
}

// Solves h(w) = w + ln w - t = 0 for t > 1 with Halley steps.
double HalleyLogForm(double t) {
  double w = t - std::log(t);
  for (int it = 0; it < kMaxIterations; ++it) {
    const double h = w + std::log(w) - t;
    const double d1 = 1.0 + 1.0 / w;
    const double d2 = -1.0 / (w * w);
    const double step = h / (d1 - 0.5 * h * d2 / d1);
    w -= step;
    if (std::abs(step) <= 4.0 * std::numeric_limits<double>::epsilon() * w) break;
  }
  return w;
}

}  // namespace

double LambertW(double x) {
  if (!(x >= 0.0)) {
    throw Error(ErrorCode::kDomainError, fmt::format("LambertW needs x >= 0, got {}", x));
  }
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return x;
  if (std::log(x) > kLogFormThreshold) return HalleyLogForm(std::log(x));
  return HalleyDirect(x);
}

double LambertWOfExp(double t) {
  if (std::isnan(t)) throw Error(ErrorCode::kDomainError, "LambertWOfExp got NaN");
  if (t > kLogFormThreshold) return HalleyLogForm(t);
  return HalleyDirect(std::exp(t));
}

void BoundParams::Validate() const {
  if (!(gamma > 0.0 && gamma < 2.0) || !(beta0 > 0.0) || !(square_norm2 > 0.0) || !(sigma2 >= 0.0)) {
    throw Error(ErrorCode::kDomainError,
                fmt::format("invalid bound parameters gamma={} beta0={} sigma2={} square_norm2={}",
                            gamma, beta0, sigma2, square_norm2));
  }
}

double BetaBound(const BoundParams& p, std::int64_t k) {
  p.Validate();
  const double v0 = p.gamma * p.beta0;
  const double c = 1.0 / v0 - std::log(v0);
  return 1.0 / (p.gamma * LambertWOfExp(0.5 * p.gamma * static_cast<double>(k) + c));
}

double GBound(const BoundParams& p, std::int64_t k) {
  p.Validate();
  if (p.sigma2 == 0.0) return 0.0;
  const double v0 = p.gamma * p.beta0;
  // ln(c * exp(gamma k / 2)) with c = exp(1/v0) / v0.
  const double log_arg = 1.0 / v0 - std::log(v0) + 0.5 * p.gamma * static_cast<double>(k);
  return p.sigma2 / (p.gamma * LambertWOfExp(log_arg));
}

double NoiselessEnvelope(double square_norm2, double gamma, double bregman0, std::int64_t k) {
  return square_norm2 * std::exp(-0.5 * gamma * static_cast<double>(k)) * bregman0;
}

double CrudeVBound(double gamma, double v0, std::int64_t k) {
  return 1.0 / (1.0 / v0 + gamma * static_cast<double>(k) / (2.0 * (v0 + 1.0)));
}

}  // namespace abk
