#pragma once

#include <cstdint>

namespace abk {

// Principal branch of the Lambert W function on [0, inf): the w >= 0 with
// w * exp(w) = x. Throws kDomainError for x < 0 or NaN.
double LambertW(double x);

// W(exp(t)) evaluated without forming exp(t), so it stays finite for any
// finite t. Solves w + ln(w) = t for large t.
double LambertWOfExp(double t);

struct BoundParams {
  double gamma = 0.1;
  double beta0 = 1.0;
  double sigma2 = 0.0;
  double square_norm2 = 1.0;

  // Throws kDomainError unless gamma is in (0, 2), beta0 and square_norm2 are positive
  // and sigma2 is nonnegative.
  void Validate() const;
};

// Upper bound on the adaptive schedule's beta_k:
//   1 / (gamma * W(exp(gamma * k / 2 + c))),  c = 1/(gamma beta0) - ln(gamma beta0).
double BetaBound(const BoundParams& p, std::int64_t k);

// g(k) = sigma^2 / (gamma * W(c * exp(gamma k / 2))), c = exp(1/(gamma beta0)) / (gamma beta0).
// E|x_k - xhat|^2 <= 2 g(k) / |A|_sq^2. Returns 0 for sigma2 = 0.
double GBound(const BoundParams& p, std::int64_t k);

// Noiseless limit of g: |A|_sq^2 * exp(-gamma k / 2) * D0.
double NoiselessEnvelope(double square_norm2, double gamma, double bregman0, std::int64_t k);

// Elementary bound on v_k = gamma * beta_k:
//   (1/v0 + gamma k / (2 (v0 + 1)))^{-1}.
double CrudeVBound(double gamma, double v0, std::int64_t k);

}  // namespace abk
