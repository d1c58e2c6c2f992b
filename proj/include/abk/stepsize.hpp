#pragma once

#include <optional>

namespace abk {

// Stepsize schedule for the block Bregman-Kaczmarz iteration.
//
// Constant(eta) returns the same eta forever. Adaptive(gamma, beta0) tracks
// the normalized error proxy beta_k and emits
//
//   eta_k = gamma * beta_k / (gamma * beta_k + 1),
//   beta_{k+1} = beta_k * (1 - gamma * eta_k / 2),
//
// which minimizes the one-step expected descent bound. The schedule is an
// a-priori sequence and never looks at iterates.
class StepsizeSchedule {
 public:
  enum class Kind { kConstant, kAdaptive };

  // eta must lie in (0, 2).
  static StepsizeSchedule Constant(double eta);
  // gamma in (0, 2), beta0 > 0.
  static StepsizeSchedule Adaptive(double gamma, double beta0);

  Kind kind() const { return kind_; }
  bool adaptive() const { return kind_ == Kind::kAdaptive; }
  double gamma() const { return gamma_; }
  double beta0() const { return beta0_; }
  // Current beta_k; only meaningful for adaptive schedules.
  double beta() const { return beta_; }
  std::optional<double> beta_if_adaptive() const {
    return adaptive() ? std::optional<double>(beta_) : std::nullopt;
  }

  double NextEta() const;
  // Returns the eta consumed by this iteration and moves beta forward.
  double Advance();

 private:
  StepsizeSchedule() = default;

  Kind kind_ = Kind::kConstant;
  double eta_ = 1.0;
  double gamma_ = 0.0;
  double beta0_ = 0.0;
  double beta_ = 0.0;
};

}  // namespace abk
