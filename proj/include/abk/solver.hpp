#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "abk/blocked_matrix.hpp"
#include "abk/noise.hpp"
#include "abk/objective.hpp"
#include "abk/stepsize.hpp"
#include "abk/types.hpp"

namespace abk {

// Dual iterate x*_k and primal iterate x_k = S(x*_k).
struct SolverState {
  Vector xstar;
  Vector x;
  std::int64_t k = 0;
};

SolverState InitState(const Vector& xstar0, const SparseObjective& objective);

// What a single iteration consumed; lets tests replay the descent inequality.
struct StepInfo {
  std::size_t block = 0;
  double eta = 0.0;
  Vector noise;
};

// One iteration: sample i ~ p, query b_i + eps, take
//   x* <- x* - eta * A_i^T (A_i x - b~_i) / |A_i|^2,  x <- S(x*).
StepInfo Step(SolverState& state, const BlockedMatrix& matrix, const NoisyRhs& rhs,
              StepsizeSchedule& schedule, const SparseObjective& objective, Rng& rng);

// Pathwise descent inequality for one step, measured against a solution
// xhat of the clean system (A xhat = b):
//
//   D_{k+1} <= D_k - eta(2-eta)/2 |r|^2/|A_i|^2 + eta^2/2 |eps|^2/|A_i|^2
//              + eta(1-eta) <eps, r>/|A_i|^2,   r = A_i x_k - b_i.
struct DescentCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
};

DescentCheck CheckDescent(const SolverState& before, const SolverState& after,
                          const StepInfo& info, const SparseObjective& objective,
                          const BlockedMatrix& matrix, const Vector& clean_rhs,
                          const Vector& xhat, double slack = 1e-8);

struct TraceRow {
  std::int64_t k = 0;
  double eta = 0.0;  // eta consumed by the step that produced x_k; 0 at k = 0
  std::optional<double> beta;
  double rel_residual = 0.0;
  std::optional<double> rel_error;
  std::optional<double> bregman;
};

struct RunRecord {
  std::vector<TraceRow> rows;
  Vector x_final;
  std::int64_t iterations = 0;
  double wall_seconds = 0.0;
};

struct RunOptions {
  std::int64_t max_iters = 1;
  // Record every `stride` iterations plus the final one; 0 means one record
  // per epoch (M iterations).
  std::int64_t stride = 0;
  std::uint64_t seed = 0;
  std::optional<Vector> xstar0;  // defaults to 0
  std::optional<Vector> reference;  // ground truth for error metrics
};

// Runs a fixed iteration budget; the residual is measured against the clean
// right-hand side held by the oracle.
RunRecord Run(const BlockedMatrix& matrix, const NoisyRhs& rhs, StepsizeSchedule schedule,
              const SparseObjective& objective, const RunOptions& options);

}  // namespace abk
