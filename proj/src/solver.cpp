#include "abk/solver.hpp"

#include <chrono>

#include <fmt/format.h>

#include "abk/error.hpp"

namespace abk {

SolverState InitState(const Vector& xstar0, const SparseObjective& objective) {
  SolverState state;
  state.xstar = xstar0;
  state.x = objective.SoftShrinkage(xstar0);
  state.k = 0;
  return state;
}

StepInfo Step(SolverState& state, const BlockedMatrix& matrix, const NoisyRhs& rhs,
              StepsizeSchedule& schedule, const SparseObjective& objective, Rng& rng) {
  StepInfo info;
  info.block = matrix.SampleBlock(rng);
  info.noise = rhs.DrawNoise(info.block, rng);

  const auto block = matrix.block(info.block);
  Vector residual = block * state.x;
  residual -= rhs.clean_block(info.block);
  residual -= info.noise;

  info.eta = schedule.Advance();
  const double norm = matrix.block_spec_norms()[info.block];
  state.xstar.noalias() -= (info.eta / (norm * norm)) * (block.transpose() * residual);
  objective.SoftShrinkageInPlace(state.xstar, state.x);
  ++state.k;
  return info;
}

DescentCheck CheckDescent(const SolverState& before, const SolverState& after,
                          const StepInfo& info, const SparseObjective& objective,
                          const BlockedMatrix& matrix, const Vector& clean_rhs,
                          const Vector& xhat, double slack) {
  const auto offset = static_cast<Eigen::Index>(matrix.offsets()[info.block]);
  const auto rows = static_cast<Eigen::Index>(matrix.block_rows(info.block));
  const Vector clean_residual = matrix.block(info.block) * before.x - clean_rhs.segment(offset, rows);
  const double norm2 = matrix.block_spec_norms()[info.block] * matrix.block_spec_norms()[info.block];
  const double eta = info.eta;

  DescentCheck out;
  out.lhs = objective.BregmanDistance(after.xstar, xhat);
  out.rhs = objective.BregmanDistance(before.xstar, xhat) -
            0.5 * eta * (2.0 - eta) * clean_residual.squaredNorm() / norm2 +
            0.5 * eta * eta * info.noise.squaredNorm() / norm2 +
            eta * (1.0 - eta) * info.noise.dot(clean_residual) / norm2;
  out.holds = out.lhs <= out.rhs + slack;
  return out;
}

namespace {

TraceRow Measure(const SolverState& state, double eta, const StepsizeSchedule& schedule,
                 const BlockedMatrix& matrix, const NoisyRhs& rhs,
                 const SparseObjective& objective, const std::optional<Vector>& reference,
                 double rhs_norm, double ref_norm) {
  TraceRow row;
  row.k = state.k;
  row.eta = eta;
  row.beta = schedule.beta_if_adaptive();
  const double residual = (matrix.data() * state.x - rhs.clean()).norm();
  row.rel_residual = rhs_norm > 0.0 ? residual / rhs_norm : residual;
  if (reference) {
    const double err = (state.x - *reference).norm();
    row.rel_error = ref_norm > 0.0 ? err / ref_norm : err;
    row.bregman = objective.BregmanDistance(state.xstar, *reference);
  }
  return row;
}

}  // namespace

RunRecord Run(const BlockedMatrix& matrix, const NoisyRhs& rhs, StepsizeSchedule schedule,
              const SparseObjective& objective, const RunOptions& options) {
  if (options.max_iters < 1) {
    throw Error(ErrorCode::kInvalidConfig, "max_iters must be >= 1");
  }
  const auto n = static_cast<Eigen::Index>(matrix.cols());
  const Vector xstar0 = options.xstar0.value_or(Vector::Zero(n));
  if (xstar0.size() != n || (options.reference && options.reference->size() != n)) {
    throw Error(ErrorCode::kSizeMismatch, "initial point or reference has the wrong length");
  }
  const std::int64_t stride =
      options.stride > 0 ? options.stride : static_cast<std::int64_t>(matrix.num_blocks());

  const auto start = std::chrono::steady_clock::now();
  Rng rng(options.seed);
  SolverState state = InitState(xstar0, objective);
  const double rhs_norm = rhs.clean().norm();
  const double ref_norm = options.reference ? options.reference->norm() : 0.0;

  RunRecord record;
  record.rows.reserve(static_cast<std::size_t>(options.max_iters / stride + 2));
  record.rows.push_back(Measure(state, 0.0, schedule, matrix, rhs, objective, options.reference,
                                rhs_norm, ref_norm));
  for (std::int64_t it = 1; it <= options.max_iters; ++it) {
    const StepInfo info = Step(state, matrix, rhs, schedule, objective, rng);
    if (it % stride == 0 || it == options.max_iters) {
      record.rows.push_back(Measure(state, info.eta, schedule, matrix, rhs, objective,
                                    options.reference, rhs_norm, ref_norm));
    }
  }
  record.x_final = state.x;
  record.iterations = state.k;
  record.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return record;
}

}  // namespace abk
