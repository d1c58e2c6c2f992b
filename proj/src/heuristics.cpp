#include "abk/heuristics.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <string>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "abk/error.hpp"
#include "abk/solver.hpp"

namespace abk {
namespace {

constexpr double kGammaFloor = 1e-8;
constexpr double kGammaCeiling = 2.0 - 1e-8;

}  // namespace

PilotTrace CollectPilot(const BlockedMatrix& matrix, const NoisyRhs& rhs,
                        const SparseObjective& objective, std::int64_t iterations,
                        std::uint64_t seed) {
  if (iterations < 2) throw Error(ErrorCode::kInvalidConfig, "pilot needs at least 2 iterations");
  const Vector zero = Vector::Zero(static_cast<Eigen::Index>(matrix.cols()));

  auto schedule = StepsizeSchedule::Constant(1.0);
  Rng rng(seed);
  SolverState state = InitState(zero, objective);
  for (std::int64_t it = 0; it < iterations; ++it) Step(state, matrix, rhs, schedule, objective, rng);

  PilotTrace trace;
  trace.x_final = state.x;
  trace.bregman_to_final.reserve(static_cast<std::size_t>(iterations));

  rng.seed(seed);
  state = InitState(zero, objective);
  for (std::int64_t it = 0; it < iterations; ++it) {
    trace.bregman_to_final.push_back(objective.BregmanDistance(state.xstar, trace.x_final));
    Step(state, matrix, rhs, schedule, objective, rng);
  }
  return trace;
}

GammaEstimate EstimateGamma(const PilotTrace& trace, std::size_t n0) {
  const auto& d = trace.bregman_to_final;
  if (n0 < 1 || n0 >= d.size()) {
    throw Error(ErrorCode::kInvalidConfig,
                fmt::format("N0 = {} must satisfy 1 <= N0 < N = {}", n0, d.size()));
  }
  GammaEstimate est;
  double sum = 0.0;
  for (std::size_t j = 1; j <= n0; ++j) {
    if (d[j - 1] > 0.0) {
      sum += d[j] / d[j - 1];
      ++est.valid_ratios;
    } else {
      ++est.skipped_ratios;
    }
  }
  if (2 * est.valid_ratios < n0 || est.valid_ratios == 0) {
    throw Error(ErrorCode::kDegenerateTrace,
                fmt::format("only {} of {} ratios have a positive denominator", est.valid_ratios,
                            n0));
  }
  if (est.skipped_ratios > 0) {
    spdlog::warn("gamma estimate skipped {} zero-denominator ratios", est.skipped_ratios);
  }
  est.raw = 2.0 * (1.0 - sum / static_cast<double>(est.valid_ratios));
  est.gamma = std::clamp(est.raw, kGammaFloor, kGammaCeiling);
  est.clamped = est.gamma != est.raw;
  if (est.clamped) {
    spdlog::warn("gamma estimate {:.6g} outside (0, 2); clamped to {:.6g}", est.raw, est.gamma);
  }
  return est;
}

double EstimateBeta0(const PilotTrace& trace, double gamma_tilde, std::size_t n1) {
  const auto& d = trace.bregman_to_final;
  const std::size_t n = d.size();
  if (n1 < 1 || n1 >= n) {
    throw Error(ErrorCode::kInvalidConfig,
                fmt::format("N1 = {} must satisfy 1 <= N1 < N = {}", n1, n));
  }
  if (!(d[0] > 0.0)) throw Error(ErrorCode::kDegenerateTrace, "D_0 is zero");
  double tail = 0.0;
  for (std::size_t j = n - n1; j < n; ++j) tail += d[j] / d[0];
  const double denom = gamma_tilde / static_cast<double>(n1) * tail;
  if (!(denom > 0.0)) {
    throw Error(ErrorCode::kDegenerateTrace, "tail average of the pilot trace is zero");
  }
  return 1.0 / denom;
}

void WritePilotCsv(std::ostream& out, const PilotTrace& trace) {
  out << "j,bregman_to_final\n";
  for (std::size_t j = 0; j < trace.size(); ++j) {
    out << fmt::format("{},{:.17g}\n", j, trace.bregman_to_final[j]);
  }
}

PilotTrace ReadPilotCsv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("j,bregman_to_final", 0) != 0) {
    throw Error(ErrorCode::kIoError, "pilot CSV must start with header 'j,bregman_to_final'");
  }
  PilotTrace trace;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw Error(ErrorCode::kIoError, fmt::format("pilot CSV line {}: missing comma", line_no));
    }
    try {
      const auto j = std::stoull(line.substr(0, comma));
      if (j != trace.bregman_to_final.size()) {
        throw Error(ErrorCode::kIoError,
                    fmt::format("pilot CSV line {}: expected j = {}, got {}", line_no,
                                trace.bregman_to_final.size(), j));
      }
      const double value = std::stod(line.substr(comma + 1));
      if (!(value >= 0.0)) {
        throw Error(ErrorCode::kIoError,
                    fmt::format("pilot CSV line {}: negative distance {}", line_no, value));
      }
      trace.bregman_to_final.push_back(value);
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::kIoError, fmt::format("pilot CSV line {}: not a number", line_no));
    }
  }
  return trace;
}

PilotTrace ReadPilotCsvFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, fmt::format("cannot open '{}'", path.string()));
  return ReadPilotCsv(in);
}

}  // namespace abk
