#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "abk/heuristics.hpp"
#include "abk/problems.hpp"
#include "abk/solver.hpp"

namespace abk::harness {

struct GaussianProblemConfig {
  GaussianSpec spec;
};

struct TomographyProblemConfig {
  TomographySpec spec;
  std::optional<std::filesystem::path> phantom_pgm;
};

struct FilesProblemConfig {
  std::filesystem::path matrix;
  std::filesystem::path rhs;
  std::vector<std::size_t> block_sizes;  // empty: use num_blocks equal blocks
  std::size_t num_blocks = 1;
  std::optional<std::filesystem::path> xhat;
  NoiseLevel noise;
};

using ProblemConfig = std::variant<GaussianProblemConfig, TomographyProblemConfig, FilesProblemConfig>;

struct ScheduleSpec {
  enum class Kind { kConstant, kAdaptive, kPilot };
  Kind kind = Kind::kConstant;
  double eta = 1.0;
  std::optional<double> gamma;  // adaptive: nullopt means grid search
  std::optional<double> beta0;  // adaptive: nullopt means exact from ground truth
  std::size_t n0 = 0;           // pilot: 0 means N/10
  std::size_t n1 = 0;
};

struct MethodConfig {
  std::string name;
  double lambda = 0.0;
  ScheduleSpec schedule;
};

struct ExperimentConfig {
  ProblemConfig problem;
  std::vector<MethodConfig> methods;
  std::int64_t epochs = 50;
  std::size_t trials = 1;
  std::uint64_t seed = 0;
  std::vector<double> gamma_grid;
  std::int64_t record_stride = 0;  // 0: one record per epoch
  std::size_t workers = 1;
  std::filesystem::path output_dir = "out";
  bool export_pilot = false;
};

// A loaded system: ground truth is optional for file-based problems.
struct Problem {
  BlockedMatrix matrix;
  Vector b_clean;
  NoiseModel noise;
  std::optional<Vector> xhat;

  NoisyRhs Oracle() const { return NoisyRhs(matrix, b_clean, noise); }
};

Problem FromSynthetic(SyntheticProblem p);

// Parse errors are kInvalidConfig with a JSON-pointer location in the
// message.
ExperimentConfig ParseConfig(const nlohmann::json& doc);
ExperimentConfig LoadConfig(const std::filesystem::path& path);
ProblemConfig ParseProblem(const nlohmann::json& doc, const std::string& where = "/problem");
MethodConfig ParseMethod(const nlohmann::json& doc, const std::string& where);

Problem BuildProblem(const ProblemConfig& config, std::uint64_t seed);

// beta0 = |A|_sq^2 * D(x0 = 0, xhat) / sigma^2. Needs ground truth and
// sigma > 0.
double ExactBeta0(const Problem& problem, const SparseObjective& objective);

// Per-trial seeds: base + index. Pilot runs use a disjoint stream derived
// from the trial seed.
std::uint64_t TrialSeed(std::uint64_t base, std::size_t trial);
std::uint64_t PilotSeed(std::uint64_t trial_seed);

struct TrialResult {
  std::uint64_t seed = 0;
  RunRecord record;
  std::optional<double> gamma;
  std::optional<double> beta0;
  std::optional<GammaEstimate> gamma_estimate;
  std::optional<PilotTrace> pilot;  // kept only when exporting
};

struct GridPoint {
  double gamma = 0.0;
  bool skipped = false;
  std::string reason;
  double final_metric = 0.0;  // mean final relative error, or residual without truth
};

struct MethodResult {
  MethodConfig config;
  std::vector<TrialResult> trials;
  std::vector<GridPoint> grid;
  std::optional<double> chosen_gamma;
  std::optional<double> beta0;  // shared beta0 when not estimated per trial

  // Mean over trials of a metric at each recorded index.
  std::vector<double> MeanRelError() const;
  std::vector<double> MeanRelResidual() const;
  std::vector<double> MeanSquaredError(double xhat_norm) const;
};

// Runs fn(0..count-1) on up to `workers` threads; the first exception is
// rethrown after all workers finish.
void ParallelFor(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& fn);

// Runs one method over all trials, including grid search or the pilot stage.
MethodResult RunMethod(const ExperimentConfig& cfg, const Problem& problem, const MethodConfig& method);

// Runs the eta = 1 pilot, estimates gamma~ and beta0~, then runs the
// adaptive schedule with them. Both are reported in the TrialResult.
TrialResult PilotThenAdaptive(const ExperimentConfig& cfg, const Problem& problem,
                              const MethodConfig& method, std::size_t trial, bool keep_pilot);

// CSV layouts (column order is stable):
//   <method>.csv:        k,epoch,rel_residual_mean,rel_error_mean,eta_mean,beta_mean,
//                        rel_residual_t0..,rel_error_t0..
//   <method>_bounds.csv: k,beta_bound,g_bound,error_sq_bound,mean_sq_error
//   <method>_pilot_t<i>.csv: j,bregman_to_final
void WriteMethodCsv(std::ostream& out, const MethodResult& result, const Problem& problem);
void WriteBoundCsv(std::ostream& out, const MethodResult& result, const Problem& problem);
nlohmann::json MethodSummary(const MethodResult& result);

struct ExperimentResult {
  std::vector<MethodResult> methods;
  nlohmann::json summary;
};

// Runs every method and writes CSVs plus summary.json into output_dir. Each
// method's files are flushed as soon as it finishes; on failure the summary
// records the error before rethrowing.
ExperimentResult RunExperiment(const ExperimentConfig& cfg);
ExperimentResult RunExperiment(const ExperimentConfig& cfg, const Problem& problem);

// Reads ABK_LOG (error|warn|info|debug) and sets the spdlog level.
void InitLogging();

}  // namespace abk::harness
