#include "abk/harness.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <thread>

#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "abk/bounds.hpp"
#include "abk/error.hpp"
#include "abk/matrix_market.hpp"

namespace abk::harness {
namespace {

using nlohmann::json;

std::int64_t Iterations(const ExperimentConfig& cfg, const Problem& problem) {
  return cfg.epochs * static_cast<std::int64_t>(problem.matrix.num_blocks());
}

RunOptions MakeRunOptions(const ExperimentConfig& cfg, const Problem& problem, std::uint64_t seed) {
  RunOptions options;
  options.max_iters = Iterations(cfg, problem);
  options.stride = cfg.record_stride;
  options.seed = seed;
  options.reference = problem.xhat;
  return options;
}

double FinalMetric(const std::vector<TrialResult>& trials) {
  double sum = 0.0;
  for (const auto& t : trials) {
    const TraceRow& last = t.record.rows.back();
    sum += last.rel_error.value_or(last.rel_residual);
  }
  return sum / static_cast<double>(trials.size());
}

std::vector<TrialResult> RunTrials(const ExperimentConfig& cfg, const Problem& problem,
                                   const SparseObjective& objective,
                                   const StepsizeSchedule& schedule) {
  const NoisyRhs oracle = problem.Oracle();
  std::vector<TrialResult> trials(cfg.trials);
  ParallelFor(cfg.trials, cfg.workers, [&](std::size_t t) {
    TrialResult& out = trials[t];
    out.seed = TrialSeed(cfg.seed, t);
    out.record = Run(problem.matrix, oracle, schedule, objective, MakeRunOptions(cfg, problem, out.seed));
    if (schedule.adaptive()) {
      out.gamma = schedule.gamma();
      out.beta0 = schedule.beta0();
    }
  });
  return trials;
}

std::string Cell(std::optional<double> v) { return v ? fmt::format("{:.12g}", *v) : std::string(); }

template <typename Get>
std::vector<std::optional<double>> MeanOver(const MethodResult& r, Get get) {
  if (r.trials.empty()) return {};
  const std::size_t rows = r.trials.front().record.rows.size();
  std::vector<std::optional<double>> out(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    double sum = 0.0;
    bool present = true;
    for (const auto& t : r.trials) {
      const std::optional<double> v = get(t.record.rows[i]);
      if (!v) {
        present = false;
        break;
      }
      sum += *v;
    }
    if (present) out[i] = sum / static_cast<double>(r.trials.size());
  }
  return out;
}

std::vector<double> Unwrap(const std::vector<std::optional<double>>& v) {
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& x : v) out.push_back(x.value_or(std::numeric_limits<double>::quiet_NaN()));
  return out;
}

json ScheduleJson(const ScheduleSpec& s) {
  switch (s.kind) {
    case ScheduleSpec::Kind::kConstant: return {{"kind", "constant"}, {"eta", s.eta}};
    case ScheduleSpec::Kind::kAdaptive:
      return {{"kind", "adaptive"},
              {"gamma", s.gamma ? json(*s.gamma) : json("grid")},
              {"beta0", s.beta0 ? json(*s.beta0) : json("exact")}};
    case ScheduleSpec::Kind::kPilot: return {{"kind", "pilot"}, {"N0", s.n0}, {"N1", s.n1}};
  }
  return {};
}

json OptionalJson(std::optional<double> v) { return v ? json(*v) : json(nullptr); }

}  // namespace

Problem FromSynthetic(SyntheticProblem p) {
  return Problem{std::move(p.matrix), std::move(p.b_clean), std::move(p.noise), std::move(p.xhat)};
}

Problem BuildProblem(const ProblemConfig& config, std::uint64_t seed) {
  if (const auto* g = std::get_if<GaussianProblemConfig>(&config)) {
    return FromSynthetic(GaussianProblem(g->spec, seed));
  }
  if (const auto* t = std::get_if<TomographyProblemConfig>(&config)) {
    TomographySpec spec = t->spec;
    if (t->phantom_pgm) {
      GrayImage img = ReadPgm(*t->phantom_pgm);
      if (img.width != spec.n_pix || img.height != spec.n_pix) {
        throw Error(ErrorCode::kInvalidConfig,
                    fmt::format("phantom '{}' is {}x{}, expected {}x{}", t->phantom_pgm->string(),
                                img.width, img.height, spec.n_pix, spec.n_pix));
      }
      spec.phantom = std::move(img.pixels);
    }
    return FromSynthetic(TomographyProblem(spec, seed));
  }
  const auto& f = std::get<FilesProblemConfig>(config);
  Matrix a = mm::ReadFile(f.matrix);
  Vector b = mm::ReadVectorFile(f.rhs);
  std::optional<Vector> xhat;
  if (f.xhat) {
    xhat = mm::ReadVectorFile(*f.xhat);
    if (xhat->size() != a.cols()) {
      throw Error(ErrorCode::kSizeMismatch, fmt::format("xhat has length {}, matrix has {} columns",
                                                        xhat->size(), a.cols()));
    }
  }
  BlockedMatrix matrix = f.block_sizes.empty() ? BlockedMatrix::PartitionEqual(std::move(a), f.num_blocks)
                                               : BlockedMatrix::Partition(std::move(a), f.block_sizes);
  const double sigma = f.noise.Resolve(b.norm());
  NoiseModel noise = NoiseModel::UniformSplit(sigma, matrix.num_blocks());
  return Problem{std::move(matrix), std::move(b), std::move(noise), std::move(xhat)};
}

double ExactBeta0(const Problem& problem, const SparseObjective& objective) {
  if (!problem.xhat) throw Error(ErrorCode::kInvalidConfig, "exact beta0 needs ground truth");
  const double sigma = problem.noise.total_sigma();
  if (!(sigma > 0.0)) {
    throw Error(ErrorCode::kInvalidConfig, "exact beta0 is undefined for a noiseless problem");
  }
  const Vector zero = Vector::Zero(problem.xhat->size());
  const double d0 = objective.BregmanDistance(zero, *problem.xhat);
  return problem.matrix.square_norm2() * d0 / (sigma * sigma);
}

std::uint64_t TrialSeed(std::uint64_t base, std::size_t trial) { return base + trial; }

std::uint64_t PilotSeed(std::uint64_t trial_seed) {
  // splitmix64 finalizer
  std::uint64_t z = trial_seed + 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::vector<double> MethodResult::MeanRelError() const {
  return Unwrap(MeanOver(*this, [](const TraceRow& r) { return r.rel_error; }));
}

std::vector<double> MethodResult::MeanRelResidual() const {
  return Unwrap(MeanOver(*this, [](const TraceRow& r) { return std::optional<double>(r.rel_residual); }));
}

std::vector<double> MethodResult::MeanSquaredError(double xhat_norm) const {
  return Unwrap(MeanOver(*this, [&](const TraceRow& r) -> std::optional<double> {
    if (!r.rel_error) return std::nullopt;
    const double e = *r.rel_error * xhat_norm;
    return e * e;
  }));
}

void ParallelFor(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& fn) {
  workers = std::max<std::size_t>(1, std::min(workers, count));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

TrialResult PilotThenAdaptive(const ExperimentConfig& cfg, const Problem& problem,
                              const MethodConfig& method, std::size_t trial, bool keep_pilot) {
  const SparseObjective objective(method.lambda);
  const NoisyRhs oracle = problem.Oracle();
  const std::int64_t iterations = Iterations(cfg, problem);
  const auto n = static_cast<std::size_t>(iterations);
  const std::size_t n0 = method.schedule.n0 > 0 ? method.schedule.n0 : std::max<std::size_t>(1, n / 10);
  const std::size_t n1 = method.schedule.n1 > 0 ? method.schedule.n1 : std::max<std::size_t>(1, n / 10);

  TrialResult out;
  out.seed = TrialSeed(cfg.seed, trial);
  PilotTrace pilot = CollectPilot(problem.matrix, oracle, objective, iterations, PilotSeed(out.seed));
  double beta0 = 0.0;
  try {
    out.gamma_estimate = EstimateGamma(pilot, n0);
    beta0 = EstimateBeta0(pilot, out.gamma_estimate->gamma, n1);
    if (!std::isfinite(beta0)) throw Error(ErrorCode::kDegenerateTrace, "beta0 estimate is not finite");
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kDegenerateTrace) throw;
    throw Error(ErrorCode::kDegenerateTrace,
                fmt::format("method '{}' trial {}: {} [pilot N={}, N0={}, N1={}, D_0={:.6g}, D_N-1={:.6g}]",
                            method.name, trial, e.what(), pilot.size(), n0, n1,
                            pilot.bregman_to_final.front(), pilot.bregman_to_final.back()));
  }
  out.gamma = out.gamma_estimate->gamma;
  out.beta0 = beta0;
  spdlog::debug("{} trial {}: gamma~ = {:.6g}, beta0~ = {:.6g}", method.name, trial, *out.gamma, beta0);

  const auto schedule = StepsizeSchedule::Adaptive(*out.gamma, beta0);
  out.record = Run(problem.matrix, oracle, schedule, objective, MakeRunOptions(cfg, problem, out.seed));
  if (keep_pilot) out.pilot = std::move(pilot);
  return out;
}

MethodResult RunMethod(const ExperimentConfig& cfg, const Problem& problem, const MethodConfig& method) {
  const SparseObjective objective(method.lambda);
  MethodResult result;
  result.config = method;
  const ScheduleSpec& spec = method.schedule;

  switch (spec.kind) {
    case ScheduleSpec::Kind::kConstant:
      result.trials = RunTrials(cfg, problem, objective, StepsizeSchedule::Constant(spec.eta));
      break;

    case ScheduleSpec::Kind::kAdaptive: {
      const double beta0 = spec.beta0 ? *spec.beta0 : ExactBeta0(problem, objective);
      result.beta0 = beta0;
      if (spec.gamma) {
        result.chosen_gamma = spec.gamma;
        result.trials = RunTrials(cfg, problem, objective, StepsizeSchedule::Adaptive(*spec.gamma, beta0));
        break;
      }
      if (cfg.gamma_grid.empty()) throw Error(ErrorCode::kInvalidConfig, "gamma grid search needs gamma_grid");
      double best = std::numeric_limits<double>::infinity();
      for (double gamma : cfg.gamma_grid) {
        GridPoint point;
        point.gamma = gamma;
        if (!(gamma > 0.0 && gamma < 2.0)) {
          point.skipped = true;
          point.reason = "gamma must be in (0, 2)";
          point.final_metric = std::numeric_limits<double>::quiet_NaN();
          spdlog::info("{}: skipping gamma = {} ({})", method.name, gamma, point.reason);
          result.grid.push_back(point);
          continue;
        }
        auto trials = RunTrials(cfg, problem, objective, StepsizeSchedule::Adaptive(gamma, beta0));
        point.final_metric = FinalMetric(trials);
        spdlog::debug("{}: gamma = {} -> final metric {:.6g}", method.name, gamma, point.final_metric);
        if (point.final_metric < best) {
          best = point.final_metric;
          result.chosen_gamma = gamma;
          result.trials = std::move(trials);
        }
        result.grid.push_back(point);
      }
      if (!result.chosen_gamma) {
        throw Error(ErrorCode::kInvalidConfig, fmt::format("{}: no valid gamma in the grid", method.name));
      }
      break;
    }

    case ScheduleSpec::Kind::kPilot: {
      result.trials.resize(cfg.trials);
      ParallelFor(cfg.trials, cfg.workers, [&](std::size_t t) {
        result.trials[t] = PilotThenAdaptive(cfg, problem, method, t, cfg.export_pilot);
      });
      break;
    }
  }
  return result;
}

void WriteMethodCsv(std::ostream& out, const MethodResult& result, const Problem& problem) {
  const std::size_t trials = result.trials.size();
  out << "k,epoch,rel_residual_mean,rel_error_mean,eta_mean,beta_mean";
  for (std::size_t t = 0; t < trials; ++t) out << ",rel_residual_t" << t;
  for (std::size_t t = 0; t < trials; ++t) out << ",rel_error_t" << t;
  out << '\n';
  if (trials == 0) return;

  const auto residual = MeanOver(result, [](const TraceRow& r) { return std::optional<double>(r.rel_residual); });
  const auto error = MeanOver(result, [](const TraceRow& r) { return r.rel_error; });
  const auto eta = MeanOver(result, [](const TraceRow& r) { return std::optional<double>(r.eta); });
  const auto beta = MeanOver(result, [](const TraceRow& r) { return r.beta; });
  const double blocks = static_cast<double>(problem.matrix.num_blocks());
  const auto& first = result.trials.front().record.rows;
  for (std::size_t i = 0; i < first.size(); ++i) {
    out << first[i].k << ',' << fmt::format("{:.12g}", static_cast<double>(first[i].k) / blocks) << ','
        << Cell(residual[i]) << ',' << Cell(error[i]) << ',' << Cell(eta[i]) << ',' << Cell(beta[i]);
    for (const auto& t : result.trials) out << ',' << Cell(t.record.rows[i].rel_residual);
    for (const auto& t : result.trials) out << ',' << Cell(t.record.rows[i].rel_error);
    out << '\n';
  }
}

void WriteBoundCsv(std::ostream& out, const MethodResult& result, const Problem& problem) {
  out << "k,beta_bound,g_bound,error_sq_bound,mean_sq_error\n";
  if (!result.chosen_gamma || !result.beta0 || result.trials.empty()) return;
  BoundParams params;
  params.gamma = *result.chosen_gamma;
  params.beta0 = *result.beta0;
  params.sigma2 = problem.noise.total_sigma() * problem.noise.total_sigma();
  params.square_norm2 = problem.matrix.square_norm2();
  const auto mse = problem.xhat ? result.MeanSquaredError(problem.xhat->norm()) : std::vector<double>{};
  const auto& rows = result.trials.front().record.rows;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double g = GBound(params, rows[i].k);
    out << rows[i].k << ',' << Cell(BetaBound(params, rows[i].k)) << ',' << Cell(g) << ','
        << Cell(2.0 * g / params.square_norm2) << ','
        << (mse.empty() ? std::string() : Cell(mse[i])) << '\n';
  }
}

json MethodSummary(const MethodResult& result) {
  json j;
  j["name"] = result.config.name;
  j["lambda"] = result.config.lambda;
  j["schedule"] = ScheduleJson(result.config.schedule);
  j["gamma"] = OptionalJson(result.chosen_gamma);
  j["beta0"] = OptionalJson(result.beta0);
  if (!result.grid.empty()) {
    json grid = json::array();
    for (const auto& p : result.grid) {
      json entry{{"gamma", p.gamma}, {"skipped", p.skipped}};
      if (p.skipped) {
        entry["reason"] = p.reason;
      } else {
        entry["final_metric"] = p.final_metric;
      }
      grid.push_back(entry);
    }
    j["grid"] = grid;
  }
  if (!result.trials.empty()) {
    const auto err = result.MeanRelError();
    const auto res = result.MeanRelResidual();
    j["final_rel_error_mean"] = std::isnan(err.back()) ? json(nullptr) : json(err.back());
    j["final_rel_residual_mean"] = res.back();
  }
  json trials = json::array();
  for (const auto& t : result.trials) {
    const TraceRow& last = t.record.rows.back();
    json entry{{"seed", t.seed},
               {"iterations", t.record.iterations},
               {"final_rel_residual", last.rel_residual},
               {"final_rel_error", OptionalJson(last.rel_error)},
               {"gamma", OptionalJson(t.gamma)},
               {"beta0", OptionalJson(t.beta0)}};
    if (t.gamma_estimate) {
      entry["gamma_raw"] = t.gamma_estimate->raw;
      entry["gamma_clamped"] = t.gamma_estimate->clamped;
      entry["gamma_valid_ratios"] = t.gamma_estimate->valid_ratios;
      entry["gamma_skipped_ratios"] = t.gamma_estimate->skipped_ratios;
    }
    trials.push_back(entry);
  }
  j["trials"] = trials;
  return j;
}

ExperimentResult RunExperiment(const ExperimentConfig& cfg) {
  return RunExperiment(cfg, BuildProblem(cfg.problem, cfg.seed));
}

ExperimentResult RunExperiment(const ExperimentConfig& cfg, const Problem& problem) {
  namespace fs = std::filesystem;
  fs::create_directories(cfg.output_dir);
  auto open = [&](const std::string& name) {
    std::ofstream out(cfg.output_dir / name);
    if (!out) throw Error(ErrorCode::kIoError, fmt::format("cannot write '{}'", (cfg.output_dir / name).string()));
    return out;
  };

  ExperimentResult result;
  json& summary = result.summary;
  summary["status"] = "running";
  summary["problem"] = {{"rows", problem.matrix.rows()},
                        {"cols", problem.matrix.cols()},
                        {"blocks", problem.matrix.num_blocks()},
                        {"square_norm2", problem.matrix.square_norm2()},
                        {"sigma", problem.noise.total_sigma()},
                        {"has_truth", problem.xhat.has_value()},
                        {"residual_reference", "clean"}};
  summary["epochs"] = cfg.epochs;
  summary["iterations"] = Iterations(cfg, problem);
  summary["trials"] = cfg.trials;
  summary["seed"] = cfg.seed;
  summary["methods"] = json::array();

  auto write_summary = [&] {
    auto out = open("summary.json");
    out << summary.dump(2) << '\n';
  };

  try {
    for (const MethodConfig& method : cfg.methods) {
      spdlog::info("running {} ({} trials, {} iterations each)", method.name, cfg.trials,
                   Iterations(cfg, problem));
      MethodResult m = RunMethod(cfg, problem, method);
      {
        auto out = open(method.name + ".csv");
        WriteMethodCsv(out, m, problem);
      }
      if (m.chosen_gamma && m.beta0) {
        auto out = open(method.name + "_bounds.csv");
        WriteBoundCsv(out, m, problem);
      }
      if (cfg.export_pilot) {
        for (std::size_t t = 0; t < m.trials.size(); ++t) {
          if (!m.trials[t].pilot) continue;
          auto out = open(fmt::format("{}_pilot_t{}.csv", method.name, t));
          WritePilotCsv(out, *m.trials[t].pilot);
        }
      }
      summary["methods"].push_back(MethodSummary(m));
      write_summary();
      result.methods.push_back(std::move(m));
    }
  } catch (const std::exception& e) {
    summary["status"] = "failed";
    summary["error"] = e.what();
    write_summary();
    throw;
  }
  summary["status"] = "ok";
  write_summary();
  return result;
}

void InitLogging() {
  auto logger = spdlog::get("abk");
  if (!logger) logger = spdlog::stderr_color_mt("abk");
  spdlog::set_default_logger(logger);
  spdlog::level::level_enum level = spdlog::level::warn;
  if (const char* env = std::getenv("ABK_LOG")) {
    const std::string value(env);
    if (value == "error") level = spdlog::level::err;
    else if (value == "warn") level = spdlog::level::warn;
    else if (value == "info") level = spdlog::level::info;
    else if (value == "debug") level = spdlog::level::debug;
  }
  spdlog::set_level(level);
}

}  // namespace abk::harness
