#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "abk/bounds.hpp"
#include "abk/error.hpp"
#include "abk/harness.hpp"
#include "abk/heuristics.hpp"
#include "abk/matrix_market.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace abk;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitDegenerate = 3;

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::size_t> workers;
  std::optional<std::int64_t> stride;
};

void AddCommon(CLI::App* cmd, CommonFlags& f, bool need_config) {
  auto* opt = cmd->add_option("--config", f.config, "experiment config (JSON)");
  if (need_config) opt->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", f.seed, "base seed");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--workers", f.workers, "worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--stride", f.stride, "record every K iterations (0: per epoch)")->check(CLI::NonNegativeNumber);
}

harness::ExperimentConfig Load(const CommonFlags& f) {
  harness::ExperimentConfig cfg = harness::LoadConfig(f.config);
  if (f.seed) cfg.seed = *f.seed;
  if (f.out) cfg.output_dir = *f.out;
  if (f.workers) cfg.workers = *f.workers;
  if (f.stride) cfg.record_stride = *f.stride;
  return cfg;
}

void PrintSummary(const harness::ExperimentResult& r) {
  for (const auto& m : r.summary["methods"]) {
    std::string line = fmt::format("{:<12}", m["name"].get<std::string>());
    if (!m["gamma"].is_null()) line += fmt::format(" gamma={:.6g}", m["gamma"].get<double>());
    if (!m["beta0"].is_null()) line += fmt::format(" beta0={:.6g}", m["beta0"].get<double>());
    if (m.contains("final_rel_error_mean") && !m["final_rel_error_mean"].is_null()) {
      line += fmt::format(" rel_error={:.6g}", m["final_rel_error_mean"].get<double>());
    }
    line += fmt::format(" rel_residual={:.6g}", m["final_rel_residual_mean"].get<double>());
    std::cout << line << '\n';
  }
}

int Generate(const CommonFlags& f) {
  const harness::ExperimentConfig cfg = Load(f);
  const harness::Problem p = harness::BuildProblem(cfg.problem, cfg.seed);
  const fs::path dir = f.out ? fs::path(*f.out) : cfg.output_dir;
  fs::create_directories(dir);
  mm::WriteFile(dir / "A.mtx", p.matrix.data());
  mm::WriteVectorFile(dir / "b.mtx", p.b_clean);
  json problem{{"type", "files"},
               {"matrix", (dir / "A.mtx").string()},
               {"rhs", (dir / "b.mtx").string()},
               {"block_sizes", p.matrix.block_sizes()},
               {"sigma", p.noise.total_sigma()}};
  if (p.xhat) {
    mm::WriteVectorFile(dir / "xhat.mtx", *p.xhat);
    problem["xhat"] = (dir / "xhat.mtx").string();
  }
  std::ofstream(dir / "problem.json") << problem.dump(2) << '\n';
  std::cout << fmt::format("wrote {}x{} system with {} blocks to {}\n", p.matrix.rows(), p.matrix.cols(),
                           p.matrix.num_blocks(), dir.string());
  return 0;
}

int Solve(const CommonFlags& f, const std::string& method) {
  harness::ExperimentConfig cfg = Load(f);
  if (!method.empty()) {
    std::erase_if(cfg.methods, [&](const harness::MethodConfig& m) { return m.name != method; });
    if (cfg.methods.empty()) throw Error(ErrorCode::kInvalidConfig, fmt::format("no method named '{}'", method));
  } else {
    cfg.methods.resize(1);
  }
  PrintSummary(harness::RunExperiment(cfg));
  return 0;
}

int Experiment(const CommonFlags& f) {
  PrintSummary(harness::RunExperiment(Load(f)));
  return 0;
}

int Estimate(const std::string& pilot, std::size_t n0, std::size_t n1) {
  const PilotTrace trace = ReadPilotCsvFile(pilot);
  if (n0 == 0) n0 = trace.size() / 10;
  if (n1 == 0) n1 = trace.size() / 10;
  const GammaEstimate g = EstimateGamma(trace, n0);
  const double beta0 = EstimateBeta0(trace, g.gamma, n1);
  json out{{"N", trace.size()}, {"N0", n0}, {"N1", n1}, {"gamma", g.gamma}, {"gamma_raw", g.raw},
           {"clamped", g.clamped}, {"skipped_ratios", g.skipped_ratios}, {"beta0", beta0}};
  std::cout << out.dump(2) << '\n';
  return 0;
}

int Bound(const BoundParams& p, std::int64_t iters, std::int64_t stride, const std::optional<std::string>& out) {
  p.Validate();
  if (iters < 0) throw Error(ErrorCode::kInvalidConfig, "--iters must be >= 0");
  if (stride <= 0) stride = 1;
  std::ofstream file;
  if (out) {
    fs::create_directories(*out);
    file.open(fs::path(*out) / "bound.csv");
  }
  std::ostream& os = out ? static_cast<std::ostream&>(file) : std::cout;
  os << "k,beta_bound,g_bound,error_sq_bound\n";
  for (std::int64_t k = 0; k <= iters; k += stride) {
    const double g = GBound(p, k);
    os << fmt::format("{},{:.12g},{:.12g},{:.12g}\n", k, BetaBound(p, k), g, 2.0 * g / p.square_norm2);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  harness::InitLogging();
  CLI::App app{"Block Bregman-Kaczmarz solver with adaptive stepsizes"};
  app.require_subcommand(1);

  CommonFlags gen_flags, solve_flags, exp_flags;
  auto* gen = app.add_subcommand("generate", "write the configured problem as MatrixMarket files");
  AddCommon(gen, gen_flags, true);

  std::string method;
  auto* solve = app.add_subcommand("solve", "run a single method from a config");
  AddCommon(solve, solve_flags, true);
  solve->add_option("--method", method, "method name (default: the first)");

  auto* exp = app.add_subcommand("experiment", "run every method in a config");
  AddCommon(exp, exp_flags, true);

  std::string pilot;
  std::size_t n0 = 0, n1 = 0;
  auto* est = app.add_subcommand("estimate", "estimate gamma and beta0 from a pilot trace CSV");
  est->add_option("--pilot", pilot, "CSV with header j,bregman_to_final")->required()->check(CLI::ExistingFile);
  est->add_option("--N0", n0, "ratios averaged for gamma (default N/10)");
  est->add_option("--N1", n1, "tail length for beta0 (default N/10)");

  BoundParams bp;
  std::int64_t iters = 10000, bstride = 1;
  std::optional<std::string> bout;
  auto* bnd = app.add_subcommand("bound", "emit the beta and g bound curves as CSV");
  bnd->add_option("--gamma", bp.gamma)->required();
  bnd->add_option("--beta0", bp.beta0)->required();
  bnd->add_option("--sigma2", bp.sigma2, "total noise variance")->default_val(1.0);
  bnd->add_option("--square-norm2", bp.square_norm2, "squared block square norm")->default_val(1.0);
  bnd->add_option("--iters", iters)->default_val(10000);
  bnd->add_option("--stride", bstride)->default_val(1);
  bnd->add_option("--out", bout, "directory for bound.csv (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*gen) return Generate(gen_flags);
    if (*solve) return Solve(solve_flags, method);
    if (*exp) return Experiment(exp_flags);
    if (*est) return Estimate(pilot, n0, n1);
    if (*bnd) return Bound(bp, iters, bstride, bout);
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    switch (e.code()) {
      case ErrorCode::kInvalidConfig:
      case ErrorCode::kDomainError:
      case ErrorCode::kIoError:
        return kExitConfig;
      case ErrorCode::kDegenerateTrace:
        return kExitDegenerate;
      default:
        return 1;
    }
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
