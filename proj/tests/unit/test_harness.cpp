#include <atomic>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <sstream>
#include <string>

#include "doctest.h"

#include "abk/error.hpp"
#include "abk/harness.hpp"
#include "abk/matrix_market.hpp"

namespace abk::harness {
namespace {

using nlohmann::json;

json BaseConfig() {
  return json::parse(R"({
    "problem": {"type": "gaussian", "m": 40, "n": 80, "s": 5, "blocks": 4, "sigma": 0.5},
    "methods": [
      {"name": "rsk", "lambda": 0.5, "schedule": {"kind": "constant", "eta": 1.0}},
      {"name": "adaptive", "lambda": 0.5, "schedule": {"kind": "adaptive", "gamma": 0.1, "beta0": "exact"}}
    ],
    "epochs": 5, "trials": 2, "seed": 3
  })");
}

std::string ConfigError(const json& doc) {
  try {
    ParseConfig(doc);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kInvalidConfig);
    return e.what();
  }
  return "";
}

std::string Slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::filesystem::path TempDir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("abk_harness_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("config parsing") {
  const ExperimentConfig cfg = ParseConfig(BaseConfig());
  CHECK(cfg.methods.size() == 2);
  CHECK(cfg.epochs == 5);
  CHECK(cfg.trials == 2);
  CHECK(cfg.seed == 3);
  CHECK(cfg.workers == 1);
  CHECK(cfg.methods[1].schedule.kind == ScheduleSpec::Kind::kAdaptive);
  CHECK(*cfg.methods[1].schedule.gamma == 0.1);
  CHECK_FALSE(cfg.methods[1].schedule.beta0.has_value());
  const auto& g = std::get<GaussianProblemConfig>(cfg.problem);
  CHECK(g.spec.m == 40);
  CHECK(g.spec.noise.value == 0.5);
}

TEST_CASE("config errors carry a location") {
  json doc = BaseConfig();
  doc.erase("problem");
  CHECK(ConfigError(doc).find("/problem") != std::string::npos);

  doc = BaseConfig();
  doc["methods"][0]["schedule"]["eta"] = 2.5;
  CHECK(ConfigError(doc).find("/methods/0/schedule/eta") != std::string::npos);

  doc = BaseConfig();
  doc["methods"][1]["name"] = "rsk";
  CHECK(ConfigError(doc).find("/methods/1/name") != std::string::npos);

  doc = BaseConfig();
  doc["methods"][1]["schedule"]["gamma"] = "grid";
  CHECK(ConfigError(doc).find("/methods/1/schedule/gamma") != std::string::npos);

  doc = BaseConfig();
  doc["problem"]["blocks"] = 3;
  CHECK(ConfigError(doc).find("/problem/blocks") != std::string::npos);

  doc = BaseConfig();
  doc["problem"]["type"] = "spiral";
  CHECK(ConfigError(doc).find("/problem/type") != std::string::npos);

  doc = BaseConfig();
  doc["problem"] = json{{"type", "files"}, {"matrix", "a.mtx"}, {"rhs", "b.mtx"}, {"blocks", 2}, {"sigma", 0.1}};
  CHECK(ConfigError(doc).find("/methods/1/schedule/beta0") != std::string::npos);

  doc = BaseConfig();
  doc["methods"][0]["name"] = "bad/name";
  CHECK(ConfigError(doc).find("/methods/0/name") != std::string::npos);

  doc = BaseConfig();
  doc["epochs"] = -1;
  CHECK(ConfigError(doc).find("/epochs") != std::string::npos);

  CHECK_THROWS_AS(LoadConfig("/nonexistent/config.json"), Error);
}

TEST_CASE("exact beta0") {
  const ExperimentConfig cfg = ParseConfig(BaseConfig());
  const Problem p = BuildProblem(cfg.problem, cfg.seed);
  const SparseObjective obj(0.5);
  const double f = 0.5 * p.xhat->lpNorm<1>() + 0.5 * p.xhat->squaredNorm();
  CHECK(ExactBeta0(p, obj) == doctest::Approx(p.matrix.square_norm2() * f / 0.25));

  Problem quiet = p;
  quiet.noise = NoiseModel::Zero(4);
  CHECK_THROWS_AS(ExactBeta0(quiet, obj), Error);
  quiet.noise = p.noise;
  quiet.xhat.reset();
  CHECK_THROWS_AS(ExactBeta0(quiet, obj), Error);
}

TEST_CASE("seeds") {
  CHECK(TrialSeed(10, 0) == 10);
  CHECK(TrialSeed(10, 3) == 13);
  CHECK(PilotSeed(10) != 10);
  CHECK(PilotSeed(10) != PilotSeed(11));
}

TEST_CASE("parallel for") {
  std::atomic<int> sum{0};
  ParallelFor(100, 4, [&](std::size_t i) { sum += static_cast<int>(i); });
  CHECK(sum == 4950);
  CHECK_THROWS_AS(ParallelFor(10, 3,
                              [](std::size_t i) {
                                if (i == 7) throw Error(ErrorCode::kInvalidState, "boom");
                              }),
                  Error);
}

TEST_CASE("files problem") {
  const auto dir = TempDir("files");
  GaussianSpec spec{12, 20, 3, 3, NoiseLevel::Absolute(0.0)};
  const auto g = GaussianProblem(spec, 1);
  mm::WriteFile(dir / "a.mtx", g.matrix.data());
  mm::WriteVectorFile(dir / "b.mtx", g.b_clean);
  mm::WriteVectorFile(dir / "x.mtx", g.xhat);
  FilesProblemConfig f;
  f.matrix = dir / "a.mtx";
  f.rhs = dir / "b.mtx";
  f.xhat = dir / "x.mtx";
  f.block_sizes = {2, 4, 6};
  f.noise = NoiseLevel::Relative(0.1);
  const Problem p = BuildProblem(f, 0);
  CHECK(p.matrix.data() == g.matrix.data());
  CHECK(p.matrix.block_sizes() == std::vector<std::size_t>{2, 4, 6});
  CHECK(p.noise.total_sigma() == doctest::Approx(0.1 * g.b_clean.norm()));
  CHECK(*p.xhat == g.xhat);
  std::filesystem::remove_all(dir);
}

TEST_CASE("experiment output is deterministic") {
  json doc = BaseConfig();
  doc["methods"].push_back(json::parse(R"({"name": "pilot", "lambda": 0.5, "schedule": {"kind": "pilot"}})"));
  doc["export_pilot"] = true;
  const auto dir_a = TempDir("det_a");
  const auto dir_b = TempDir("det_b");
  ExperimentConfig cfg = ParseConfig(doc);
  cfg.output_dir = dir_a;
  RunExperiment(cfg);
  cfg.output_dir = dir_b;
  cfg.workers = 2;
  RunExperiment(cfg);
  for (const char* name : {"rsk.csv", "adaptive.csv", "adaptive_bounds.csv", "pilot.csv",
                           "pilot_pilot_t0.csv", "pilot_pilot_t1.csv", "summary.json"}) {
    CAPTURE(name);
    REQUIRE(std::filesystem::exists(dir_a / name));
    CHECK(Slurp(dir_a / name) == Slurp(dir_b / name));
  }
  CHECK_FALSE(std::filesystem::exists(dir_a / "rsk_bounds.csv"));
  CHECK_FALSE(std::filesystem::exists(dir_a / "pilot_bounds.csv"));

  std::istringstream csv(Slurp(dir_a / "adaptive.csv"));
  std::string header;
  std::getline(csv, header);
  CHECK(header ==
        "k,epoch,rel_residual_mean,rel_error_mean,eta_mean,beta_mean,rel_residual_t0,rel_residual_t1,"
        "rel_error_t0,rel_error_t1");
  std::size_t lines = 0;
  for (std::string line; std::getline(csv, line);) ++lines;
  CHECK(lines == 6);

  const json summary = json::parse(Slurp(dir_a / "summary.json"));
  CHECK(summary["status"] == "ok");
  CHECK(summary["methods"].size() == 3);
  std::filesystem::remove_all(dir_a);
  std::filesystem::remove_all(dir_b);
}

TEST_CASE("grid search picks the best gamma") {
  json doc = BaseConfig();
  doc["methods"] = json::array();
  doc["methods"].push_back(json::parse(
      R"({"name": "grid", "lambda": 0.5, "schedule": {"kind": "adaptive", "gamma": "grid", "beta0": "exact"}})"));
  doc["gamma_grid"] = {0.0, 0.01, 0.1, 0.5, 2.5};
  const ExperimentConfig cfg = ParseConfig(doc);
  const Problem p = BuildProblem(cfg.problem, cfg.seed);
  const MethodResult r = RunMethod(cfg, p, cfg.methods[0]);
  REQUIRE(r.grid.size() == 5);
  CHECK(r.grid[0].skipped);
  CHECK(r.grid[4].skipped);
  CHECK_FALSE(r.grid[0].reason.empty());
  double best = 1e300;
  double best_gamma = 0.0;
  for (const auto& g : r.grid) {
    if (!g.skipped && g.final_metric < best) {
      best = g.final_metric;
      best_gamma = g.gamma;
    }
  }
  CHECK(*r.chosen_gamma == best_gamma);
  CHECK(r.MeanRelError().back() == doctest::Approx(best));
  for (const auto& t : r.trials) CHECK(*t.gamma == best_gamma);
}

TEST_CASE("pilot stage") {
  SUBCASE("noiseless problem gives a sane estimate") {
    json doc = BaseConfig();
    doc["problem"] = json{{"type", "gaussian"}, {"m", 100}, {"n", 200}, {"s", 5}, {"blocks", 10}, {"sigma", 0.0}};
    doc["methods"] = json::array({json::parse(R"({"name": "p", "lambda": 1.0, "schedule": {"kind": "pilot"}})")});
    doc["epochs"] = 100;
    const ExperimentConfig cfg = ParseConfig(doc);
    const Problem p = BuildProblem(cfg.problem, cfg.seed);
    const TrialResult t = PilotThenAdaptive(cfg, p, cfg.methods[0], 0, true);
    REQUIRE(t.gamma_estimate.has_value());
    CHECK_FALSE(t.gamma_estimate->clamped);
    CHECK(*t.gamma > 0.0);
    CHECK(*t.gamma < 2.0);
    CHECK(*t.beta0 > 0.0);
    CHECK(t.pilot->size() == 1000);
    CHECK(*t.record.rows.back().rel_error < 0.05);
  }
  SUBCASE("all-zero trace is a degenerate trace") {
    FilesProblemConfig f;
    const auto dir = TempDir("pilot_zero");
    Matrix a = Matrix::Identity(4, 4);
    mm::WriteFile(dir / "a.mtx", a);
    mm::WriteVectorFile(dir / "b.mtx", Vector::Zero(4));
    json doc = json::parse(R"({"methods": [{"name": "p", "schedule": {"kind": "pilot"}}], "epochs": 10})");
    doc["problem"] = json{{"type", "files"}, {"matrix", (dir / "a.mtx").string()},
                          {"rhs", (dir / "b.mtx").string()}, {"blocks", 2}, {"sigma", 0.0}};
    doc["output_dir"] = (dir / "out").string();
    const ExperimentConfig cfg = ParseConfig(doc);
    try {
      RunExperiment(cfg);
      FAIL("expected a degenerate trace");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kDegenerateTrace);
      CHECK(std::string(e.what()).find("pilot N=20") != std::string::npos);
    }
    const json summary = json::parse(Slurp(dir / "out" / "summary.json"));
    CHECK(summary["status"] == "failed");
    std::filesystem::remove_all(dir);
  }
}

TEST_CASE("bound overlay dominates the mean squared error") {
  json doc = json::parse(R"({
    "problem": {"type": "gaussian", "m": 2000, "n": 100, "s": 10, "blocks": 200, "sigma": 0.05},
    "methods": [{"name": "arsk", "lambda": 0.05, "schedule": {"kind": "adaptive", "gamma": 0.1, "beta0": "exact"}}],
    "epochs": 50, "trials": 20, "seed": 5
  })");
  const ExperimentConfig cfg = ParseConfig(doc);
  const Problem p = BuildProblem(cfg.problem, cfg.seed);
  const MethodResult r = RunMethod(cfg, p, cfg.methods[0]);
  std::ostringstream out;
  WriteBoundCsv(out, r, p);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "k,beta_bound,g_bound,error_sq_bound,mean_sq_error");
  std::size_t rows = 0, held = 0;
  const double sigma2 = p.noise.total_sigma() * p.noise.total_sigma();
  while (std::getline(in, line)) {
    std::istringstream cells(line);
    std::string k, beta, g, bound, mse;
    std::getline(cells, k, ',');
    std::getline(cells, beta, ',');
    std::getline(cells, g, ',');
    std::getline(cells, bound, ',');
    std::getline(cells, mse, ',');
    CHECK(std::stod(bound) == doctest::Approx(2.0 * sigma2 / p.matrix.square_norm2() * std::stod(beta)).epsilon(1e-9));
    held += std::stod(mse) <= std::stod(bound) ? 1 : 0;
    ++rows;
  }
  CHECK(rows == 51);
  CHECK(static_cast<double>(held) >= 0.9 * static_cast<double>(rows));
}

TEST_CASE("stagnant pilot proceeds with a clamped gamma") {
  // Pure noise: the pilot wanders around 0 and never contracts.
  const auto dir = TempDir("stagnant");
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal;
  Matrix a(20, 10);
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) a(i, j) = normal(rng);
  mm::WriteFile(dir / "a.mtx", a);
  mm::WriteVectorFile(dir / "b.mtx", Vector::Zero(20));
  json doc = json::parse(R"({"methods": [{"name": "p", "schedule": {"kind": "pilot"}}], "epochs": 200})");
  doc["problem"] = json{{"type", "files"}, {"matrix", (dir / "a.mtx").string()},
                        {"rhs", (dir / "b.mtx").string()}, {"blocks", 20}, {"sigma", 1.0}};
  const ExperimentConfig cfg = ParseConfig(doc);
  const Problem p = BuildProblem(cfg.problem, cfg.seed);
  const TrialResult t = PilotThenAdaptive(cfg, p, cfg.methods[0], 0, false);
  REQUIRE(t.gamma_estimate.has_value());
  CHECK(t.gamma_estimate->clamped);
  CHECK(t.gamma_estimate->raw <= 0.0);
  CHECK(*t.gamma > 0.0);
  CHECK(t.record.iterations == 4000);
  std::filesystem::remove_all(dir);
}

}  // namespace abk::harness
