#include <fstream>
#include <set>
#include <string>

#include <fmt/format.h>

#include "abk/error.hpp"
#include "abk/harness.hpp"

namespace abk::harness {
namespace {

using nlohmann::json;

[[noreturn]] void Fail(const std::string& where, const std::string& what) {
  throw Error(ErrorCode::kInvalidConfig, fmt::format("at {}: {}", where.empty() ? "/" : where, what));
}

const json& Field(const json& obj, const std::string& key, const std::string& where) {
  if (!obj.is_object()) Fail(where, "expected an object");
  const auto it = obj.find(key);
  if (it == obj.end()) Fail(where + "/" + key, "required field is missing");
  return *it;
}

double Number(const json& v, const std::string& where) {
  if (!v.is_number()) Fail(where, fmt::format("expected a number, got {}", v.dump()));
  return v.get<double>();
}

std::uint64_t Unsigned(const json& v, const std::string& where) {
  if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
    Fail(where, fmt::format("expected a nonnegative integer, got {}", v.dump()));
  }
  return v.get<std::uint64_t>();
}

std::uint64_t Positive(const json& v, const std::string& where) {
  const auto value = Unsigned(v, where);
  if (value == 0) Fail(where, "must be positive");
  return value;
}

std::string String(const json& v, const std::string& where) {
  if (!v.is_string()) Fail(where, fmt::format("expected a string, got {}", v.dump()));
  return v.get<std::string>();
}

template <typename T, typename Get>
T Optional(const json& obj, const std::string& key, const std::string& where, T fallback, Get get) {
  const auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  return get(*it, where + "/" + key);
}

NoiseLevel ParseNoise(const json& obj, const std::string& where, bool allow_missing) {
  const bool has_abs = obj.contains("sigma");
  const bool has_rel = obj.contains("sigma_rel");
  if (has_abs && has_rel) Fail(where, "give either sigma or sigma_rel, not both");
  NoiseLevel level;
  if (has_abs) {
    level = NoiseLevel::Absolute(Number(obj["sigma"], where + "/sigma"));
  } else if (has_rel) {
    level = NoiseLevel::Relative(Number(obj["sigma_rel"], where + "/sigma_rel"));
  } else if (!allow_missing) {
    Fail(where, "one of sigma or sigma_rel is required");
  }
  if (!(level.value >= 0.0)) Fail(where, "noise level must be >= 0");
  return level;
}

}  // namespace

ProblemConfig ParseProblem(const json& doc, const std::string& where) {
  const std::string type = String(Field(doc, "type", where), where + "/type");
  if (type == "gaussian") {
    GaussianProblemConfig cfg;
    cfg.spec.m = Positive(Field(doc, "m", where), where + "/m");
    cfg.spec.n = Positive(Field(doc, "n", where), where + "/n");
    cfg.spec.sparsity = Positive(Field(doc, "s", where), where + "/s");
    cfg.spec.num_blocks = Positive(Field(doc, "blocks", where), where + "/blocks");
    cfg.spec.noise = ParseNoise(doc, where, false);
    if (cfg.spec.sparsity > cfg.spec.n) Fail(where + "/s", "sparsity exceeds n");
    if (cfg.spec.m % cfg.spec.num_blocks != 0) Fail(where + "/blocks", "blocks must divide m");
    return cfg;
  }
  if (type == "tomography") {
    TomographyProblemConfig cfg;
    cfg.spec.n_pix = Positive(Field(doc, "n_pix", where), where + "/n_pix");
    cfg.spec.n_angles = Positive(Field(doc, "n_angles", where), where + "/n_angles");
    cfg.spec.sigma_rel = Optional(doc, "sigma_rel", where, 0.0, Number);
    if (doc.contains("phantom")) cfg.phantom_pgm = String(doc["phantom"], where + "/phantom");
    if (cfg.spec.n_pix < 8) Fail(where + "/n_pix", "must be >= 8");
    if (cfg.spec.n_angles < 2) Fail(where + "/n_angles", "must be >= 2");
    if (!(cfg.spec.sigma_rel >= 0.0)) Fail(where + "/sigma_rel", "must be >= 0");
    return cfg;
  }
  if (type == "files") {
    FilesProblemConfig cfg;
    cfg.matrix = String(Field(doc, "matrix", where), where + "/matrix");
    cfg.rhs = String(Field(doc, "rhs", where), where + "/rhs");
    if (doc.contains("block_sizes")) {
      const json& sizes = doc["block_sizes"];
      if (!sizes.is_array() || sizes.empty()) Fail(where + "/block_sizes", "expected a nonempty array");
      for (std::size_t i = 0; i < sizes.size(); ++i) {
        cfg.block_sizes.push_back(Positive(sizes[i], fmt::format("{}/block_sizes/{}", where, i)));
      }
    } else {
      cfg.num_blocks = Positive(Field(doc, "blocks", where), where + "/blocks");
    }
    if (doc.contains("xhat")) cfg.xhat = String(doc["xhat"], where + "/xhat");
    cfg.noise = ParseNoise(doc, where, true);
    return cfg;
  }
  Fail(where + "/type", fmt::format("unknown problem type '{}' (gaussian|tomography|files)", type));
}

MethodConfig ParseMethod(const json& doc, const std::string& where) {
  MethodConfig method;
  method.name = String(Field(doc, "name", where), where + "/name");
  if (method.name.empty() ||
      method.name.find_first_not_of("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_-.") !=
          std::string::npos) {
    Fail(where + "/name", "method names may only use letters, digits, '_', '-' and '.'");
  }
  method.lambda = Optional(doc, "lambda", where, 0.0, Number);
  if (!(method.lambda >= 0.0)) Fail(where + "/lambda", "must be >= 0");

  const std::string swhere = where + "/schedule";
  const json& sched = Field(doc, "schedule", where);
  const std::string kind = String(Field(sched, "kind", swhere), swhere + "/kind");
  ScheduleSpec& spec = method.schedule;
  if (kind == "constant") {
    spec.kind = ScheduleSpec::Kind::kConstant;
    spec.eta = Optional(sched, "eta", swhere, 1.0, Number);
    if (!(spec.eta > 0.0 && spec.eta < 2.0)) Fail(swhere + "/eta", "must be in (0, 2)");
  } else if (kind == "adaptive") {
    spec.kind = ScheduleSpec::Kind::kAdaptive;
    const json& gamma = Field(sched, "gamma", swhere);
    if (gamma.is_string()) {
      if (gamma.get<std::string>() != "grid") Fail(swhere + "/gamma", "expected a number or \"grid\"");
    } else {
      spec.gamma = Number(gamma, swhere + "/gamma");
      if (!(*spec.gamma > 0.0 && *spec.gamma < 2.0)) Fail(swhere + "/gamma", "must be in (0, 2)");
    }
    const json& beta0 = Field(sched, "beta0", swhere);
    if (beta0.is_string()) {
      if (beta0.get<std::string>() != "exact") Fail(swhere + "/beta0", "expected a number or \"exact\"");
    } else {
      spec.beta0 = Number(beta0, swhere + "/beta0");
      if (!(*spec.beta0 > 0.0)) Fail(swhere + "/beta0", "must be > 0");
    }
  } else if (kind == "pilot") {
    spec.kind = ScheduleSpec::Kind::kPilot;
    spec.n0 = Optional<std::size_t>(sched, "N0", swhere, 0, Positive);
    spec.n1 = Optional<std::size_t>(sched, "N1", swhere, 0, Positive);
  } else {
    Fail(swhere + "/kind", fmt::format("unknown schedule kind '{}' (constant|adaptive|pilot)", kind));
  }
  return method;
}

ExperimentConfig ParseConfig(const json& doc) {
  if (!doc.is_object()) Fail("", "config must be a JSON object");
  ExperimentConfig cfg;
  cfg.problem = ParseProblem(Field(doc, "problem", ""), "/problem");

  const json& methods = Field(doc, "methods", "");
  if (!methods.is_array() || methods.empty()) Fail("/methods", "expected a nonempty array");
  std::set<std::string> names;
  for (std::size_t i = 0; i < methods.size(); ++i) {
    const std::string where = fmt::format("/methods/{}", i);
    cfg.methods.push_back(ParseMethod(methods[i], where));
    if (!names.insert(cfg.methods.back().name).second) Fail(where + "/name", "duplicate method name");
  }

  cfg.epochs = static_cast<std::int64_t>(Optional<std::uint64_t>(doc, "epochs", "", 50, Positive));
  cfg.trials = Optional<std::size_t>(doc, "trials", "", 1, Positive);
  cfg.seed = Optional<std::uint64_t>(doc, "seed", "", 0, Unsigned);
  cfg.record_stride = static_cast<std::int64_t>(Optional<std::uint64_t>(doc, "record_stride", "", 0, Unsigned));
  cfg.workers = Optional<std::size_t>(doc, "workers", "", 1, Positive);
  cfg.output_dir = Optional<std::string>(doc, "output_dir", "", "out", String);
  if (doc.contains("export_pilot")) {
    if (!doc["export_pilot"].is_boolean()) Fail("/export_pilot", "expected a boolean");
    cfg.export_pilot = doc["export_pilot"].get<bool>();
  }
  if (doc.contains("gamma_grid")) {
    const json& grid = doc["gamma_grid"];
    if (!grid.is_array()) Fail("/gamma_grid", "expected an array");
    for (std::size_t i = 0; i < grid.size(); ++i) {
      cfg.gamma_grid.push_back(Number(grid[i], fmt::format("/gamma_grid/{}", i)));
    }
  }

  const bool has_truth = !std::holds_alternative<FilesProblemConfig>(cfg.problem) ||
                         std::get<FilesProblemConfig>(cfg.problem).xhat.has_value();
  for (std::size_t i = 0; i < cfg.methods.size(); ++i) {
    const ScheduleSpec& spec = cfg.methods[i].schedule;
    if (spec.kind != ScheduleSpec::Kind::kAdaptive) continue;
    const std::string where = fmt::format("/methods/{}/schedule", i);
    if (!spec.beta0 && !has_truth) Fail(where + "/beta0", "\"exact\" needs a problem with ground truth");
    if (!spec.gamma && cfg.gamma_grid.empty()) Fail(where + "/gamma", "\"grid\" needs a nonempty gamma_grid");
  }
  return cfg;
}

ExperimentConfig LoadConfig(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kInvalidConfig, fmt::format("cannot open config '{}'", path.string()));
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kInvalidConfig, fmt::format("{}: {}", path.string(), e.what()));
  }
  return ParseConfig(doc);
}

}  // namespace abk::harness
