#include <pertflow/runconfig.hpp>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace pertflow {

std::string dataSourceName(DataSource s) {
  return s == DataSource::BuiltinWater ? "builtin_water" : "csv";
}

DataSource dataSourceFromName(const std::string& name) {
  if (name == "builtin_water") return DataSource::BuiltinWater;
  if (name == "csv") return DataSource::Csv;
  throw ValidationError("unknown data source '" + name + "' (expected builtin_water or csv)");
}

AlgorithmOptions RunConfig::algorithmOptions() const {
  AlgorithmOptions opt;
  opt.epsilon = epsilon;
  opt.epsilon_max = epsilon_max;
  opt.control = ControlSet<double>{u_min, u_max};
  opt.tie_tol = tie_tol;
  opt.adjoint = adjoint;
  opt.standardize = standardize;
  if (!theta_init.empty()) {
    opt.theta_init.resize(static_cast<Index>(theta_init.size()));
    for (std::size_t i = 0; i < theta_init.size(); ++i)
      opt.theta_init[static_cast<Index>(i)] = theta_init[i];
  }
  return opt;
}

SplitSpec RunConfig::splitSpec() const { return SplitSpec{m1, m2, split_mode, split_seed}; }

NoiseSpec RunConfig::noiseSpec() const { return NoiseSpec{noise_level, noise_seed, noise_scale}; }

TimeGrid<double> RunConfig::timeGrid() const { return TimeGrid<double>(final_time, n_steps); }

void validateConfig(const RunConfig& cfg) {
  std::vector<std::string> errs;
  const auto bad = [&errs](const std::string& msg) { errs.push_back(msg); };

  if (cfg.source == DataSource::Csv && cfg.csv_path.empty())
    bad("csv_path: required when source is csv");
  if (cfg.source == DataSource::Csv) {
    if (cfg.x_column.empty()) bad("x_column: must be non-empty");
    if (cfg.y_column.empty()) bad("y_column: must be non-empty");
  }
  if (cfg.degree < 0) bad("degree: must be non-negative");
  if (cfg.m1 < 1) bad("m1: must be positive");
  if (cfg.m2 < 1) bad("m2: must be positive");
  if (!(cfg.noise_level >= 0) || !std::isfinite(cfg.noise_level))
    bad("noise_level: must be a finite non-negative real");
  if (!(cfg.epsilon_max > 0) || !std::isfinite(cfg.epsilon_max))
    bad("epsilon_max: must be positive");
  if (!(cfg.epsilon >= 0) || !std::isfinite(cfg.epsilon) || cfg.epsilon >= cfg.epsilon_max) {
    std::ostringstream os;
    os << "epsilon: " << cfg.epsilon << " out of range, must satisfy 0 <= epsilon < epsilon_max = "
       << cfg.epsilon_max << " (epsilon = 0 is allowed only as the degenerate testing case)";
    bad(os.str());
  }
  if (!(cfg.final_time > 0) || !std::isfinite(cfg.final_time))
    bad("final_time: must be positive and finite");
  if (cfg.n_steps < 1) bad("n_steps: must be at least 1");
  if (!(cfg.u_min <= cfg.u_max)) bad("u_min/u_max: need u_min <= u_max");
  if (!(cfg.tie_tol >= 0)) bad("tie_tol: must be non-negative");
  if (!cfg.theta_init.empty() &&
      cfg.theta_init.size() != static_cast<std::size_t>(cfg.degree) + 1)
    bad("theta_init: has " + std::to_string(cfg.theta_init.size()) + " entries, degree " +
        std::to_string(cfg.degree) + " needs " + std::to_string(cfg.degree + 1));

  if (!errs.empty()) {
    std::string msg = "invalid config:";
    for (const auto& e : errs) msg += "\n  - " + e;
    throw ValidationError(msg);
  }
}

nlohmann::json configToJson(const RunConfig& cfg) {
  nlohmann::json j;
  j["source"] = dataSourceName(cfg.source);
  j["property"] = waterPropertyName(cfg.property);
  j["csv_path"] = cfg.csv_path;
  j["x_column"] = cfg.x_column;
  j["y_column"] = cfg.y_column;
  j["degree"] = cfg.degree;
  j["m1"] = cfg.m1;
  j["m2"] = cfg.m2;
  j["split_mode"] = splitModeName(cfg.split_mode);
  j["split_seed"] = cfg.split_seed;
  j["noise_level"] = cfg.noise_level;
  j["noise_seed"] = cfg.noise_seed;
  j["noise_scale"] = noiseScaleName(cfg.noise_scale);
  j["epsilon"] = cfg.epsilon;
  j["epsilon_max"] = cfg.epsilon_max;
  j["final_time"] = cfg.final_time;
  j["n_steps"] = cfg.n_steps;
  j["u_min"] = cfg.u_min;
  j["u_max"] = cfg.u_max;
  j["tie_tol"] = cfg.tie_tol;
  j["theta_init"] = cfg.theta_init;
  j["standardize"] = cfg.standardize;
  j["adjoint"] = adjointFormName(cfg.adjoint);
  return j;
}

RunConfig configFromJson(const nlohmann::json& root) {
  const nlohmann::json& j =
      (root.is_object() && root.contains("config")) ? root.at("config") : root;
  if (!j.is_object()) throw ValidationError("config JSON must be an object");

  static const std::set<std::string> known = {
      "source", "property", "csv_path", "x_column", "y_column", "degree", "m1", "m2",
      "split_mode", "split_seed", "noise_level", "noise_seed", "noise_scale", "epsilon",
      "epsilon_max", "final_time", "n_steps", "u_min", "u_max", "tie_tol", "theta_init",
      "standardize", "adjoint", "output_dir"};
  for (const auto& [key, _] : j.items())
    if (!known.count(key)) throw ValidationError("unknown config field '" + key + "'");

  RunConfig cfg;
  const auto get = [&j](const char* key, auto& dst) {
    if (j.contains(key)) j.at(key).get_to(dst);
  };
  std::string s;
  if (j.contains("source")) { j.at("source").get_to(s); cfg.source = dataSourceFromName(s); }
  if (j.contains("property")) { j.at("property").get_to(s); cfg.property = waterPropertyFromName(s); }
  get("csv_path", cfg.csv_path);
  get("x_column", cfg.x_column);
  get("y_column", cfg.y_column);
  get("degree", cfg.degree);
  get("m1", cfg.m1);
  get("m2", cfg.m2);
  if (j.contains("split_mode")) { j.at("split_mode").get_to(s); cfg.split_mode = splitModeFromName(s); }
  get("split_seed", cfg.split_seed);
  get("noise_level", cfg.noise_level);
  get("noise_seed", cfg.noise_seed);
  if (j.contains("noise_scale")) { j.at("noise_scale").get_to(s); cfg.noise_scale = noiseScaleFromName(s); }
  get("epsilon", cfg.epsilon);
  get("epsilon_max", cfg.epsilon_max);
  get("final_time", cfg.final_time);
  get("n_steps", cfg.n_steps);
  get("u_min", cfg.u_min);
  get("u_max", cfg.u_max);
  get("tie_tol", cfg.tie_tol);
  get("theta_init", cfg.theta_init);
  get("standardize", cfg.standardize);
  if (j.contains("adjoint")) { j.at("adjoint").get_to(s); cfg.adjoint = adjointFormFromName(s); }
  get("output_dir", cfg.output_dir);
  return cfg;
}

RunConfig loadConfigFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("config file '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return configFromJson(j);
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string configHash(const RunConfig& cfg) {
  const std::string canon = configToJson(cfg).dump();
  std::ostringstream os;
  os << "fnv1a64:" << std::hex << fnv1a64(canon);
  return os.str();
}

}  // namespace pertflow
