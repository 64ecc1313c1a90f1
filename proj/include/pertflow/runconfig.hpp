#pragma once

#include <pertflow/dataset.hpp>
#include <pertflow/flow.hpp>
#include <pertflow/perturb.hpp>
#include <pertflow/types.hpp>

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace pertflow {

enum class DataSource { BuiltinWater, Csv };

std::string dataSourceName(DataSource s);
DataSource dataSourceFromName(const std::string& name);

// One run, fully pinned: data source, split, noise, flow, control, epsilon.
// output_dir is where files land; it is deliberately excluded from the config
// hash and the manifest echo so that re-running a manifest into a different
// directory reproduces the files bitwise.
struct RunConfig {
  DataSource source = DataSource::BuiltinWater;
  WaterProperty property = WaterProperty::Density;
  std::string csv_path;
  std::string x_column = "x";
  std::string y_column = "y";

  int degree = 2;
  Index m1 = 18;
  Index m2 = 6;
  SplitMode split_mode = SplitMode::WithoutReplacement;
  std::uint64_t split_seed = 1;

  double noise_level = 0.01;
  std::uint64_t noise_seed = 2;
  NoiseScale noise_scale = NoiseScale::VarianceFraction;

  double epsilon = 1e-3;
  double epsilon_max = 0.1;
  double final_time = 50.0;
  Index n_steps = 2000;
  double u_min = -1.0;
  double u_max = 1.0;
  double tie_tol = 1e-12;
  std::vector<double> theta_init;  // raw coordinates; empty = flow-coordinate zeros
  bool standardize = true;
  AdjointForm adjoint = AdjointForm::Corrected;

  std::string output_dir;  // not part of the run identity

  AlgorithmOptions algorithmOptions() const;
  SplitSpec splitSpec() const;
  NoiseSpec noiseSpec() const;
  TimeGrid<double> timeGrid() const;
};

// Field-level validation; throws ValidationError listing every bad field.
void validateConfig(const RunConfig& cfg);

// Canonical JSON echo (sorted keys, shortest round-trip numbers); excludes
// output_dir.
nlohmann::json configToJson(const RunConfig& cfg);

// Accepts either a bare config object or a manifest with a "config" key.
// Unknown fields are rejected.
RunConfig configFromJson(const nlohmann::json& j);
RunConfig loadConfigFile(const std::filesystem::path& path);

// FNV-1a 64 over bytes.
std::uint64_t fnv1a64(std::string_view bytes);

// Hash of the canonical config echo, as "fnv1a64:<hex>".
std::string configHash(const RunConfig& cfg);

}  // namespace pertflow
