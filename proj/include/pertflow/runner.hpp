#pragma once

#include <pertflow/perturb.hpp>
#include <pertflow/runconfig.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace pertflow {

// Datasets materialized from a config: source data, split, dithered copy.
struct PreparedRun {
  Dataset original;
  Dataset train;
  Dataset validate;
  Dataset dithered;
  std::vector<Index> train_indices;
  std::vector<Index> validate_indices;
  double sigma = 0.0;
  std::string model_name;  // table row label: rho / c_p / k, or the y column
};

PreparedRun prepareRun(const RunConfig& cfg);

struct RunArtifacts {
  PerturbationResult result;
  double residual_std = 0.0;  // over the full source dataset, raw coordinates
  std::filesystem::path dir;
  std::filesystem::path manifest_path;
  std::filesystem::path result_path;
  std::filesystem::path trajectory_path;
};

// cmd_run engine: executes the algorithm and writes manifest.json, result.csv
// and trajectory.csv into cfg.output_dir. Deterministic: identical configs
// produce bitwise-identical files.
RunArtifacts runToFiles(const RunConfig& cfg);

struct SweepArtifacts {
  SweepResult sweep;
  // ok / slope_out_of_range / at_numerical_floor
  std::string status;
  std::filesystem::path csv_path;
  std::filesystem::path summary_path;
};

// cmd_sweep engine: per-epsilon residuals plus the fitted slope; slope is
// checked against [1.8, 2.3].
SweepArtifacts sweepToFiles(const RunConfig& cfg, const std::vector<double>& eps_list);

struct LossCurveArtifacts {
  std::filesystem::path curves_path;
  std::filesystem::path markers_path;
};

// cmd_loss_curves engine: per-node train/validation losses of the zeroth-order
// flow plus terminal markers for theta_star, at noise levels 0, 1% and 5%.
// Losses are reported in raw coordinates.
LossCurveArtifacts lossCurvesToFiles(const RunConfig& cfg);

struct TableCell {
  WaterProperty property;
  double level = 0.0;
  std::uint64_t split_seed = 0;
  std::uint64_t noise_seed = 0;
  VectorXd theta_star;
  double residual_std = 0.0;
};

struct TableArtifacts {
  std::vector<TableCell> cells;
  std::filesystem::path txt_path;
  std::filesystem::path csv_path;
};

// cmd_reproduce_tables engine: all three properties at each noise level, one
// run per seed (noise seeds derived per seed via splitmix64). Seeds empty
// means the single seed pair from cfg.
TableArtifacts tablesToFiles(const RunConfig& cfg, const std::vector<std::uint64_t>& seeds,
                             const std::vector<double>& levels = {0.01, 0.05});

// Built-in table export; readable back by loadCsv(path, "T_K", <property name>).
std::filesystem::path exportBuiltin(WaterProperty property, const std::filesystem::path& out_file);

}  // namespace pertflow
