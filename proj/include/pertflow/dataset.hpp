#pragma once

#include <pertflow/types.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace pertflow {

struct SamplePair {
  double x;
  double y;
};

enum class DatasetLabel { Original, Train, Validate, Dithered };

std::string datasetLabelName(DatasetLabel label);

// Ordered, immutable collection of finite (x, y) pairs.
class Dataset {
 public:
  Dataset(std::vector<SamplePair> samples, DatasetLabel label);

  Index size() const { return static_cast<Index>(samples_.size()); }
  const SamplePair& sample(Index i) const { return samples_[static_cast<std::size_t>(i)]; }
  double x(Index i) const { return sample(i).x; }
  double y(Index i) const { return sample(i).y; }
  const std::vector<SamplePair>& samples() const { return samples_; }
  DatasetLabel label() const { return label_; }

  VectorXd xValues() const;
  VectorXd yValues() const;
  Dataset relabeled(DatasetLabel label) const { return Dataset(samples_, label); }

 private:
  std::vector<SamplePair> samples_;
  DatasetLabel label_;
};

// Sample variance / standard deviation, ddof = 1. Throw DataError below 2 elements.
double sampleVariance(const VectorXd& v);
double sampleStd(const VectorXd& v);

// Shortest round-trip decimal form of a double, locale-independent.
std::string formatDouble(double v);

enum class WaterProperty { Density, SpecificHeat, Conductivity };

WaterProperty waterPropertyFromName(const std::string& name);
std::string waterPropertyName(WaterProperty p);    // density / specific_heat / conductivity
std::string waterPropertyDisplay(WaterProperty p); // rho / c_p / k

// The 22 embedded saturated-water rows, 273.15 K .. 373.15 K, in table order.
Dataset loadBuiltinWater(WaterProperty property);

// CSV ingestion: header row, comma separators, '.' decimal point; lines
// starting with '#' are skipped. Errors name the offending line.
Dataset loadCsv(const std::filesystem::path& path, const std::string& x_column,
                const std::string& y_column);

// Full-precision CSV export (shortest round-trip formatting). Optional leading
// '#' comment lines carry run provenance.
void writeCsv(const Dataset& data, const std::filesystem::path& path,
              const std::string& x_column, const std::string& y_column,
              const std::vector<std::string>& comments = {});

enum class SplitMode { WithoutReplacement, WithReplacement };

std::string splitModeName(SplitMode mode);
SplitMode splitModeFromName(const std::string& name);

struct SplitSpec {
  Index m1 = 18;
  Index m2 = 6;
  SplitMode mode = SplitMode::WithoutReplacement;
  std::uint64_t seed = 1;
};

struct SplitResult {
  Dataset train;
  Dataset validate;
  std::vector<Index> train_indices;
  std::vector<Index> validate_indices;
};

// Deterministic split of `data` into (train of size m1, validate of size m2).
// without_replacement: train rows drawn without replacement, then validation
// rows drawn with replacement from the complement (the default sizes are
// over-complete: 18 + 6 > 22). with_replacement: both bootstrapped from data.
// One Rng(seed) is consumed in that order.
SplitResult split(const Dataset& data, const SplitSpec& spec);

enum class NoiseScale { VarianceFraction, StdFraction };

std::string noiseScaleName(NoiseScale s);
NoiseScale noiseScaleFromName(const std::string& name);

struct NoiseSpec {
  double level = 0.01;
  std::uint64_t seed = 2;
  // VarianceFraction: sigma^2 = level * Var(y); StdFraction: sigma = level * Std(y).
  NoiseScale scale = NoiseScale::VarianceFraction;
};

// Dithered copy of train: x kept, y_i + sigma * g_i with i.i.d. standard
// normals in row order. level = 0 returns y bitwise-identical.
Dataset dither(const Dataset& train, const NoiseSpec& noise);

// Noise standard deviation the NoiseSpec implies on this dataset.
double ditherSigma(const Dataset& train, const NoiseSpec& noise);

}  // namespace pertflow
