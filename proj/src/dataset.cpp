#include <pertflow/dataset.hpp>

#include <pertflow/rng.hpp>

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

namespace pertflow {

namespace {

constexpr std::array<double, 22> kWaterT = {
    273.15, 273, 280, 285, 290, 295, 300, 305, 310, 315, 320,
    325,    330, 335, 340, 345, 350, 355, 360, 365, 370, 373.15};

constexpr std::array<double, 22> kWaterRho = {
    1000, 1000, 1000, 1000, 999, 998, 997, 995, 993, 991, 989,
    987,  984,  982,  979,  977, 974, 971, 967, 963, 961, 958};

constexpr std::array<double, 22> kWaterCp = {
    4.217, 4.211, 4.198, 4.189, 4.184, 4.181, 4.179, 4.178, 4.178, 4.179, 4.180,
    4.182, 4.184, 4.186, 4.188, 4.191, 4.195, 4.199, 4.203, 4.209, 4.214, 4.217};

constexpr std::array<double, 22> kWaterK = {
    0.569, 0.574, 0.582, 0.590, 0.598, 0.606, 0.613, 0.620, 0.628, 0.634, 0.640,
    0.645, 0.650, 0.656, 0.660, 0.664, 0.668, 0.671, 0.674, 0.677, 0.679, 0.680};

double parseCell(const std::string& cell, std::size_t line_no, const std::string& column) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  while (first != last && (*first == ' ' || *first == '\t')) ++first;
  while (last != first && (*(last - 1) == ' ' || *(last - 1) == '\t')) --last;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last)
    throw DataError("line " + std::to_string(line_no) + ": cell '" + cell +
                    "' in column '" + column + "' is not numeric");
  if (!std::isfinite(v))
    throw DataError("line " + std::to_string(line_no) + ": cell '" + cell +
                    "' in column '" + column + "' is not finite");
  return v;
}

std::vector<std::string> splitCommas(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::string trimmed(std::string s) {
  const auto notspace = [](char c) { return c != ' ' && c != '\t' && c != '\r'; };
  while (!s.empty() && !notspace(s.back())) s.pop_back();
  std::size_t i = 0;
  while (i < s.size() && !notspace(s[i])) ++i;
  return s.substr(i);
}

}  // namespace

std::string datasetLabelName(DatasetLabel label) {
  switch (label) {
    case DatasetLabel::Original: return "original";
    case DatasetLabel::Train: return "train";
    case DatasetLabel::Validate: return "validate";
    case DatasetLabel::Dithered: return "dithered";
  }
  throw ValidationError("unknown dataset label");
}

Dataset::Dataset(std::vector<SamplePair> samples, DatasetLabel label)
    : samples_(std::move(samples)), label_(label) {
  if (samples_.empty()) throw DataError("dataset must be non-empty");
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    if (!std::isfinite(samples_[i].x) || !std::isfinite(samples_[i].y))
      throw DataError("dataset sample " + std::to_string(i) + " is not finite");
  }
}

VectorXd Dataset::xValues() const {
  VectorXd v(size());
  for (Index i = 0; i < size(); ++i) v[i] = x(i);
  return v;
}

VectorXd Dataset::yValues() const {
  VectorXd v(size());
  for (Index i = 0; i < size(); ++i) v[i] = y(i);
  return v;
}

std::string formatDouble(double v) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc{}) throw NumericalError("formatDouble: to_chars failed");
  return std::string(buf.data(), end);
}

double sampleVariance(const VectorXd& v) {
  if (v.size() < 2) throw DataError("sampleVariance needs at least 2 values");
  const double mean = v.mean();
  return (v.array() - mean).square().sum() / static_cast<double>(v.size() - 1);
}

double sampleStd(const VectorXd& v) { return std::sqrt(sampleVariance(v)); }

WaterProperty waterPropertyFromName(const std::string& name) {
  if (name == "density") return WaterProperty::Density;
  if (name == "specific_heat") return WaterProperty::SpecificHeat;
  if (name == "conductivity") return WaterProperty::Conductivity;
  throw ValidationError("unknown water property '" + name +
                        "' (expected density, specific_heat, or conductivity)");
}

std::string waterPropertyName(WaterProperty p) {
  switch (p) {
    case WaterProperty::Density: return "density";
    case WaterProperty::SpecificHeat: return "specific_heat";
    case WaterProperty::Conductivity: return "conductivity";
  }
  throw ValidationError("unknown water property");
}

std::string waterPropertyDisplay(WaterProperty p) {
  switch (p) {
    case WaterProperty::Density: return "rho";
    case WaterProperty::SpecificHeat: return "c_p";
    case WaterProperty::Conductivity: return "k";
  }
  throw ValidationError("unknown water property");
}

Dataset loadBuiltinWater(WaterProperty property) {
  const std::array<double, 22>* col = nullptr;
  switch (property) {
    case WaterProperty::Density: col = &kWaterRho; break;
    case WaterProperty::SpecificHeat: col = &kWaterCp; break;
    case WaterProperty::Conductivity: col = &kWaterK; break;
  }
  std::vector<SamplePair> rows;
  rows.reserve(kWaterT.size());
  for (std::size_t i = 0; i < kWaterT.size(); ++i) rows.push_back({kWaterT[i], (*col)[i]});
  return Dataset(std::move(rows), DatasetLabel::Original);
}

Dataset loadCsv(const std::filesystem::path& path, const std::string& x_column,
                const std::string& y_column) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open CSV file '" + path.string() + "'");

  std::string line;
  std::size_t line_no = 0;
  // Header: first non-comment line.
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trimmed(line).empty() && trimmed(line)[0] == '#') continue;
    header = splitCommas(line);
    for (auto& h : header) h = trimmed(h);
    break;
  }
  if (header.empty()) throw DataError("CSV file '" + path.string() + "' has no header row");

  auto findColumn = [&](const std::string& name) -> std::size_t {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    throw DataError("CSV file '" + path.string() + "' has no column '" + name + "'");
  };
  const std::size_t xi = findColumn(x_column);
  const std::size_t yi = findColumn(y_column);

  std::vector<SamplePair> rows;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trimmed(line);
    if (t.empty() || t[0] == '#') continue;
    const auto cells = splitCommas(line);
    if (cells.size() != header.size())
      throw DataError("line " + std::to_string(line_no) + ": expected " +
                      std::to_string(header.size()) + " cells, found " +
                      std::to_string(cells.size()));
    rows.push_back({parseCell(cells[xi], line_no, x_column),
                    parseCell(cells[yi], line_no, y_column)});
  }
  if (rows.empty()) throw DataError("CSV file '" + path.string() + "' has no data rows");
  return Dataset(std::move(rows), DatasetLabel::Original);
}

void writeCsv(const Dataset& data, const std::filesystem::path& path,
              const std::string& x_column, const std::string& y_column,
              const std::vector<std::string>& comments) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  for (const auto& c : comments) out << "# " << c << "\n";
  out << x_column << "," << y_column << "\n";
  for (Index i = 0; i < data.size(); ++i)
    out << formatDouble(data.x(i)) << "," << formatDouble(data.y(i)) << "\n";
  if (!out) throw DataError("write to '" + path.string() + "' failed");
}

std::string splitModeName(SplitMode mode) {
  return mode == SplitMode::WithoutReplacement ? "without_replacement" : "with_replacement";
}

SplitMode splitModeFromName(const std::string& name) {
  if (name == "without_replacement") return SplitMode::WithoutReplacement;
  if (name == "with_replacement") return SplitMode::WithReplacement;
  throw ValidationError("unknown split mode '" + name + "'");
}

SplitResult split(const Dataset& data, const SplitSpec& spec) {
  const Index m0 = data.size();
  if (spec.m1 < 1 || spec.m2 < 1)
    throw ValidationError("split sizes m1 and m2 must be positive");
  if (spec.mode == SplitMode::WithoutReplacement && spec.m1 > m0)
    throw ValidationError("split: m1 = " + std::to_string(spec.m1) +
                          " exceeds dataset size m0 = " + std::to_string(m0) +
                          " in without_replacement mode");

  Rng rng(spec.seed);
  std::vector<Index> train_idx, val_idx;
  if (spec.mode == SplitMode::WithoutReplacement) {
    train_idx = sampleWithoutReplacement(m0, spec.m1, rng);
    std::vector<bool> taken(static_cast<std::size_t>(m0), false);
    for (Index i : train_idx) taken[static_cast<std::size_t>(i)] = true;
    std::vector<Index> complement;
    for (Index i = 0; i < m0; ++i)
      if (!taken[static_cast<std::size_t>(i)]) complement.push_back(i);
    if (complement.empty())
      throw ValidationError("split: without_replacement with m1 = m0 leaves no "
                            "rows for the validation draw");
    for (Index j = 0; j < spec.m2; ++j)
      val_idx.push_back(complement[rng.nextBounded(complement.size())]);
  } else {
    train_idx = sampleWithReplacement(m0, spec.m1, rng);
    val_idx = sampleWithReplacement(m0, spec.m2, rng);
  }

  std::vector<SamplePair> train_rows, val_rows;
  for (Index i : train_idx) train_rows.push_back(data.sample(i));
  for (Index i : val_idx) val_rows.push_back(data.sample(i));
  return SplitResult{Dataset(std::move(train_rows), DatasetLabel::Train),
                     Dataset(std::move(val_rows), DatasetLabel::Validate),
                     std::move(train_idx), std::move(val_idx)};
}

std::string noiseScaleName(NoiseScale s) {
  return s == NoiseScale::VarianceFraction ? "variance" : "std";
}

NoiseScale noiseScaleFromName(const std::string& name) {
  if (name == "variance") return NoiseScale::VarianceFraction;
  if (name == "std") return NoiseScale::StdFraction;
  throw ValidationError("unknown noise scale '" + name + "' (expected variance or std)");
}

double ditherSigma(const Dataset& train, const NoiseSpec& noise) {
  if (noise.level < 0) throw ValidationError("noise level must be non-negative");
  if (noise.level == 0) return 0.0;
  if (noise.scale == NoiseScale::VarianceFraction)
    return std::sqrt(noise.level * sampleVariance(train.yValues()));
  return noise.level * sampleStd(train.yValues());
}

Dataset dither(const Dataset& train, const NoiseSpec& noise) {
  if (noise.level == 0) return train.relabeled(DatasetLabel::Dithered);
  const double sigma = ditherSigma(train, noise);
  Rng rng(noise.seed);
  std::vector<SamplePair> rows;
  rows.reserve(static_cast<std::size_t>(train.size()));
  for (Index i = 0; i < train.size(); ++i)
    rows.push_back({train.x(i), train.y(i) + sigma * rng.nextGaussian()});
  return Dataset(std::move(rows), DatasetLabel::Dithered);
}

}  // namespace pertflow
