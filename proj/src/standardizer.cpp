#include <pertflow/standardizer.hpp>

#include <cmath>

namespace pertflow {

Standardizer Standardizer::fit(const Dataset& data) {
  if (data.size() < 2) throw DataError("standardizer needs at least 2 samples");
  const VectorXd xs = data.xValues();
  const VectorXd ys = data.yValues();
  Standardizer s;
  s.mean_x = xs.mean();
  s.std_x = sampleStd(xs);
  s.mean_y = ys.mean();
  s.std_y = sampleStd(ys);
  if (s.std_x == 0.0) throw DataError("standardizer: x values have zero variance");
  if (s.std_y == 0.0) throw DataError("standardizer: y values have zero variance");
  return s;
}

Dataset Standardizer::transform(const Dataset& data) const {
  std::vector<SamplePair> rows;
  rows.reserve(static_cast<std::size_t>(data.size()));
  for (Index i = 0; i < data.size(); ++i)
    rows.push_back({transformX(data.x(i)), transformY(data.y(i))});
  return Dataset(std::move(rows), data.label());
}

Dataset Standardizer::inverse(const Dataset& data) const {
  std::vector<SamplePair> rows;
  rows.reserve(static_cast<std::size_t>(data.size()));
  for (Index i = 0; i < data.size(); ++i)
    rows.push_back({inverseX(data.x(i)), inverseY(data.y(i))});
  return Dataset(std::move(rows), data.label());
}

MatrixXd Standardizer::paramMapMatrix(Index p) const {
  MatrixXd A = MatrixXd::Zero(p, p);
  // Pascal-row binomials in double; exact for the degrees in scope.
  for (Index j = 0; j < p; ++j) {
    double binom = 1.0;  // C(j, 0)
    const double inv_sx_j = std::pow(std_x, -static_cast<double>(j));
    for (Index i = 0; i <= j; ++i) {
      A(i, j) = std_y * binom * std::pow(-mean_x, static_cast<double>(j - i)) * inv_sx_j;
      binom = binom * static_cast<double>(j - i) / static_cast<double>(i + 1);
    }
  }
  return A;
}

VectorXd Standardizer::rawFromStdParams(const VectorXd& c) const {
  VectorXd a = paramMapMatrix(c.size()) * c;
  a[0] += mean_y;
  return a;
}

VectorXd Standardizer::rawFromStdTangent(const VectorXd& c) const {
  return paramMapMatrix(c.size()) * c;
}

VectorXd Standardizer::stdFromRawParams(const VectorXd& a) const {
  VectorXd rhs = a;
  rhs[0] -= mean_y;
  const MatrixXd A = paramMapMatrix(a.size());
  return A.triangularView<Eigen::Upper>().solve(rhs);
}

}  // namespace pertflow
