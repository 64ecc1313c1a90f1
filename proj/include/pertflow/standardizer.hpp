#pragma once

#include <pertflow/dataset.hpp>
#include <pertflow/types.hpp>

namespace pertflow {

// Z-score map fitted on one dataset and applied to others. Also carries the
// exact affine change of coordinates between polynomial coefficients fitted in
// standardized variables and raw-coordinate coefficients:
//
//   y = mean_y + std_y * sum_j c_j ((x - mean_x)/std_x)^j
//
// expands binomially to raw coefficients a = A c + mean_y e_0 with A upper
// triangular, A(i,j) = std_y * C(j,i) * (-mean_x)^(j-i) / std_x^j. The linear
// part A alone maps tangent vectors (parameter differences), which have no
// mean_y offset.
struct Standardizer {
  double mean_x = 0.0;
  double std_x = 1.0;
  double mean_y = 0.0;
  double std_y = 1.0;

  // ddof = 1 statistics; throws DataError on fewer than 2 samples or zero
  // variance in x or y.
  static Standardizer fit(const Dataset& data);
  // Identity map; lets standardized and raw pipelines share one code path.
  static Standardizer identity() { return Standardizer{}; }

  bool isIdentity() const {
    return mean_x == 0.0 && std_x == 1.0 && mean_y == 0.0 && std_y == 1.0;
  }

  double transformX(double x) const { return (x - mean_x) / std_x; }
  double transformY(double y) const { return (y - mean_y) / std_y; }
  double inverseX(double u) const { return mean_x + std_x * u; }
  double inverseY(double v) const { return mean_y + std_y * v; }

  Dataset transform(const Dataset& data) const;
  Dataset inverse(const Dataset& data) const;

  // Coefficient map for a degree (c.size()-1) polynomial; see above.
  VectorXd rawFromStdParams(const VectorXd& c) const;
  // Linear part only: the image of a parameter-space tangent vector.
  VectorXd rawFromStdTangent(const VectorXd& c) const;
  VectorXd stdFromRawParams(const VectorXd& a) const;

  // The upper-triangular linear part A for dimension p.
  MatrixXd paramMapMatrix(Index p) const;
};

}  // namespace pertflow
