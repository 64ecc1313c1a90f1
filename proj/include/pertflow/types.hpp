#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <stdexcept>

namespace pertflow {

inline constexpr const char* kVersion = "0.1.0";

using Index = Eigen::Index;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using VectorXd = Vector<double>;
using MatrixXd = Matrix<double>;

// Bad configuration or arguments: out-of-range fields, dimension mismatches.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed or degenerate data: parse failures, rank deficiency, zero variance.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Numerical failure: divergence, non-finite state, degenerate fits.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace pertflow
