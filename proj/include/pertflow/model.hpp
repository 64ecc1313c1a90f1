#pragma once

#include <pertflow/dataset.hpp>
#include <pertflow/types.hpp>

#include <Eigen/QR>

#include <string>

namespace pertflow {

// Polynomial hypothesis h_theta(x) = sum_{j=0..d} theta_{j+1} x^j.
template <typename Scalar = double>
class PolynomialModel {
 public:
  explicit PolynomialModel(int degree) : degree_(degree) {
    if (degree < 0) throw ValidationError("polynomial degree must be non-negative");
  }

  int degree() const { return degree_; }
  Index paramCount() const { return static_cast<Index>(degree_) + 1; }

  Scalar evaluate(const Vector<Scalar>& theta, Scalar x) const {
    requireDim(theta);
    Scalar acc = theta[paramCount() - 1];
    for (Index j = paramCount() - 2; j >= 0; --j) acc = acc * x + theta[j];
    return acc;
  }

  Vector<Scalar> predict(const Vector<Scalar>& theta, const Vector<Scalar>& xs) const {
    Vector<Scalar> out(xs.size());
    for (Index i = 0; i < xs.size(); ++i) out[i] = evaluate(theta, xs[i]);
    return out;
  }

  // Vandermonde design matrix, column j = x^j, built column-by-column.
  Matrix<Scalar> designMatrix(const Vector<Scalar>& xs) const {
    Matrix<Scalar> X(xs.size(), paramCount());
    X.col(0).setOnes();
    for (Index j = 1; j < paramCount(); ++j)
      X.col(j) = X.col(j - 1).cwiseProduct(xs);
    return X;
  }

  Matrix<Scalar> designMatrix(const Dataset& data) const {
    Vector<Scalar> xs(data.size());
    for (Index i = 0; i < data.size(); ++i) xs[i] = static_cast<Scalar>(data.x(i));
    return designMatrix(xs);
  }

 private:
  void requireDim(const Vector<Scalar>& theta) const {
    if (theta.size() != paramCount())
      throw ValidationError("parameter vector has dimension " +
                            std::to_string(theta.size()) + ", model expects " +
                            std::to_string(paramCount()));
  }

  int degree_;
};

// Mean-squared-error surface J(theta) = (1/m) |X theta - y|^2 over one dataset.
// Quadratic in theta: gradient (2/m) X^T (X theta - y), Hessian (2/m) X^T X
// constant and cached. Also provides the dithering force
// B_i(theta) = (dJ/dtheta_i)^2 and its Jacobian 2 diag(grad) Hessian.
// The same type serves the training loss J0, the terminal cost Phi (validation
// data), and the dithered-loss quantities B and grad B.
template <typename Scalar = double>
class LossSurface {
 public:
  LossSurface(Matrix<Scalar> X, Vector<Scalar> y) : X_(std::move(X)), y_(std::move(y)) {
    if (X_.rows() != y_.size())
      throw ValidationError("design matrix and target length disagree");
    if (X_.rows() < 1) throw ValidationError("loss surface needs at least one sample");
    hessian_ = (Scalar(2) / Scalar(X_.rows())) * (X_.transpose() * X_);
  }

  LossSurface(const PolynomialModel<Scalar>& model, const Dataset& data)
      : LossSurface(model.designMatrix(data),
                    data.yValues().template cast<Scalar>()) {}

  Index paramCount() const { return X_.cols(); }
  Index sampleCount() const { return X_.rows(); }

  Scalar value(const Vector<Scalar>& theta) const {
    requireDim(theta);
    return (X_ * theta - y_).squaredNorm() / Scalar(X_.rows());
  }

  Vector<Scalar> gradient(const Vector<Scalar>& theta) const {
    requireDim(theta);
    return (Scalar(2) / Scalar(X_.rows())) * (X_.transpose() * (X_ * theta - y_));
  }

  const Matrix<Scalar>& hessian() const { return hessian_; }
  const Matrix<Scalar>& hessian(const Vector<Scalar>& theta) const {
    requireDim(theta);
    return hessian_;
  }

  Vector<Scalar> gradientSquared(const Vector<Scalar>& theta) const {
    return gradient(theta).array().square().matrix();
  }

  Matrix<Scalar> gradientSquaredJacobian(const Vector<Scalar>& theta) const {
    return (Scalar(2) * gradient(theta)).asDiagonal() * hessian_;
  }

 private:
  void requireDim(const Vector<Scalar>& theta) const {
    if (theta.size() != X_.cols())
      throw ValidationError("parameter vector has dimension " +
                            std::to_string(theta.size()) + ", surface expects " +
                            std::to_string(X_.cols()));
  }

  Matrix<Scalar> X_;
  Vector<Scalar> y_;
  Matrix<Scalar> hessian_;
};

// Unique MSE minimizer through the normal equations, factored by
// column-pivoted QR (rank-revealing). Throws DataError on rank deficiency.
template <typename Scalar = double>
Vector<Scalar> leastSquaresFit(const Matrix<Scalar>& X, const Vector<Scalar>& y) {
  if (X.rows() != y.size())
    throw ValidationError("design matrix and target length disagree");
  const Matrix<Scalar> XtX = X.transpose() * X;
  Eigen::ColPivHouseholderQR<Matrix<Scalar>> qr(XtX);
  if (qr.rank() < X.cols())
    throw DataError("least squares: design matrix is rank deficient (rank " +
                    std::to_string(qr.rank()) + " of " + std::to_string(X.cols()) + ")");
  return qr.solve(X.transpose() * y);
}

template <typename Scalar = double>
Vector<Scalar> leastSquaresFit(const PolynomialModel<Scalar>& model, const Dataset& data) {
  return leastSquaresFit<Scalar>(model.designMatrix(data),
                                 data.yValues().template cast<Scalar>());
}

// Sample standard deviation (ddof = 1, centered) of y_i - h_theta(x_i).
inline double residualStd(const PolynomialModel<double>& model, const VectorXd& theta,
                          const Dataset& data) {
  return sampleStd(data.yValues() - model.predict(theta, data.xValues()));
}

}  // namespace pertflow
