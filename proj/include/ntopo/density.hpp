#pragma once

// Volume-preserving sigmoid transform from pre-densities to densities, its
// implicit-differentiation Jacobian, and the classical cone density filter.

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <cmath>

namespace ntopo {

template <typename Scalar>
Scalar sigmoid(Scalar x) {
  if (x >= Scalar(0)) return Scalar(1) / (Scalar(1) + std::exp(-x));
  const Scalar e = std::exp(x);
  return e / (Scalar(1) + e);
}

/// The unique b with sum_i sigmoid(x_i + b) = V0. Throws InvalidVolume unless
/// 0 < V0 < N.
double find_bias(const Eigen::VectorXd& x, double V0);

/// y = sigmoid(x + bias) with the volume-matching bias. Immutable once built.
struct DensityTransform {
  Eigen::VectorXd x;
  double bias = 0.0;
  Eigen::VectorXd y;
  /// sigmoid'(x_i + bias), each in (0, 1/4].
  Eigen::VectorXd sdot;
  double sdot_l1 = 0.0;

  static DensityTransform from(Eigen::VectorXd x, double V0);
};

/// Matrix-free product with D_X = Diag(s) - s s^T / |s|_1, s = sdot.
Eigen::VectorXd apply_dx(const DensityTransform& t, const Eigen::VectorXd& g);

/// Chain rule through the transform: gradient w.r.t. x from gradient w.r.t. y.
inline Eigen::VectorXd grad_x_from_grad_y(const DensityTransform& t,
                                          const Eigen::VectorXd& grad_y) {
  return apply_dx(t, grad_y);
}

/// Row-normalized linear-hat filter on an nx-by-ny element grid (element
/// index ex * ny + ey). Weights max(0, rmin - distance), truncated at the
/// boundary and renormalized so constants are fixed points.
class ConeFilter {
 public:
  ConeFilter(int nx, int ny, double rmin);

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const { return t_ * x; }
  Eigen::VectorXd apply_transpose(const Eigen::VectorXd& g) const {
    return t_.transpose() * g;
  }

  const Eigen::SparseMatrix<double, Eigen::RowMajor>& matrix() const {
    return t_;
  }
  double rmin() const { return rmin_; }
  int nx() const { return nx_; }
  int ny() const { return ny_; }

 private:
  int nx_;
  int ny_;
  double rmin_;
  Eigen::SparseMatrix<double, Eigen::RowMajor> t_;
};

}  // namespace ntopo
