#pragma once

// Neural tangent kernels of the density network: empirical Gram matrices,
// the infinite-width limit through dual activations, radial kernel profiles
// with their half-maximum radius, spectra, and the square-root filter of the
// full-torus kernel.

#include "ntopo/net.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>

namespace ntopo {

enum class KernelKind { empirical, limiting, squared_filter };

struct KernelMatrix {
  Eigen::MatrixXd gram;
  KernelKind kind = KernelKind::empirical;
};

/// Gaussian expectations of a standardized activation. For unit variances
/// value(rho) = E[mu(X) mu(Y)] and derivative(rho) = E[mu'(X) mu'(Y)] with
/// corr(X, Y) = rho.
class DualActivation {
 public:
  explicit DualActivation(Activation kind, double omega = 5.0);
  /// Throws UnknownDual if the configured activation has no closed form.
  static DualActivation of(const NetworkConfig& config);

  Activation kind() const { return kind_; }
  double omega() const { return omega_; }

  double value(double rho) const;
  double derivative(double rho) const;

  /// E[mu(X) mu(Y)] for (X, Y) ~ N(0, [[var_x, cov], [cov, var_y]]).
  double expectation(double var_x, double var_y, double cov) const;
  /// E[mu'(X) mu'(Y)] for the same law.
  double derivative_expectation(double var_x, double var_y, double cov) const;

 private:
  Activation kind_;
  double omega_;
};

/// Standardized ReLU duals.
template <typename Scalar>
Scalar relu_dual(Scalar rho) {
  constexpr Scalar pi = Scalar(3.14159265358979323846L);
  rho = std::clamp(rho, Scalar(-1), Scalar(1));
  return rho - (rho * std::acos(rho) - std::sqrt(Scalar(1) - rho * rho)) / pi;
}

template <typename Scalar>
Scalar relu_dual_derivative(Scalar rho) {
  constexpr Scalar pi = Scalar(3.14159265358979323846L);
  rho = std::clamp(rho, Scalar(-1), Scalar(1));
  return Scalar(1) - std::acos(rho) / pi;
}

/// Limiting NTK of one input pair given the first-layer covariances
/// Sigma^1(z, z), Sigma^1(z', z'), Sigma^1(z, z') (which is also Theta^1).
double limiting_ntk_from_first_layer(const DualActivation& dual,
                                     const NetworkConfig& config,
                                     double var_i, double var_j, double cov);

KernelMatrix empirical_ntk(const Eigen::MatrixXd& jacobian);

/// Empirical NTK from layerwise sensitivities, without materializing the
/// Jacobian: sum_l (D_l D_l^T) o (alpha^2 / n_l A_l A_l^T + beta^2).
KernelMatrix empirical_ntk(const NetworkParams& params,
                           const NetworkConfig& config,
                           const Eigen::MatrixXd& inputs);

KernelMatrix limiting_ntk(const NetworkConfig& config,
                          const Eigen::MatrixXd& inputs);

double relative_frobenius_error(const Eigen::MatrixXd& estimate,
                                const Eigen::MatrixXd& reference);

struct MonteCarloEstimate {
  double mean = 0.0;
  double std_error = 0.0;
};

/// Sample estimate of E[mu(X) mu(Y)] (or of mu' when `derivative`) with
/// Y = rho X + sqrt(1 - rho^2) X'.
MonteCarloEstimate monte_carlo_dual(Activation activation, double omega,
                                    double rho, std::int64_t samples,
                                    std::uint64_t seed,
                                    bool derivative = false);

/// Radial profile of the limiting kernel as a function of distance.
struct KernelProfile {
  std::function<double(double)> phi;
  std::string embedding;
  double beta = 0.0;
  double omega = 0.0;
  double ell = 0.0;
  double delta = 0.0;
  int depth = 0;

  double operator()(double d) const { return phi(d); }
};

/// Gaussian features followed by one standardized-ReLU layer:
/// phi(d) = r(G) + G r'(G), G = beta^2 + (1 - beta^2) exp(-d^2 / 2 ell^2).
KernelProfile profile_gaussian(double beta, double ell);

/// Torus embedding (radius sqrt 2) followed by depth - 1 standardized-cosine
/// layers, along the diagonal p1 = p2 with per-axis offset r.
KernelProfile profile_torus(double beta, double omega, double delta,
                            int depth = 3);

/// Smallest r with phi(r) = (phi(0) + min phi) / 2 over [0, scan_max].
double half_max_radius(const KernelProfile& profile, double scan_max);

struct Spectrum {
  /// Sorted descending.
  Eigen::VectorXd values;
  /// Column k pairs with values(k).
  Eigen::MatrixXd vectors;
};

/// Top-k eigenpairs of a symmetric matrix of size at most 4096.
Spectrum spectrum(const Eigen::MatrixXd& gram, int k);

/// Column k of the spectrum reshaped to nx rows by ny columns (element
/// ex * ny + ey at (ex, ey)).
Eigen::MatrixXd eigenimage(const Spectrum& s, int k, int nx, int ny);

/// Sum of squared forward differences of an image.
double dirichlet_energy(const Eigen::MatrixXd& image);

struct TorusFilter {
  int n = 0;
  double delta = 0.0;
  /// Limiting-NTK stencil K(dx, dy) = Theta(phi(0, 0), phi(dx, dy)).
  Eigen::MatrixXd kernel;
  /// Real 2D DFT of the kernel: the eigenvalues of the circulant Gram matrix.
  Eigen::MatrixXd kernel_spectrum;
  /// g with DFT sqrt(max(0, kernel_spectrum)); circulant(g)^2 = circulant(K).
  Eigen::MatrixXd filter;
};

/// Stencil g with DFT sqrt(max(0, DFT(stencil))) for a symmetric stencil.
/// Throws NegativeSpectrum when the stencil is clearly indefinite.
Eigen::MatrixXd circulant_sqrt(const Eigen::MatrixXd& stencil);

/// Square-root filter on an n-by-n grid wrapped once around the torus
/// (delta = 2 pi / n). The network must take the 4-dimensional torus input.
TorusFilter torus_sqrt_filter(const NetworkConfig& config, int n);

/// Extends an nx-by-ny grid to n = 4 max(nx, ny).
inline TorusFilter torus_sqrt_filter(const NetworkConfig& config, int nx,
                                     int ny) {
  return torus_sqrt_filter(config, 4 * std::max(nx, ny));
}

/// Dense n^2 x n^2 matrix of the cyclic convolution with `stencil`.
Eigen::MatrixXd circulant_matrix(const Eigen::MatrixXd& stencil);

Eigen::MatrixXcd fft2(const Eigen::MatrixXcd& image);
Eigen::MatrixXcd ifft2(const Eigen::MatrixXcd& spectrum);

}  // namespace ntopo
