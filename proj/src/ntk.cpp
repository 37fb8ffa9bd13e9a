#include "ntopo/ntk.hpp"

#include "ntopo/errors.hpp"

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/FFT>

#include <complex>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

namespace ntopo {

DualActivation::DualActivation(Activation kind, double omega)
    : kind_(kind), omega_(omega) {
  switch (kind) {
    case Activation::relu:
    case Activation::cosine:
    case Activation::identity:
      return;
  }
  throw UnknownDual("activation has no closed-form dual");
}

DualActivation DualActivation::of(const NetworkConfig& config) {
  return DualActivation(config.activation, config.omega);
}

double DualActivation::value(double rho) const {
  return expectation(1.0, 1.0, std::clamp(rho, -1.0, 1.0));
}

double DualActivation::derivative(double rho) const {
  return derivative_expectation(1.0, 1.0, std::clamp(rho, -1.0, 1.0));
}

double DualActivation::expectation(double var_x, double var_y,
                                   double cov) const {
  const double scale = std::sqrt(std::max(var_x, 0.0) * std::max(var_y, 0.0));
  cov = std::clamp(cov, -scale, scale);
  switch (kind_) {
    case Activation::relu:
      return scale > 0.0 ? scale * relu_dual(cov / scale) : 0.0;
    case Activation::cosine: {
      const double w2 = omega_ * omega_;
      const double lambda2 = 2.0 / (1.0 + std::exp(-2.0 * w2));
      const double sum = var_x + var_y;
      return 0.5 * lambda2 *
             (std::exp(-0.5 * w2 * (sum - 2.0 * cov)) +
              std::exp(-0.5 * w2 * (sum + 2.0 * cov)));
    }
    case Activation::identity:
      return cov;
  }
  throw UnknownDual("activation has no closed-form dual");
}

double DualActivation::derivative_expectation(double var_x, double var_y,
                                              double cov) const {
  const double scale = std::sqrt(std::max(var_x, 0.0) * std::max(var_y, 0.0));
  cov = std::clamp(cov, -scale, scale);
  switch (kind_) {
    case Activation::relu:
      return scale > 0.0 ? relu_dual_derivative(cov / scale) : 0.0;
    case Activation::cosine: {
      const double w2 = omega_ * omega_;
      const double lambda2 = 2.0 / (1.0 + std::exp(-2.0 * w2));
      const double sum = var_x + var_y;
      return 0.5 * lambda2 * w2 *
             (std::exp(-0.5 * w2 * (sum - 2.0 * cov)) -
              std::exp(-0.5 * w2 * (sum + 2.0 * cov)));
    }
    case Activation::identity:
      return 1.0;
  }
  throw UnknownDual("activation has no closed-form dual");
}

double limiting_ntk_from_first_layer(const DualActivation& dual,
                                     const NetworkConfig& config,
                                     double var_i, double var_j, double cov) {
  const double a2 = 1.0 - config.beta * config.beta;
  const double b2 = config.beta * config.beta;
  double theta = cov;
  for (int l = 1; l < config.depth(); ++l) {
    const double next_cov = b2 + a2 * dual.expectation(var_i, var_j, cov);
    const double sdot = a2 * dual.derivative_expectation(var_i, var_j, cov);
    var_i = b2 + a2 * dual.expectation(var_i, var_i, var_i);
    var_j = b2 + a2 * dual.expectation(var_j, var_j, var_j);
    theta = sdot * theta + next_cov;
    cov = next_cov;
  }
  return theta;
}

KernelMatrix empirical_ntk(const Eigen::MatrixXd& jacobian) {
  KernelMatrix k;
  k.gram.resize(jacobian.rows(), jacobian.rows());
  k.gram.setZero();
  k.gram.selfadjointView<Eigen::Lower>().rankUpdate(jacobian);
  k.gram.triangularView<Eigen::StrictlyUpper>() =
      k.gram.transpose().triangularView<Eigen::StrictlyUpper>();
  k.kind = KernelKind::empirical;
  return k;
}

KernelMatrix empirical_ntk(const NetworkParams& params,
                           const NetworkConfig& config,
                           const Eigen::MatrixXd& inputs) {
  const ForwardCache cache = forward(params, config, inputs);
  const std::vector<Eigen::MatrixXd> sens =
      output_sensitivities(params, config, cache);
  const Eigen::Index n = inputs.rows();
  const double a2 = 1.0 - config.beta * config.beta;
  const double b2 = config.beta * config.beta;
  KernelMatrix k;
  k.kind = KernelKind::empirical;
  k.gram = Eigen::MatrixXd::Zero(n, n);
  for (int l = 0; l < config.depth(); ++l) {
    Eigen::MatrixXd features = cache.activations[l] *
                               cache.activations[l].transpose() *
                               (a2 / config.layer_sizes[l]);
    features.array() += b2;
    k.gram += (sens[l] * sens[l].transpose()).cwiseProduct(features);
  }
  return k;
}

KernelMatrix limiting_ntk(const NetworkConfig& config,
                          const Eigen::MatrixXd& inputs) {
  config.validate();
  if (inputs.cols() != config.layer_sizes.front()) {
    throw ShapeMismatch("inputs do not match the network input size");
  }
  const DualActivation dual = DualActivation::of(config);
  const Eigen::Index n = inputs.rows();
  const double a2 = 1.0 - config.beta * config.beta;
  const double b2 = config.beta * config.beta;
  Eigen::MatrixXd first = inputs * inputs.transpose() * (a2 / inputs.cols());
  first.array() += b2;

  KernelMatrix k;
  k.kind = KernelKind::limiting;
  k.gram.resize(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = j; i < n; ++i) {
      const double v = limiting_ntk_from_first_layer(
          dual, config, first(i, i), first(j, j), first(i, j));
      k.gram(i, j) = v;
      k.gram(j, i) = v;
    }
  }
  return k;
}

double relative_frobenius_error(const Eigen::MatrixXd& estimate,
                                const Eigen::MatrixXd& reference) {
  return (estimate - reference).norm() / reference.norm();
}

MonteCarloEstimate monte_carlo_dual(Activation activation, double omega,
                                    double rho, std::int64_t samples,
                                    std::uint64_t seed, bool derivative) {
  NetworkConfig config;
  config.activation = activation;
  config.omega = omega;
  rho = std::clamp(rho, -1.0, 1.0);
  const double orth = std::sqrt(1.0 - rho * rho);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  double mean = 0.0;
  double m2 = 0.0;
  for (std::int64_t s = 0; s < samples; ++s) {
    const double x = normal(rng);
    const double y = rho * x + orth * normal(rng);
    const double v = derivative ? activate_derivative(config, x) *
                                      activate_derivative(config, y)
                                : activate(config, x) * activate(config, y);
    const double d = v - mean;
    mean += d / static_cast<double>(s + 1);
    m2 += d * (v - mean);
  }
  const double var = samples > 1 ? m2 / static_cast<double>(samples - 1) : 0.0;
  return {mean, std::sqrt(var / static_cast<double>(samples))};
}

KernelProfile profile_gaussian(double beta, double ell) {
  KernelProfile p;
  p.embedding = "gaussian";
  p.beta = beta;
  p.ell = ell;
  p.depth = 2;
  p.phi = [beta, ell](double d) {
    const double g = beta * beta +
                     (1.0 - beta * beta) * std::exp(-d * d / (2.0 * ell * ell));
    return relu_dual(g) + g * relu_dual_derivative(g);
  };
  return p;
}

KernelProfile profile_torus(double beta, double omega, double delta,
                            int depth) {
  NetworkConfig config;
  config.layer_sizes.assign(depth + 1, 1);
  config.layer_sizes.front() = 4;
  config.beta = beta;
  config.activation = Activation::cosine;
  config.omega = omega;
  config.validate();

  KernelProfile p;
  p.embedding = "torus";
  p.beta = beta;
  p.omega = omega;
  p.delta = delta;
  p.depth = depth;
  const DualActivation dual = DualActivation::of(config);
  p.phi = [config, dual, delta](double r) {
    const double b2 = config.beta * config.beta;
    const double cov = b2 + (1.0 - b2) * std::cos(delta * r);
    return limiting_ntk_from_first_layer(dual, config, 1.0, 1.0, cov);
  };
  return p;
}

double half_max_radius(const KernelProfile& profile, double scan_max) {
  constexpr int kScan = 1000;
  std::vector<double> r(kScan + 1);
  std::vector<double> v(kScan + 1);
  for (int k = 0; k <= kScan; ++k) {
    r[k] = scan_max * k / kScan;
    v[k] = profile(r[k]);
    if (!std::isfinite(v[k])) {
      throw DegenerateProfile("profile is not finite on the scan window");
    }
  }
  const double peak = v[0];
  const double floor = *std::min_element(v.begin(), v.end());
  if (peak - floor <= 1e-12 * std::max(1.0, std::abs(peak))) {
    throw DegenerateProfile("profile is constant; half-maximum radius undefined");
  }
  const double level = 0.5 * (peak + floor);
  int k = 1;
  while (v[k] > level) ++k;
  double lo = r[k - 1];
  double hi = r[k];
  for (int it = 0; it < 200 && hi - lo > 1e-13 * std::max(1.0, scan_max);
       ++it) {
    const double mid = 0.5 * (lo + hi);
    if (profile(mid) > level) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

Spectrum spectrum(const Eigen::MatrixXd& gram, int k) {
  const Eigen::Index n = gram.rows();
  if (n > 4096) {
    throw SizeExceeded("full eigendecomposition limited to N <= 4096");
  }
  if (k < 1 || k > n) {
    throw SizeExceeded("requested " + std::to_string(k) +
                       " eigenpairs of a " + std::to_string(n) +
                       "-dimensional matrix");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram);
  Spectrum s;
  s.values = solver.eigenvalues().reverse().head(k);
  s.vectors = solver.eigenvectors().rowwise().reverse().leftCols(k);
  return s;
}

Eigen::MatrixXd eigenimage(const Spectrum& s, int k, int nx, int ny) {
  Eigen::MatrixXd image(nx, ny);
  for (int ex = 0; ex < nx; ++ex)
    for (int ey = 0; ey < ny; ++ey) image(ex, ey) = s.vectors(ex * ny + ey, k);
  return image;
}

double dirichlet_energy(const Eigen::MatrixXd& image) {
  const Eigen::Index r = image.rows();
  const Eigen::Index c = image.cols();
  double e = 0.0;
  if (r > 1)
    e += (image.bottomRows(r - 1) - image.topRows(r - 1)).squaredNorm();
  if (c > 1)
    e += (image.rightCols(c - 1) - image.leftCols(c - 1)).squaredNorm();
  return e;
}

namespace {

enum class Direction { forward, inverse };

Eigen::MatrixXcd transform2(const Eigen::MatrixXcd& in, Direction dir) {
  Eigen::FFT<double> fft;
  Eigen::MatrixXcd out = in;
  std::vector<std::complex<double>> src;
  std::vector<std::complex<double>> dst;
  auto run = [&]() {
    if (dir == Direction::forward) {
      fft.fwd(dst, src);
    } else {
      fft.inv(dst, src);
    }
  };
  for (Eigen::Index c = 0; c < out.cols(); ++c) {
    src.assign(out.col(c).data(), out.col(c).data() + out.rows());
    run();
    for (Eigen::Index i = 0; i < out.rows(); ++i) out(i, c) = dst[i];
  }
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    src.resize(out.cols());
    for (Eigen::Index c = 0; c < out.cols(); ++c) src[c] = out(i, c);
    run();
    for (Eigen::Index c = 0; c < out.cols(); ++c) out(i, c) = dst[c];
  }
  return out;
}

}  // namespace

Eigen::MatrixXcd fft2(const Eigen::MatrixXcd& image) {
  return transform2(image, Direction::forward);
}

Eigen::MatrixXcd ifft2(const Eigen::MatrixXcd& spectrum) {
  return transform2(spectrum, Direction::inverse);
}

Eigen::MatrixXd circulant_sqrt(const Eigen::MatrixXd& stencil) {
  const Eigen::MatrixXd eig =
      fft2(stencil.cast<std::complex<double>>()).real();
  const double top = eig.maxCoeff();
  const double bottom = eig.minCoeff();
  if (bottom < -1e-6 * top) {
    throw NegativeSpectrum("kernel spectrum has a negative eigenvalue " +
                           std::to_string(bottom));
  }
  const Eigen::MatrixXcd root =
      eig.cwiseMax(0.0).cwiseSqrt().cast<std::complex<double>>();
  return ifft2(root).real();
}

TorusFilter torus_sqrt_filter(const NetworkConfig& config, int n) {
  config.validate();
  if (config.layer_sizes.front() != 4) {
    throw ShapeMismatch("torus filter needs a network with 4 inputs");
  }
  if (n < 1) throw ShapeMismatch("torus grid must be nonempty");
  const DualActivation dual = DualActivation::of(config);
  const double b2 = config.beta * config.beta;
  const double a2 = 1.0 - b2;

  TorusFilter f;
  f.n = n;
  f.delta = 2.0 * std::numbers::pi / n;
  f.kernel.resize(n, n);
  // Radius sqrt 2: |phi|^2 = 4 = n0, so first-layer variances are exactly 1.
  for (int dx = 0; dx < n; ++dx) {
    for (int dy = 0; dy < n; ++dy) {
      const double cov =
          b2 + 0.5 * a2 * (std::cos(f.delta * dx) + std::cos(f.delta * dy));
      f.kernel(dx, dy) =
          limiting_ntk_from_first_layer(dual, config, 1.0, 1.0, cov);
    }
  }
  f.kernel_spectrum = fft2(f.kernel.cast<std::complex<double>>()).real();
  f.filter = circulant_sqrt(f.kernel);
  return f;
}

Eigen::MatrixXd circulant_matrix(const Eigen::MatrixXd& stencil) {
  const Eigen::Index n = stencil.rows();
  const Eigen::Index m = stencil.cols();
  Eigen::MatrixXd c(n * m, n * m);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < m; ++j)
      for (Eigen::Index k = 0; k < n; ++k)
        for (Eigen::Index l = 0; l < m; ++l)
          c(i * m + j, k * m + l) = stencil((k - i + n) % n, (l - j + m) % m);
  return c;
}

}  // namespace ntopo
