#include "ntopo/opt.hpp"

#include "ntopo/errors.hpp"
#include "ntopo/ntk.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>

namespace ntopo {

const char* optimizer_name(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::gd:
      return "gd";
    case OptimizerKind::adam:
      return "adam";
    case OptimizerKind::rprop:
      return "rprop";
  }
  return "unknown";
}

OptimizerKind parse_optimizer(const std::string& name) {
  if (name == "gd") return OptimizerKind::gd;
  if (name == "adam") return OptimizerKind::adam;
  if (name == "rprop") return OptimizerKind::rprop;
  throw std::invalid_argument("unknown optimizer '" + name + "'");
}

Optimizer::Optimizer(OptimizerKind kind, double learning_rate,
                     Eigen::Index size)
    : kind_(kind), learning_rate_(learning_rate) {
  if (kind == OptimizerKind::adam) {
    m_ = Eigen::VectorXd::Zero(size);
    v_ = Eigen::VectorXd::Zero(size);
  } else if (kind == OptimizerKind::rprop) {
    delta_ = Eigen::VectorXd::Constant(
        size, std::clamp(learning_rate, rprop_min_step, rprop_max_step));
    previous_ = Eigen::VectorXd::Zero(size);
  }
}

void Optimizer::step(Eigen::VectorXd& params, const Eigen::VectorXd& grad,
                     double scale) {
  ++t_;
  switch (kind_) {
    case OptimizerKind::gd:
      params -= (learning_rate_ * scale) * grad;
      return;
    case OptimizerKind::adam: {
      m_ = adam_beta1 * m_ + (1.0 - adam_beta1) * grad;
      v_ = adam_beta2 * v_ + (1.0 - adam_beta2) * grad.cwiseAbs2();
      const double c1 = 1.0 - std::pow(adam_beta1, static_cast<double>(t_));
      const double c2 = 1.0 - std::pow(adam_beta2, static_cast<double>(t_));
      params.array() -= (learning_rate_ * scale) * (m_.array() / c1) /
                        ((v_.array() / c2).sqrt() + adam_epsilon);
      return;
    }
    case OptimizerKind::rprop:
      for (Eigen::Index i = 0; i < params.size(); ++i) {
        double g = grad(i);
        const double sign = g * previous_(i);
        if (sign > 0.0) {
          delta_(i) = std::min(delta_(i) * rprop_increase, rprop_max_step);
        } else if (sign < 0.0) {
          delta_(i) = std::max(delta_(i) * rprop_decrease, rprop_min_step);
          g = 0.0;
        }
        if (g > 0.0) {
          params(i) -= scale * delta_(i);
        } else if (g < 0.0) {
          params(i) += scale * delta_(i);
        }
        previous_(i) = g;
      }
      return;
  }
}

double lr_ramp(double base, int iter, int iters) {
  const int start = (2 * iters + 2) / 3;
  if (iter < start) return base;
  if (iters - 1 <= start) return 10.0 * base;
  const double t = static_cast<double>(iter - start) / (iters - 1 - start);
  return base * (1.0 + 9.0 * std::min(t, 1.0));
}

double RunRecord::max_volume_error() const {
  double worst = 0.0;
  for (const auto& r : iterations) worst = std::max(worst, r.volume_error);
  return worst;
}

namespace {

using Clock = std::chrono::steady_clock;

void require_finite(double compliance, const Eigen::VectorXd& grad, int iter) {
  if (!std::isfinite(compliance)) {
    throw NonFinite("compliance is not finite at iteration " +
                    std::to_string(iter));
  }
  if (!grad.allFinite()) {
    throw NonFinite("gradient is not finite at iteration " +
                    std::to_string(iter) + " (compliance " +
                    std::to_string(compliance) + ")");
  }
}

IterationRecord make_record(int iter, const ComplianceResult& c,
                            const DensityTransform& t, double V0,
                            double grad_norm, Clock::time_point start) {
  IterationRecord r;
  r.iter = iter;
  r.compliance = c.compliance;
  r.volume_error = std::abs(t.y.sum() - V0);
  r.gray_fraction = gray_fraction(t.y);
  r.grad_norm = grad_norm;
  r.ntk_drift = std::numeric_limits<double>::quiet_NaN();
  r.wall_time = std::chrono::duration<double>(Clock::now() - start).count();
  return r;
}

double step_scale(const TrainOptions& options, int iter) {
  return options.ramp ? lr_ramp(1.0, iter, options.iters) : 1.0;
}

}  // namespace

NnResult train_nn(const ProblemSpec& spec, const Embedding& embedding,
                  const NetworkConfig& config, const TrainOptions& options) {
  spec.validate();
  config.validate();
  const Eigen::MatrixXd inputs = embed_grid(embedding, spec.nx, spec.ny);
  if (inputs.cols() != config.layer_sizes.front()) {
    throw ShapeMismatch("embedding dimension " +
                        std::to_string(inputs.cols()) +
                        " does not match network input size " +
                        std::to_string(config.layer_sizes.front()));
  }
  const auto start = Clock::now();

  NnResult result;
  result.params = NetworkParams::initialize(config);
  result.shift = make_shift(result.params, config, inputs, spec.V0);
  Optimizer optimizer(options.optimizer, options.learning_rate,
                      result.params.values.size());

  Eigen::MatrixXd initial_ntk;
  if (options.drift_every > 0) {
    initial_ntk = empirical_ntk(result.params, config, inputs).gram;
  }

  SolverOptions solver = options.solver;
  for (int iter = 0;; ++iter) {
    ForwardCache cache = forward(result.params, config, inputs);
    Eigen::VectorXd x = cache.output - result.shift.f0;
    x.array() += result.shift.offset;
    result.density = DensityTransform::from(std::move(x), spec.V0);

    const ComplianceResult c =
        compliance_and_grad(spec, result.density.y, solver);
    solver.initial_guess = c.displacement.U;
    const Eigen::VectorXd grad_x = apply_dx(result.density, c.grad_y);
    const Eigen::VectorXd grad =
        backward(result.params, config, cache, grad_x);
    require_finite(c.compliance, grad, iter);

    IterationRecord r = make_record(iter, c, result.density, spec.V0,
                                    grad.norm(), start);
    if (options.drift_every > 0 &&
        (iter % options.drift_every == 0 || iter == options.iters)) {
      const Eigen::MatrixXd g =
          empirical_ntk(result.params, config, inputs).gram;
      r.ntk_drift = relative_frobenius_error(g, initial_ntk);
    }
    result.record.iterations.push_back(r);
    if (iter == options.iters) break;
    optimizer.step(result.params.values, grad, step_scale(options, iter));
  }
  return result;
}

MfResult train_mf(const ProblemSpec& spec, const ConeFilter& filter,
                  const TrainOptions& options) {
  spec.validate();
  if (filter.nx() != spec.nx || filter.ny() != spec.ny) {
    throw ShapeMismatch("filter grid does not match the problem grid");
  }
  const auto start = Clock::now();
  MfResult result;
  result.xbar = Eigen::VectorXd::Zero(spec.num_elements());
  Optimizer optimizer(options.optimizer, options.learning_rate,
                      result.xbar.size());
  SolverOptions solver = options.solver;
  for (int iter = 0;; ++iter) {
    result.density = DensityTransform::from(filter.apply(result.xbar), spec.V0);
    const ComplianceResult c =
        compliance_and_grad(spec, result.density.y, solver);
    solver.initial_guess = c.displacement.U;
    const Eigen::VectorXd grad =
        filter.apply_transpose(apply_dx(result.density, c.grad_y));
    require_finite(c.compliance, grad, iter);
    result.record.iterations.push_back(
        make_record(iter, c, result.density, spec.V0, grad.norm(), start));
    if (iter == options.iters) break;
    optimizer.step(result.xbar, grad, step_scale(options, iter));
  }
  return result;
}

double gray_fraction(const Eigen::VectorXd& y) {
  if (y.size() == 0) return 0.0;
  const auto gray = (y.array() > 0.1 && y.array() < 0.9).count();
  return static_cast<double>(gray) / static_cast<double>(y.size());
}

double checkerboard_index(const Eigen::VectorXd& y, int nx, int ny) {
  Eigen::MatrixXcd image(nx, ny);
  const double mean = y.mean();
  for (int ex = 0; ex < nx; ++ex)
    for (int ey = 0; ey < ny; ++ey) image(ex, ey) = y(ex * ny + ey) - mean;
  const Eigen::MatrixXd power = fft2(image).cwiseAbs2();
  const double total = power.sum();
  if (!(total > 1e-300)) return 0.0;
  double high = 0.0;
  for (int kx = 0; kx < nx; ++kx) {
    const double fx = static_cast<double>(std::min(kx, nx - kx)) / nx;
    for (int ky = 0; ky < ny; ++ky) {
      const double fy = static_cast<double>(std::min(ky, ny - ky)) / ny;
      if (fx * fx + fy * fy > 0.0625) high += power(kx, ky);
    }
  }
  return high / total;
}

double mirror_asymmetry(const Eigen::VectorXd& y, int nx, int ny) {
  double diff = 0.0;
  for (int ex = 0; ex < nx; ++ex)
    for (int ey = 0; ey < ny; ++ey)
      diff += std::abs(y(ex * ny + ey) - y((nx - 1 - ex) * ny + ey));
  return diff / y.cwiseAbs().sum();
}

double interpolate_centers(const Eigen::VectorXd& field, int nx, int ny,
                           double px, double py) {
  const double gx = std::clamp(px - 0.5, 0.0, nx - 1.0);
  const double gy = std::clamp(py - 0.5, 0.0, ny - 1.0);
  const int x0 = std::min(static_cast<int>(gx), std::max(nx - 2, 0));
  const int y0 = std::min(static_cast<int>(gy), std::max(ny - 2, 0));
  const int x1 = std::min(x0 + 1, nx - 1);
  const int y1 = std::min(y0 + 1, ny - 1);
  const double tx = gx - x0;
  const double ty = gy - y0;
  auto at = [&](int ex, int ey) { return field(ex * ny + ey); };
  return (1.0 - tx) * ((1.0 - ty) * at(x0, y0) + ty * at(x0, y1)) +
         tx * ((1.0 - ty) * at(x1, y0) + ty * at(x1, y1));
}

DensityTransform upsample(const NetworkParams& params,
                          const NetworkConfig& config,
                          const Embedding& embedding, const ShiftedField& shift,
                          int nx, int ny, int factor, double V0) {
  if (factor < 1) throw ShapeMismatch("upsampling factor must be >= 1");
  if (shift.f0.size() != static_cast<Eigen::Index>(nx) * ny) {
    throw ShapeMismatch("stored initial outputs do not match the grid");
  }
  const int fnx = nx * factor;
  const int fny = ny * factor;
  const Eigen::MatrixX2d centers =
      element_centers(fnx, fny, 1.0 / static_cast<double>(factor));
  const Eigen::MatrixXd inputs = embed_points(embedding, centers);
  Eigen::VectorXd x = forward(params, config, inputs).output;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    x(i) += shift.offset -
            interpolate_centers(shift.f0, nx, ny, centers(i, 0), centers(i, 1));
  }
  const double fine_volume =
      V0 / (static_cast<double>(nx) * ny) * static_cast<double>(x.size());
  return DensityTransform::from(std::move(x), fine_volume);
}

Eigen::VectorXd block_average(const Eigen::VectorXd& fine, int nx, int ny,
                              int factor) {
  const int fny = ny * factor;
  Eigen::VectorXd coarse = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(nx) * ny);
  for (int fx = 0; fx < nx * factor; ++fx)
    for (int fy = 0; fy < fny; ++fy)
      coarse((fx / factor) * ny + fy / factor) += fine(fx * fny + fy);
  return coarse / static_cast<double>(factor * factor);
}

}  // namespace ntopo
