#pragma once

// Training loops for the network method and the filtered baseline, the
// first-order optimizers they share, and density-field diagnostics.

#include "ntopo/density.hpp"
#include "ntopo/embed.hpp"
#include "ntopo/fea.hpp"
#include "ntopo/net.hpp"

#include <Eigen/Core>

#include <string>
#include <vector>

namespace ntopo {

enum class OptimizerKind { gd, adam, rprop };

const char* optimizer_name(OptimizerKind kind);
/// Throws std::invalid_argument for unrecognized names.
OptimizerKind parse_optimizer(const std::string& name);

/// Minimizing first-order update rules. For rprop the learning rate is the
/// initial per-parameter step.
class Optimizer {
 public:
  static constexpr double adam_beta1 = 0.9;
  static constexpr double adam_beta2 = 0.999;
  static constexpr double adam_epsilon = 1e-8;
  static constexpr double rprop_increase = 1.2;
  static constexpr double rprop_decrease = 0.5;
  static constexpr double rprop_min_step = 1e-9;
  static constexpr double rprop_max_step = 1.0;

  Optimizer(OptimizerKind kind, double learning_rate, Eigen::Index size);

  /// `scale` multiplies the applied step (learning-rate schedules).
  void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad,
            double scale = 1.0);

  OptimizerKind kind() const { return kind_; }
  double learning_rate() const { return learning_rate_; }
  long long steps() const { return t_; }
  const Eigen::VectorXd& rprop_steps() const { return delta_; }

 private:
  OptimizerKind kind_;
  double learning_rate_;
  long long t_ = 0;
  Eigen::VectorXd m_;
  Eigen::VectorXd v_;
  Eigen::VectorXd delta_;
  Eigen::VectorXd previous_;
};

/// `base` until two thirds of training, then linear up to 10 base at the
/// last iteration.
double lr_ramp(double base, int iter, int iters);

struct IterationRecord {
  int iter = 0;
  double compliance = 0.0;
  double volume_error = 0.0;
  double gray_fraction = 0.0;
  double grad_norm = 0.0;
  /// Relative Frobenius change of the empirical NTK since the start; NaN
  /// when not measured.
  double ntk_drift = 0.0;
  double wall_time = 0.0;
};

struct RunRecord {
  std::vector<IterationRecord> iterations;

  const IterationRecord& final() const { return iterations.back(); }
  double max_volume_error() const;
};

struct TrainOptions {
  OptimizerKind optimizer = OptimizerKind::rprop;
  double learning_rate = 1e-3;
  bool ramp = false;
  int iters = 300;
  SolverOptions solver;
  /// Measure NTK drift every this many iterations; 0 disables.
  int drift_every = 0;
};

/// Records hold iters + 1 rows: one per optimizer step plus the final state.
struct NnResult {
  NetworkParams params;
  ShiftedField shift;
  DensityTransform density;
  RunRecord record;
};

/// Network method: the embedded grid feeds the network, whose shifted output
/// passes through the volume-preserving sigmoid into the compliance.
/// Throws NonFinite on non-finite compliance or gradients.
NnResult train_nn(const ProblemSpec& spec, const Embedding& embedding,
                  const NetworkConfig& config, const TrainOptions& options);

struct MfResult {
  Eigen::VectorXd xbar;
  DensityTransform density;
  RunRecord record;
};

/// Filtered baseline: y = Sigma(T xbar) starting from xbar = 0.
MfResult train_mf(const ProblemSpec& spec, const ConeFilter& filter,
                  const TrainOptions& options);

/// Share of densities strictly inside (0.1, 0.9).
double gray_fraction(const Eigen::VectorXd& y);

/// Fraction of the mean-removed 2D DFT energy at normalized frequency radius
/// above 1/4 (half the Nyquist frequency).
double checkerboard_index(const Eigen::VectorXd& y, int nx, int ny);

/// |Y - mirror(Y)|_1 / |Y|_1 with mirror(Y)(ex, ey) = Y(nx - 1 - ex, ey).
double mirror_asymmetry(const Eigen::VectorXd& y, int nx, int ny);

/// Densities of a trained network on a grid refined by `factor`. Fine
/// elements are evaluated at their centers in the coarse frame, the frozen
/// initial outputs are interpolated bilinearly from the coarse grid and the
/// bias is recomputed for the volume fraction V0 / (nx ny).
DensityTransform upsample(const NetworkParams& params,
                          const NetworkConfig& config,
                          const Embedding& embedding, const ShiftedField& shift,
                          int nx, int ny, int factor, double V0);

/// Bilinear interpolation of a field sampled at element centers, clamped to
/// the outermost centers.
double interpolate_centers(const Eigen::VectorXd& field, int nx, int ny,
                           double px, double py);

/// Average of each factor-by-factor block of a fine field.
Eigen::VectorXd block_average(const Eigen::VectorXd& fine, int nx, int ny,
                              int factor);

}  // namespace ntopo
