#pragma once

// Fully-connected network in NTK parameterization:
//   pre^{l+1} = (alpha / sqrt(n_l)) W^l a^l + beta b^l,  a^{l+1} = mu(pre^{l+1})
// with alpha^2 + beta^2 = 1 and standard-normal parameters. Inputs are batched
// as rows of an N-by-n0 matrix.

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace ntopo {

/// relu: sqrt(2) max(0, x). cosine: lambda(omega) cos(omega x) with
/// lambda = sqrt(2 / (1 + exp(-2 omega^2))), so E[mu(X)^2] = 1 for X ~ N(0, 1).
enum class Activation { relu, cosine, identity };

const char* activation_name(Activation a);
/// Throws UnknownDual for unrecognized names.
Activation parse_activation(const std::string& name);

double cosine_scale(double omega);

struct NetworkConfig {
  /// n0, n1, ..., n_{L-1}, 1.
  std::vector<int> layer_sizes;
  double beta = 0.5;
  Activation activation = Activation::relu;
  double omega = 5.0;
  std::uint64_t seed = 0;

  double alpha() const;
  /// Number of weight layers L.
  int depth() const { return static_cast<int>(layer_sizes.size()) - 1; }
  Eigen::Index parameter_count() const;
  /// Offset of W^l in the flat parameter vector; b^l follows it.
  Eigen::Index weight_offset(int layer) const;
  void validate() const;
};

double activate(const NetworkConfig& config, double x);
double activate_derivative(const NetworkConfig& config, double x);

/// All weights and biases in one flat vector: for each layer, W^l
/// (n_{l+1} x n_l, column-major) followed by b^l.
struct NetworkParams {
  Eigen::VectorXd values;

  static NetworkParams initialize(const NetworkConfig& config);
  static NetworkParams zeros(const NetworkConfig& config);

  Eigen::Map<const Eigen::MatrixXd> weights(const NetworkConfig& config,
                                            int layer) const;
  Eigen::Map<const Eigen::VectorXd> bias(const NetworkConfig& config,
                                         int layer) const;
  Eigen::Map<Eigen::MatrixXd> weights(const NetworkConfig& config, int layer);
  Eigen::Map<Eigen::VectorXd> bias(const NetworkConfig& config, int layer);
};

struct ForwardCache {
  /// a^0 .. a^{L-1}, each N x n_l.
  std::vector<Eigen::MatrixXd> activations;
  /// Hidden pre-activations pre^1 .. pre^{L-1}; entry 0 is left empty.
  std::vector<Eigen::MatrixXd> preactivations;
  Eigen::VectorXd output;
};

ForwardCache forward(const NetworkParams& params, const NetworkConfig& config,
                     const Eigen::MatrixXd& inputs);

/// Gradient of sum_i grad_out_i f(z_i) over all parameters (flat layout).
Eigen::VectorXd backward(const NetworkParams& params,
                         const NetworkConfig& config, const ForwardCache& cache,
                         const Eigen::VectorXd& grad_out);

/// Per-input sensitivities d f(z_i) / d pre^{l+1}, for l = 0 .. L-1; row i
/// belongs to input i. The last entry is a column of ones.
std::vector<Eigen::MatrixXd> output_sensitivities(const NetworkParams& params,
                                                  const NetworkConfig& config,
                                                  const ForwardCache& cache);

/// Initial-output subtraction: x_i = f(z_i) - f0_i + log(V0 / (N - V0)).
struct ShiftedField {
  Eigen::VectorXd f0;
  double offset = 0.0;
};

ShiftedField make_shift(const NetworkParams& initial,
                        const NetworkConfig& config,
                        const Eigen::MatrixXd& inputs, double V0);

Eigen::VectorXd shifted_forward(const NetworkParams& params,
                                const NetworkConfig& config,
                                const ShiftedField& shift,
                                const Eigen::MatrixXd& inputs);

/// Dense N x P Jacobian, one backward pass per input. Throws BudgetExceeded
/// when N * P doubles exceed `budget_bytes`.
Eigen::MatrixXd jacobian_rows(const NetworkParams& params,
                              const NetworkConfig& config,
                              const Eigen::MatrixXd& inputs,
                              std::size_t budget_bytes = std::size_t{1} << 30);

// Checkpoint file, little-endian:
//   char[8]  magic "NTOPOCK1"
//   u32      number of layer sizes m, then m x u32 layer sizes
//   f64      alpha, f64 beta
//   u32      activation tag (0 relu, 1 cosine, 2 identity)
//   f64      omega
//   u64      seed
//   u64      parameter count P, then P x f64 parameters
//   u32      shift flag (0 or 1); when 1:
//     u32 nx, u32 ny, f64 V0, f64 offset, then nx*ny x f64 initial outputs
struct Checkpoint {
  NetworkConfig config;
  NetworkParams params;
  struct Shift {
    int nx = 0;
    int ny = 0;
    double V0 = 0.0;
    ShiftedField field;
  };
  std::optional<Shift> shift;
};

void save_checkpoint(const std::filesystem::path& path,
                     const Checkpoint& checkpoint);
/// Throws std::runtime_error on unreadable or malformed files.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace ntopo
