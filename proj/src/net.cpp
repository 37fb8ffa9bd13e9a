#include "ntopo/net.hpp"

#include "ntopo/errors.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <random>
#include <stdexcept>

namespace ntopo {

const char* activation_name(Activation a) {
  switch (a) {
    case Activation::relu:
      return "relu";
    case Activation::cosine:
      return "cosine";
    case Activation::identity:
      return "identity";
  }
  return "unknown";
}

Activation parse_activation(const std::string& name) {
  if (name == "relu") return Activation::relu;
  if (name == "cosine") return Activation::cosine;
  if (name == "identity") return Activation::identity;
  throw UnknownDual("unknown activation '" + name + "'");
}

double cosine_scale(double omega) {
  return std::sqrt(2.0 / (1.0 + std::exp(-2.0 * omega * omega)));
}

double NetworkConfig::alpha() const { return std::sqrt(1.0 - beta * beta); }

Eigen::Index NetworkConfig::parameter_count() const {
  return weight_offset(depth());
}

Eigen::Index NetworkConfig::weight_offset(int layer) const {
  Eigen::Index offset = 0;
  for (int l = 0; l < layer; ++l) {
    offset += static_cast<Eigen::Index>(layer_sizes[l + 1]) *
                  (layer_sizes[l] + 1);
  }
  return offset;
}

void NetworkConfig::validate() const {
  if (layer_sizes.size() < 2) {
    throw ShapeMismatch("network needs at least an input and an output layer");
  }
  for (int n : layer_sizes) {
    if (n < 1) throw ShapeMismatch("layer sizes must be positive");
  }
  if (layer_sizes.back() != 1) {
    throw ShapeMismatch("the output layer must have size 1");
  }
  if (!(beta >= 0.0 && beta <= 1.0)) {
    throw ShapeMismatch("beta must lie in [0, 1]");
  }
  if (activation == Activation::cosine && !(omega > 0.0)) {
    throw ShapeMismatch("cosine activation needs omega > 0");
  }
}

double activate(const NetworkConfig& config, double x) {
  switch (config.activation) {
    case Activation::relu:
      return x > 0.0 ? std::numbers::sqrt2 * x : 0.0;
    case Activation::cosine:
      return cosine_scale(config.omega) * std::cos(config.omega * x);
    case Activation::identity:
      return x;
  }
  return x;
}

double activate_derivative(const NetworkConfig& config, double x) {
  switch (config.activation) {
    case Activation::relu:
      return x > 0.0 ? std::numbers::sqrt2 : 0.0;
    case Activation::cosine:
      return -cosine_scale(config.omega) * config.omega *
             std::sin(config.omega * x);
    case Activation::identity:
      return 1.0;
  }
  return 1.0;
}

NetworkParams NetworkParams::initialize(const NetworkConfig& config) {
  config.validate();
  NetworkParams p;
  p.values.resize(config.parameter_count());
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index i = 0; i < p.values.size(); ++i) p.values(i) = normal(rng);
  return p;
}

NetworkParams NetworkParams::zeros(const NetworkConfig& config) {
  return {Eigen::VectorXd::Zero(config.parameter_count())};
}

Eigen::Map<const Eigen::MatrixXd> NetworkParams::weights(
    const NetworkConfig& config, int layer) const {
  return {values.data() + config.weight_offset(layer),
          config.layer_sizes[layer + 1], config.layer_sizes[layer]};
}

Eigen::Map<const Eigen::VectorXd> NetworkParams::bias(
    const NetworkConfig& config, int layer) const {
  const Eigen::Index rows = config.layer_sizes[layer + 1];
  return {values.data() + config.weight_offset(layer) +
              rows * config.layer_sizes[layer],
          rows};
}

Eigen::Map<Eigen::MatrixXd> NetworkParams::weights(const NetworkConfig& config,
                                                   int layer) {
  return {values.data() + config.weight_offset(layer),
          config.layer_sizes[layer + 1], config.layer_sizes[layer]};
}

Eigen::Map<Eigen::VectorXd> NetworkParams::bias(const NetworkConfig& config,
                                                int layer) {
  const Eigen::Index rows = config.layer_sizes[layer + 1];
  return {values.data() + config.weight_offset(layer) +
              rows * config.layer_sizes[layer],
          rows};
}

namespace {

void check_shapes(const NetworkParams& params, const NetworkConfig& config,
                  const Eigen::MatrixXd& inputs) {
  if (params.values.size() != config.parameter_count()) {
    throw ShapeMismatch("parameter vector does not match the configuration");
  }
  if (inputs.cols() != config.layer_sizes.front()) {
    throw ShapeMismatch("inputs have " + std::to_string(inputs.cols()) +
                        " columns, network expects " +
                        std::to_string(config.layer_sizes.front()));
  }
}

double layer_scale(const NetworkConfig& config, int layer) {
  return config.alpha() / std::sqrt(static_cast<double>(config.layer_sizes[layer]));
}

}  // namespace

ForwardCache forward(const NetworkParams& params, const NetworkConfig& config,
                     const Eigen::MatrixXd& inputs) {
  check_shapes(params, config, inputs);
  const int depth = config.depth();
  ForwardCache cache;
  cache.activations.reserve(depth);
  cache.preactivations.resize(depth);
  cache.activations.push_back(inputs);
  for (int l = 0; l < depth; ++l) {
    Eigen::MatrixXd pre = layer_scale(config, l) * cache.activations[l] *
                          params.weights(config, l).transpose();
    pre.rowwise() += config.beta * params.bias(config, l).transpose();
    if (l + 1 < depth) {
      cache.activations.push_back(
          pre.unaryExpr([&](double v) { return activate(config, v); }));
      cache.preactivations[l + 1] = std::move(pre);
    } else {
      cache.output = pre.col(0);
    }
  }
  return cache;
}

namespace {

void reverse_sweep(const NetworkParams& params, const NetworkConfig& config,
                   const ForwardCache& cache, Eigen::MatrixXd delta,
                   Eigen::VectorXd& grad) {
  for (int l = config.depth() - 1; l >= 0; --l) {
    const double scale = layer_scale(config, l);
    const Eigen::Index rows = config.layer_sizes[l + 1];
    const Eigen::Index cols = config.layer_sizes[l];
    double* base = grad.data() + config.weight_offset(l);
    Eigen::Map<Eigen::MatrixXd>(base, rows, cols).noalias() =
        scale * delta.transpose() * cache.activations[l];
    Eigen::Map<Eigen::VectorXd>(base + rows * cols, rows) =
        config.beta * delta.colwise().sum().transpose();
    if (l > 0) {
      Eigen::MatrixXd back = scale * delta * params.weights(config, l);
      delta = back.cwiseProduct(cache.preactivations[l].unaryExpr(
          [&](double v) { return activate_derivative(config, v); }));
    }
  }
}

}  // namespace

Eigen::VectorXd backward(const NetworkParams& params,
                         const NetworkConfig& config, const ForwardCache& cache,
                         const Eigen::VectorXd& grad_out) {
  if (grad_out.size() != cache.output.size()) {
    throw ShapeMismatch("grad_out length does not match the forward batch");
  }
  Eigen::VectorXd grad(config.parameter_count());
  reverse_sweep(params, config, cache, grad_out, grad);
  return grad;
}

std::vector<Eigen::MatrixXd> output_sensitivities(const NetworkParams& params,
                                                  const NetworkConfig& config,
                                                  const ForwardCache& cache) {
  const int depth = config.depth();
  std::vector<Eigen::MatrixXd> out(depth);
  Eigen::MatrixXd delta = Eigen::MatrixXd::Ones(cache.output.size(), 1);
  out[depth - 1] = delta;
  for (int l = depth - 1; l > 0; --l) {
    Eigen::MatrixXd back = layer_scale(config, l) * delta * params.weights(config, l);
    delta = back.cwiseProduct(cache.preactivations[l].unaryExpr(
        [&](double v) { return activate_derivative(config, v); }));
    out[l - 1] = delta;
  }
  return out;
}

ShiftedField make_shift(const NetworkParams& initial,
                        const NetworkConfig& config,
                        const Eigen::MatrixXd& inputs, double V0) {
  const double n = static_cast<double>(inputs.rows());
  if (!(V0 > 0.0 && V0 < n)) {
    throw InvalidVolume("V0 must satisfy 0 < V0 < N");
  }
  return {forward(initial, config, inputs).output, std::log(V0 / (n - V0))};
}

Eigen::VectorXd shifted_forward(const NetworkParams& params,
                                const NetworkConfig& config,
                                const ShiftedField& shift,
                                const Eigen::MatrixXd& inputs) {
  Eigen::VectorXd out = forward(params, config, inputs).output;
  if (out.size() != shift.f0.size()) {
    throw ShapeMismatch("shift was built on a different input batch");
  }
  return (out - shift.f0).array() + shift.offset;
}

Eigen::MatrixXd jacobian_rows(const NetworkParams& params,
                              const NetworkConfig& config,
                              const Eigen::MatrixXd& inputs,
                              std::size_t budget_bytes) {
  check_shapes(params, config, inputs);
  const Eigen::Index n = inputs.rows();
  const Eigen::Index p = config.parameter_count();
  const double bytes = static_cast<double>(n) * p * sizeof(double);
  if (bytes > static_cast<double>(budget_bytes)) {
    throw BudgetExceeded(
        "Jacobian needs " + std::to_string(bytes / (1 << 20)) +
        " MiB; subsample the inputs or use the streamed empirical NTK");
  }
  Eigen::MatrixXd jac(n, p);
  const Eigen::VectorXd one = Eigen::VectorXd::Ones(1);
  for (Eigen::Index i = 0; i < n; ++i) {
    const ForwardCache cache = forward(params, config, inputs.row(i));
    jac.row(i) = backward(params, config, cache, one).transpose();
  }
  return jac;
}

namespace {

template <typename T>
void put(std::ofstream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::ifstream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw std::runtime_error("truncated checkpoint");
  return value;
}

constexpr char kMagic[8] = {'N', 'T', 'O', 'P', 'O', 'C', 'K', '1'};

}  // namespace

void save_checkpoint(const std::filesystem::path& path,
                     const Checkpoint& checkpoint) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  const NetworkConfig& c = checkpoint.config;
  out.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(c.layer_sizes.size()));
  for (int n : c.layer_sizes) put<std::uint32_t>(out, static_cast<std::uint32_t>(n));
  put<double>(out, c.alpha());
  put<double>(out, c.beta);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(c.activation));
  put<double>(out, c.omega);
  put<std::uint64_t>(out, c.seed);
  const auto& values = checkpoint.params.values;
  put<std::uint64_t>(out, static_cast<std::uint64_t>(values.size()));
  out.write(reinterpret_cast<const char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(double)));
  put<std::uint32_t>(out, checkpoint.shift ? 1u : 0u);
  if (checkpoint.shift) {
    const auto& s = *checkpoint.shift;
    put<std::uint32_t>(out, static_cast<std::uint32_t>(s.nx));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(s.ny));
    put<double>(out, s.V0);
    put<double>(out, s.field.offset);
    out.write(reinterpret_cast<const char*>(s.field.f0.data()),
              static_cast<std::streamsize>(s.field.f0.size() * sizeof(double)));
  }
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error(path.string() + " is not a network checkpoint");
  }
  Checkpoint ck;
  const auto count = get<std::uint32_t>(in);
  if (count < 2 || count > 64) throw std::runtime_error("bad layer count");
  for (std::uint32_t i = 0; i < count; ++i)
    ck.config.layer_sizes.push_back(static_cast<int>(get<std::uint32_t>(in)));
  get<double>(in);  // alpha is derived from beta
  ck.config.beta = get<double>(in);
  const auto tag = get<std::uint32_t>(in);
  if (tag > 2) throw std::runtime_error("bad activation tag");
  ck.config.activation = static_cast<Activation>(tag);
  ck.config.omega = get<double>(in);
  ck.config.seed = get<std::uint64_t>(in);
  ck.config.validate();
  const auto p = get<std::uint64_t>(in);
  if (static_cast<Eigen::Index>(p) != ck.config.parameter_count()) {
    throw std::runtime_error("parameter count does not match layer sizes");
  }
  ck.params.values.resize(static_cast<Eigen::Index>(p));
  in.read(reinterpret_cast<char*>(ck.params.values.data()),
          static_cast<std::streamsize>(p * sizeof(double)));
  if (!in) throw std::runtime_error("truncated checkpoint");
  if (get<std::uint32_t>(in) == 1u) {
    Checkpoint::Shift s;
    s.nx = static_cast<int>(get<std::uint32_t>(in));
    s.ny = static_cast<int>(get<std::uint32_t>(in));
    s.V0 = get<double>(in);
    s.field.offset = get<double>(in);
    s.field.f0.resize(static_cast<Eigen::Index>(s.nx) * s.ny);
    in.read(reinterpret_cast<char*>(s.field.f0.data()),
            static_cast<std::streamsize>(s.field.f0.size() * sizeof(double)));
    if (!in) throw std::runtime_error("truncated checkpoint");
    ck.shift = std::move(s);
  }
  return ck;
}

}  // namespace ntopo
