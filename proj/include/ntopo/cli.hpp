#pragma once

// Config-driven command-line front end:
//   topopt optimize|ntk|spectrum|radius|upsample --config <path>
//          [--out <dir>] [--seed <u64>]
// Exit codes: 0 success, 2 invalid configuration or arguments, 3 linear
// solver failure, 4 non-finite training state, 1 anything else.

#include "ntopo/embed.hpp"
#include "ntopo/errors.hpp"
#include "ntopo/fea.hpp"
#include "ntopo/net.hpp"
#include "ntopo/opt.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ntopo {

/// Invalid configuration; the message names the offending field.
class ConfigError : public Error {
 public:
  using Error::Error;
};

struct RunConfig {
  // [problem]
  std::string preset = "mbb";
  int nx = 60;
  int ny = 20;
  double volume_fraction = 0.5;
  std::optional<double> V0;
  double E0 = 1.0;
  double Emin = 1e-9;
  double nu = 0.3;
  double penal = 3.0;
  LinearSolver solver = LinearSolver::pcg;
  double tolerance = 1e-10;

  // [run]
  std::string method = "nn";
  int iters = 300;
  std::uint64_t seed = 0;

  // [embedding]
  std::string embedding = "gaussian";
  int n0 = 1000;
  double ell = 4.0;
  PhaseMode phases = PhaseMode::zero;
  double radius = 1.4142135623730951;
  /// Zero selects the grid default.
  double delta = 0.0;

  // [network]
  std::vector<int> hidden = {1000};
  double beta = 0.5;
  Activation activation = Activation::relu;
  double omega = 5.0;

  // [optimizer]
  OptimizerKind optimizer = OptimizerKind::rprop;
  double learning_rate = 1e-3;
  bool ramp = false;

  // [filter]
  double rmin = 2.4;

  // [ntk]
  std::string ntk_mode = "limiting";
  bool full_torus = false;

  // [spectrum]
  int k = 10;
  std::string kernel = "limiting";

  // [radius]
  std::string profile = "gaussian";
  std::vector<double> betas = {0.5};
  std::vector<double> omegas = {5.0};
  std::vector<double> ells = {4.0};
  int depth = 3;
  /// Zero selects the grid diagonal.
  double scan_max = 0.0;

  // [upsample]
  std::string checkpoint;
  int factor = 6;

  // [output]
  std::string out_dir = "out";
  bool timing = false;
  int drift_every = 0;

  /// Every key as written, by section, for echoing into summaries.
  using RawMap = std::map<std::string, std::map<std::string, std::string>>;
  RawMap raw;

  int num_elements() const { return nx * ny; }
  double target_volume() const;
  ProblemSpec problem() const;
  /// Embedding seeded from `network_seed` + 1.
  Embedding make_embedding(std::uint64_t network_seed) const;
  NetworkConfig network(int input_dim) const;
  TrainOptions train_options() const;
};

/// Parses and validates an INI file. Throws ConfigError.
RunConfig load_run_config(const std::filesystem::path& path);
RunConfig parse_run_config(const std::string& text);

int cmd_optimize(const RunConfig& config);
int cmd_ntk(const RunConfig& config);
int cmd_spectrum(const RunConfig& config);
int cmd_radius(const RunConfig& config);
int cmd_upsample(const RunConfig& config);

/// Full entry point: parses arguments, runs the command and maps errors to
/// exit codes.
int run_cli(int argc, const char* const* argv);

}  // namespace ntopo
