#include "ntopo/cli.hpp"

#include "ntopo/density.hpp"
#include "ntopo/io.hpp"
#include "ntopo/ntk.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <Eigen/Core>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>

namespace ntopo {

namespace {

namespace pt = boost::property_tree;
namespace fs = std::filesystem;
using nlohmann::json;

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"problem",
       {"preset", "nx", "ny", "volume_fraction", "V0", "E0", "Emin", "nu",
        "penal", "solver", "tolerance"}},
      {"run", {"method", "iters", "seed"}},
      {"embedding", {"type", "n0", "ell", "phases", "radius", "delta"}},
      {"network", {"hidden", "beta", "activation", "omega"}},
      {"optimizer", {"type", "lr", "ramp"}},
      {"filter", {"rmin"}},
      {"ntk", {"mode", "full_torus"}},
      {"spectrum", {"k", "kernel"}},
      {"radius", {"profile", "betas", "omegas", "ells", "depth", "scan_max"}},
      {"upsample", {"checkpoint", "factor"}},
      {"output", {"dir", "timing", "drift_every"}},
  };
  return keys;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

template <typename T>
bool parse_value(const std::string& text, T& out) {
  std::istringstream in(text);
  in >> out;
  if (in.fail()) return false;
  if (!in.eof()) in >> std::ws;
  return in.eof();
}

class Reader {
 public:
  explicit Reader(const RunConfig::RawMap& raw) : raw_(raw) {}

  const std::string* find(const std::string& section,
                          const std::string& key) const {
    auto s = raw_.find(section);
    if (s == raw_.end()) return nullptr;
    auto k = s->second.find(key);
    return k == s->second.end() ? nullptr : &k->second;
  }

  void read(const std::string& section, const std::string& key,
            std::string& value) const {
    if (const auto* v = find(section, key)) value = *v;
  }

  template <typename T>
  void read(const std::string& section, const std::string& key,
            T& value) const {
    const auto* v = find(section, key);
    if (!v) return;
    T parsed{};
    if constexpr (std::is_same_v<T, bool>) {
      if (*v == "true" || *v == "1" || *v == "yes" || *v == "on") {
        value = true;
        return;
      }
      if (*v == "false" || *v == "0" || *v == "no" || *v == "off") {
        value = false;
        return;
      }
      fail(section, key, *v);
    } else {
      if (!parse_value(*v, parsed)) fail(section, key, *v);
      value = parsed;
    }
  }

  template <typename T>
  void read_list(const std::string& section, const std::string& key,
                 std::vector<T>& value) const {
    const auto* v = find(section, key);
    if (!v) return;
    value.clear();
    std::stringstream ss(*v);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (item.empty()) continue;
      T parsed{};
      if (!parse_value(item, parsed)) fail(section, key, *v);
      value.push_back(parsed);
    }
  }

  [[noreturn]] static void fail(const std::string& section,
                                const std::string& key,
                                const std::string& text) {
    throw ConfigError(section + "." + key + ": cannot parse '" + text + "'");
  }

 private:
  const RunConfig::RawMap& raw_;
};

void require(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw ConfigError(field + " " + what);
}

void validate(const RunConfig& c) {
  require(c.preset == "mbb" || c.preset == "cantilever" ||
              c.preset == "bridge",
          "problem.preset", "must be one of mbb, cantilever, bridge");
  require(c.nx >= 1 && c.ny >= 1, "problem.nx/ny", "must be >= 1");
  require(c.nx <= 4096 && c.ny <= 4096, "problem.nx/ny", "must be <= 4096");
  const double n = c.num_elements();
  if (c.V0) {
    require(*c.V0 > 0.0 && *c.V0 < n, "problem.V0",
            "must satisfy 0 < V0 < N = " + std::to_string(c.nx * c.ny));
  } else {
    require(c.volume_fraction > 0.0 && c.volume_fraction < 1.0,
            "problem.volume_fraction (V0 / N)", "must lie in (0, 1)");
  }
  require(c.E0 > 0.0 && c.Emin >= 0.0 && c.Emin < c.E0, "problem.Emin",
          "must satisfy 0 <= Emin < E0");
  require(c.nu > -1.0 && c.nu < 0.5, "problem.nu", "must lie in (-1, 0.5)");
  require(c.penal >= 1.0, "problem.penal", "must be >= 1");
  require(c.tolerance > 0.0 && c.tolerance < 1.0, "problem.tolerance",
          "must lie in (0, 1)");

  require(c.method == "nn" || c.method == "mf", "run.method",
          "must be nn or mf, got '" + c.method + "'");
  require(c.iters >= 0, "run.iters", "must be >= 0");

  require(c.embedding == "torus" || c.embedding == "gaussian" ||
              c.embedding == "none",
          "embedding.type", "must be torus, gaussian or none");
  require(c.n0 >= 1, "embedding.n0", "must be >= 1");
  require(c.ell > 0.0, "embedding.ell", "must be > 0");
  require(c.radius > 0.0, "embedding.radius", "must be > 0");
  require(c.delta >= 0.0 && c.delta <= std::numbers::pi, "embedding.delta",
          "must lie in [0, pi] (0 selects the default)");

  require(!c.hidden.empty(), "network.hidden", "must list at least one width");
  for (int w : c.hidden) require(w >= 1, "network.hidden", "widths must be >= 1");
  require(c.beta >= 0.0 && c.beta < 1.0, "network.beta", "must lie in [0, 1)");
  require(c.omega > 0.0, "network.omega", "must be > 0");

  require(c.learning_rate > 0.0, "optimizer.lr", "must be > 0");
  require(c.rmin >= 1.0, "filter.rmin", "must be >= 1");

  require(c.ntk_mode == "empirical" || c.ntk_mode == "limiting" ||
              c.ntk_mode == "compare",
          "ntk.mode", "must be empirical, limiting or compare");
  if (c.full_torus) {
    require(c.nx == c.ny, "ntk.full_torus", "needs a square grid");
    require(c.embedding == "torus", "ntk.full_torus", "needs embedding.type = torus");
  }

  require(c.k >= 1, "spectrum.k", "must be >= 1");
  require(c.kernel == "limiting" || c.kernel == "empirical", "spectrum.kernel",
          "must be limiting or empirical");

  require(c.profile == "gaussian" || c.profile == "torus", "radius.profile",
          "must be gaussian or torus");
  require(!c.betas.empty(), "radius.betas", "sweep range is empty");
  for (double b : c.betas)
    require(b >= 0.0 && b < 1.0, "radius.betas", "entries must lie in [0, 1)");
  if (c.profile == "gaussian") {
    require(!c.ells.empty(), "radius.ells", "sweep range is empty");
    for (double l : c.ells) require(l > 0.0, "radius.ells", "entries must be > 0");
  } else {
    require(!c.omegas.empty(), "radius.omegas", "sweep range is empty");
    for (double w : c.omegas)
      require(w > 0.0, "radius.omegas", "entries must be > 0");
  }
  require(c.depth >= 2, "radius.depth", "must be >= 2");
  require(c.scan_max >= 0.0, "radius.scan_max", "must be >= 0");

  require(c.factor >= 1, "upsample.factor", "must be >= 1");
  require(!c.out_dir.empty(), "output.dir", "must not be empty");
  require(c.drift_every >= 0, "output.drift_every", "must be >= 0");
}

json config_echo(const RunConfig& c) {
  json echo = json::object();
  for (const auto& [section, keys] : c.raw)
    for (const auto& [key, value] : keys) echo[section][key] = value;
  echo["run"]["seed"] = std::to_string(c.seed);
  return echo;
}

fs::path prepare_output(const RunConfig& c) {
  const fs::path out(c.out_dir);
  fs::create_directories(out);
  return out;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

int center_element(const RunConfig& c) { return (c.nx / 2) * c.ny + c.ny / 2; }

Eigen::MatrixXd row_image(const Eigen::MatrixXd& gram, int row, int nx,
                          int ny) {
  Eigen::MatrixXd image(nx, ny);
  for (int ex = 0; ex < nx; ++ex)
    for (int ey = 0; ey < ny; ++ey) image(ex, ey) = gram(row, ex * ny + ey);
  return image;
}

std::vector<std::vector<double>> row_table(const Eigen::MatrixXd& gram,
                                           int row, int nx, int ny) {
  std::vector<std::vector<double>> rows;
  for (int ex = 0; ex < nx; ++ex)
    for (int ey = 0; ey < ny; ++ey)
      rows.push_back({static_cast<double>(ex * ny + ey),
                      static_cast<double>(ex), static_cast<double>(ey),
                      gram(row, ex * ny + ey)});
  return rows;
}

/// Largest deviation of any Gram row from the cyclic shift of row 0.
double circulant_deviation(const Eigen::MatrixXd& gram, int n) {
  double worst = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
          const double shifted = gram(0, ((k - i + n) % n) * n + (l - j + n) % n);
          worst = std::max(worst, std::abs(gram(i * n + j, k * n + l) - shifted));
        }
  return worst;
}

Embedding analysis_embedding(const RunConfig& c) {
  if (c.full_torus) return TorusEmbedding{c.radius, 2.0 * std::numbers::pi / c.nx};
  return c.make_embedding(c.seed);
}

}  // namespace

double RunConfig::target_volume() const {
  return V0 ? *V0 : volume_fraction * num_elements();
}

ProblemSpec RunConfig::problem() const {
  ProblemSpec spec;
  if (preset == "mbb") {
    spec = mbb_half_beam(nx, ny, target_volume());
  } else if (preset == "cantilever") {
    spec = cantilever(nx, ny, target_volume());
  } else {
    spec = symmetric_bridge(nx, ny, target_volume());
  }
  spec.E0 = E0;
  spec.Emin = Emin;
  spec.nu = nu;
  spec.penal = penal;
  spec.validate();
  return spec;
}

Embedding RunConfig::make_embedding(std::uint64_t network_seed) const {
  if (embedding == "torus") {
    TorusEmbedding t = TorusEmbedding::for_grid(nx, ny);
    t.radius = radius;
    if (delta > 0.0) t.delta = delta;
    return t;
  }
  if (embedding == "gaussian") {
    return GaussianEmbedding::sample(n0, ell, network_seed + 1, phases);
  }
  return IdentityEmbedding{};
}

NetworkConfig RunConfig::network(int input_dim) const {
  NetworkConfig net;
  net.layer_sizes.push_back(input_dim);
  net.layer_sizes.insert(net.layer_sizes.end(), hidden.begin(), hidden.end());
  net.layer_sizes.push_back(1);
  net.beta = beta;
  net.activation = activation;
  net.omega = omega;
  net.seed = seed;
  return net;
}

TrainOptions RunConfig::train_options() const {
  TrainOptions o;
  o.optimizer = optimizer;
  o.learning_rate = learning_rate;
  o.ramp = ramp;
  o.iters = iters;
  o.solver.kind = solver;
  o.solver.tolerance = tolerance;
  o.drift_every = drift_every;
  return o;
}

RunConfig parse_run_config(const std::string& text) {
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }

  RunConfig c;
  for (const auto& [section, node] : tree) {
    auto known = known_keys().find(section);
    if (node.empty() && !node.data().empty()) {
      throw ConfigError(section + ": key outside of any section");
    }
    if (known == known_keys().end()) {
      throw ConfigError(section + ": unknown section");
    }
    for (const auto& [key, value] : node) {
      if (!known->second.count(key)) {
        throw ConfigError(section + "." + key + ": unknown key");
      }
      c.raw[section][key] = trim(value.get_value<std::string>());
    }
  }

  const Reader r(c.raw);
  r.read("problem", "preset", c.preset);
  r.read("problem", "nx", c.nx);
  r.read("problem", "ny", c.ny);
  r.read("problem", "volume_fraction", c.volume_fraction);
  if (r.find("problem", "V0")) {
    double v = 0.0;
    r.read("problem", "V0", v);
    c.V0 = v;
  }
  r.read("problem", "E0", c.E0);
  r.read("problem", "Emin", c.Emin);
  r.read("problem", "nu", c.nu);
  r.read("problem", "penal", c.penal);
  std::string solver = "pcg";
  r.read("problem", "solver", solver);
  if (solver == "pcg") {
    c.solver = LinearSolver::pcg;
  } else if (solver == "cholesky") {
    c.solver = LinearSolver::cholesky;
  } else {
    throw ConfigError("problem.solver must be pcg or cholesky");
  }
  r.read("problem", "tolerance", c.tolerance);

  r.read("run", "method", c.method);
  r.read("run", "iters", c.iters);
  r.read("run", "seed", c.seed);

  r.read("embedding", "type", c.embedding);
  r.read("embedding", "n0", c.n0);
  r.read("embedding", "ell", c.ell);
  std::string phases = "zero";
  r.read("embedding", "phases", phases);
  if (phases == "zero") {
    c.phases = PhaseMode::zero;
  } else if (phases == "uniform") {
    c.phases = PhaseMode::uniform;
  } else {
    throw ConfigError("embedding.phases must be zero or uniform");
  }
  r.read("embedding", "radius", c.radius);
  r.read("embedding", "delta", c.delta);

  r.read_list("network", "hidden", c.hidden);
  r.read("network", "beta", c.beta);
  if (const auto* a = r.find("network", "activation")) {
    try {
      c.activation = parse_activation(*a);
    } catch (const Error&) {
      throw ConfigError("network.activation: unknown activation '" + *a + "'");
    }
  }
  r.read("network", "omega", c.omega);

  if (const auto* o = r.find("optimizer", "type")) {
    try {
      c.optimizer = parse_optimizer(*o);
    } catch (const std::invalid_argument&) {
      throw ConfigError("optimizer.type must be gd, adam or rprop");
    }
  }
  r.read("optimizer", "lr", c.learning_rate);
  r.read("optimizer", "ramp", c.ramp);

  r.read("filter", "rmin", c.rmin);

  r.read("ntk", "mode", c.ntk_mode);
  r.read("ntk", "full_torus", c.full_torus);

  r.read("spectrum", "k", c.k);
  r.read("spectrum", "kernel", c.kernel);

  r.read("radius", "profile", c.profile);
  r.read_list("radius", "betas", c.betas);
  r.read_list("radius", "omegas", c.omegas);
  r.read_list("radius", "ells", c.ells);
  r.read("radius", "depth", c.depth);
  r.read("radius", "scan_max", c.scan_max);

  r.read("upsample", "checkpoint", c.checkpoint);
  r.read("upsample", "factor", c.factor);

  r.read("output", "dir", c.out_dir);
  r.read("output", "timing", c.timing);
  r.read("output", "drift_every", c.drift_every);

  validate(c);
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot read '" + path.string() + "'");
  std::stringstream text;
  text << in.rdbuf();
  return parse_run_config(text.str());
}

int cmd_optimize(const RunConfig& c) {
  const ProblemSpec spec = c.problem();
  const TrainOptions options = c.train_options();
  const fs::path out = prepare_output(c);

  json summary;
  summary["command"] = "optimize";
  summary["method"] = c.method;
  summary["seed"] = c.seed;
  summary["config"] = config_echo(c);

  DensityTransform density;
  RunRecord record;
  if (c.method == "nn") {
    const Embedding embedding = c.make_embedding(c.seed);
    const NetworkConfig net = c.network(embedding_dim(embedding));
    NnResult result = train_nn(spec, embedding, net, options);
    Checkpoint checkpoint{net, result.params,
                          Checkpoint::Shift{c.nx, c.ny, spec.V0, result.shift}};
    save_checkpoint(out / "checkpoint.bin", checkpoint);
    density = std::move(result.density);
    record = std::move(result.record);
  } else {
    const ConeFilter filter(c.nx, c.ny, c.rmin);
    MfResult result = train_mf(spec, filter, options);
    density = std::move(result.density);
    record = std::move(result.record);
  }

  write_density_pgm(out / "density.pgm", density.y, c.nx, c.ny);
  write_record_csv(out / "record.csv", record, c.timing);

  summary["initial_compliance"] = record.iterations.front().compliance;
  summary["final_compliance"] = record.final().compliance;
  summary["gray_fraction"] = gray_fraction(density.y);
  summary["checkerboard_index"] = checkerboard_index(density.y, c.nx, c.ny);
  summary["mirror_asymmetry"] = mirror_asymmetry(density.y, c.nx, c.ny);
  summary["max_volume_error"] = record.max_volume_error();
  summary["iterations"] = c.iters;
  write_json(out / "summary.json", summary);
  return 0;
}

int cmd_ntk(const RunConfig& c) {
  const Embedding embedding = analysis_embedding(c);
  const Eigen::MatrixXd inputs = embed_grid(embedding, c.nx, c.ny);
  const NetworkConfig net = c.network(static_cast<int>(inputs.cols()));
  const fs::path out = prepare_output(c);
  const int row = center_element(c);

  json summary;
  summary["command"] = "ntk";
  summary["mode"] = c.ntk_mode;
  summary["seed"] = c.seed;
  summary["elements"] = c.num_elements();
  summary["center_element"] = row;
  summary["config"] = config_echo(c);

  const std::vector<std::string> header = {"element", "ex", "ey", "value"};
  Eigen::MatrixXd limiting;
  Eigen::MatrixXd empirical;
  if (c.ntk_mode != "empirical") {
    limiting = limiting_ntk(net, inputs).gram;
    write_csv(out / "limiting_row.csv", header,
              row_table(limiting, row, c.nx, c.ny));
    write_image_pgm(out / "limiting_row.pgm",
                    row_image(limiting, row, c.nx, c.ny));
    summary["limiting_diagonal"] = limiting(row, row);
    if (c.full_torus) {
      summary["circulant_deviation"] = circulant_deviation(limiting, c.nx);
    }
  }
  if (c.ntk_mode != "limiting") {
    const NetworkParams params = NetworkParams::initialize(net);
    empirical = empirical_ntk(params, net, inputs).gram;
    write_csv(out / "empirical_row.csv", header,
              row_table(empirical, row, c.nx, c.ny));
    write_image_pgm(out / "empirical_row.pgm",
                    row_image(empirical, row, c.nx, c.ny));
    summary["empirical_diagonal"] = empirical(row, row);
  }
  if (c.ntk_mode == "compare") {
    summary["relative_frobenius_error"] =
        relative_frobenius_error(empirical, limiting);
  }
  write_json(out / "summary.json", summary);
  return 0;
}

int cmd_spectrum(const RunConfig& c) {
  if (c.k > c.num_elements()) {
    throw ConfigError("spectrum.k = " + std::to_string(c.k) +
                      " exceeds the number of elements N = " +
                      std::to_string(c.num_elements()));
  }
  if (c.num_elements() > 4096) {
    throw ConfigError("problem.nx/ny: spectrum needs N <= 4096");
  }
  const Embedding embedding = analysis_embedding(c);
  const Eigen::MatrixXd inputs = embed_grid(embedding, c.nx, c.ny);
  const NetworkConfig net = c.network(static_cast<int>(inputs.cols()));
  const Eigen::MatrixXd gram =
      c.kernel == "limiting"
          ? limiting_ntk(net, inputs).gram
          : empirical_ntk(NetworkParams::initialize(net), net, inputs).gram;
  const Spectrum s = spectrum(gram, c.k);
  const fs::path out = prepare_output(c);

  std::vector<std::vector<double>> rows;
  json energies = json::array();
  for (int i = 0; i < c.k; ++i) {
    const Eigen::MatrixXd image = eigenimage(s, i, c.nx, c.ny);
    const double energy = dirichlet_energy(image);
    rows.push_back({static_cast<double>(i), s.values(i), energy});
    energies.push_back(energy);
    char name[32];
    std::snprintf(name, sizeof name, "eigenimage_%03d.pgm", i);
    write_image_pgm(out / name, image);
  }
  write_csv(out / "eigenvalues.csv", {"rank", "eigenvalue", "dirichlet_energy"},
            rows);

  json summary;
  summary["command"] = "spectrum";
  summary["kernel"] = c.kernel;
  summary["k"] = c.k;
  summary["seed"] = c.seed;
  summary["eigenvalues"] = std::vector<double>(s.values.data(),
                                               s.values.data() + s.values.size());
  summary["dirichlet_energy"] = energies;
  summary["config"] = config_echo(c);
  write_json(out / "summary.json", summary);
  return 0;
}

int cmd_radius(const RunConfig& c) {
  const double diagonal = std::hypot(c.nx, c.ny);
  const double delta =
      c.delta > 0.0 ? c.delta : std::numbers::pi / (2.0 * std::max(c.nx, c.ny));
  std::vector<std::vector<double>> rows;
  const auto nan = std::numeric_limits<double>::quiet_NaN();
  auto radius_of = [&](const KernelProfile& p, double scan) {
    try {
      return half_max_radius(p, scan);
    } catch (const DegenerateProfile&) {
      return nan;
    }
  };
  if (c.profile == "gaussian") {
    const double scan = c.scan_max > 0.0 ? c.scan_max : diagonal;
    for (double beta : c.betas)
      for (double ell : c.ells)
        rows.push_back({beta, nan, ell,
                        radius_of(profile_gaussian(beta, ell), scan)});
  } else {
    const double scan = std::min(c.scan_max > 0.0 ? c.scan_max : diagonal,
                                 std::numbers::pi / delta);
    for (double beta : c.betas)
      for (double omega : c.omegas)
        rows.push_back({beta, omega, nan,
                        radius_of(profile_torus(beta, omega, delta, c.depth),
                                  scan)});
  }
  const fs::path out = prepare_output(c);
  write_csv(out / "radius.csv", {"beta", "omega", "ell", "radius"}, rows);
  json summary;
  summary["command"] = "radius";
  summary["profile"] = c.profile;
  summary["points"] = rows.size();
  summary["config"] = config_echo(c);
  write_json(out / "summary.json", summary);
  return 0;
}

int cmd_upsample(const RunConfig& c) {
  if (c.checkpoint.empty()) {
    throw ConfigError("upsample.checkpoint is not set");
  }
  if (!fs::is_regular_file(c.checkpoint)) {
    throw ConfigError("upsample.checkpoint: no such file '" + c.checkpoint +
                      "'");
  }
  Checkpoint ck;
  try {
    ck = load_checkpoint(c.checkpoint);
  } catch (const std::runtime_error& e) {
    throw ConfigError(std::string("upsample.checkpoint: ") + e.what());
  }
  if (!ck.shift) {
    throw ConfigError("upsample.checkpoint has no stored initial field");
  }
  const auto& shift = *ck.shift;
  RunConfig grid = c;
  grid.nx = shift.nx;
  grid.ny = shift.ny;
  const Embedding embedding = grid.make_embedding(ck.config.seed);
  if (embedding_dim(embedding) != ck.config.layer_sizes.front()) {
    throw ConfigError("embedding section does not match the checkpoint input "
                      "size " + std::to_string(ck.config.layer_sizes.front()));
  }
  const DensityTransform coarse = upsample(ck.params, ck.config, embedding,
                                           shift.field, shift.nx, shift.ny, 1,
                                           shift.V0);
  const DensityTransform fine =
      upsample(ck.params, ck.config, embedding, shift.field, shift.nx,
               shift.ny, c.factor, shift.V0);
  const fs::path out = prepare_output(c);
  write_density_pgm(out / "coarse.pgm", coarse.y, shift.nx, shift.ny);
  write_density_pgm(out / "upsampled.pgm", fine.y, shift.nx * c.factor,
                    shift.ny * c.factor);
  const Eigen::VectorXd averaged =
      block_average(fine.y, shift.nx, shift.ny, c.factor);

  json summary;
  summary["command"] = "upsample";
  summary["factor"] = c.factor;
  summary["coarse_grid"] = {shift.nx, shift.ny};
  summary["fine_grid"] = {shift.nx * c.factor, shift.ny * c.factor};
  summary["block_average_mean_abs_difference"] =
      (averaged - coarse.y).cwiseAbs().mean();
  summary["fine_volume_fraction"] = fine.y.mean();
  summary["config"] = config_echo(c);
  write_json(out / "summary.json", summary);
  return 0;
}

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Neural-network topology optimization and NTK analysis"};
  std::string command;
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  app.add_option("command", command, "optimize|ntk|spectrum|radius|upsample")
      ->required()
      ->check(CLI::IsMember(
          {"optimize", "ntk", "spectrum", "radius", "upsample"}));
  app.add_option("--config", config_path, "INI run configuration")->required();
  auto* out_opt = app.add_option("--out", out_dir, "output directory");
  auto* seed_opt = app.add_option("--seed", seed, "random seed");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (const char* threads = std::getenv("TOPOPT_THREADS")) {
    const int n = std::atoi(threads);
    if (n > 0) Eigen::setNbThreads(n);
  }

  try {
    RunConfig config = load_run_config(config_path);
    if (*out_opt) config.out_dir = out_dir;
    if (*seed_opt) config.seed = seed;
    if (command == "optimize") return cmd_optimize(config);
    if (command == "ntk") return cmd_ntk(config);
    if (command == "spectrum") return cmd_spectrum(config);
    if (command == "radius") return cmd_radius(config);
    return cmd_upsample(config);
  } catch (const SingularSystem& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return 3;
  } catch (const NonFinite& e) {
    std::cerr << "non-finite training state: " << e.what() << '\n';
    return 4;
  } catch (const ConfigError& e) {
    std::cerr << "invalid config: " << e.what() << '\n';
    return 2;
  } catch (const InvalidProblem& e) {
    std::cerr << "invalid config: " << e.what() << '\n';
    return 2;
  } catch (const InvalidVolume& e) {
    std::cerr << "invalid config: " << e.what() << '\n';
    return 2;
  } catch (const ShapeMismatch& e) {
    std::cerr << "invalid config: " << e.what() << '\n';
    return 2;
  } catch (const UnknownDual& e) {
    std::cerr << "invalid config: " << e.what() << '\n';
    return 2;
  } catch (const SizeExceeded& e) {
    std::cerr << "invalid config: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace ntopo
