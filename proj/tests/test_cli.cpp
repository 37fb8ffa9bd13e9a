#include "ntopo/cli.hpp"
#include "ntopo/io.hpp"
#include "ntopo/ntk.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

using namespace ntopo;
namespace fs = std::filesystem;

namespace {

struct Workspace {
  fs::path root;

  explicit Workspace(const std::string& name)
      : root(fs::temp_directory_path() / ("ntopo_cli_" + name)) {
    fs::remove_all(root);
    fs::create_directories(root);
  }
  ~Workspace() { fs::remove_all(root); }

  fs::path write(const std::string& name, const std::string& text) const {
    const fs::path p = root / name;
    std::ofstream(p) << text;
    return p;
  }
};

int run(const std::string& command, const fs::path& config,
        const fs::path& out = {}) {
  std::vector<std::string> args = {"topopt", command, "--config", config.string()};
  if (!out.empty()) {
    args.push_back("--out");
    args.push_back(out.string());
  }
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::ifstream in(p);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

const char* kSmallOptimize = R"([problem]
preset = mbb
nx = 12
ny = 4
volume_fraction = 0.5
[run]
method = nn
iters = 5
seed = 3
[embedding]
type = gaussian
n0 = 32
ell = 2
[network]
hidden = 16
beta = 0.5
activation = relu
[optimizer]
type = rprop
lr = 0.01
)";

std::string config_error(const std::string& text) {
  try {
    parse_run_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("config parsing") {
  const RunConfig c = parse_run_config(kSmallOptimize);
  CHECK(c.nx == 12);
  CHECK(c.n0 == 32);
  CHECK(c.hidden == std::vector<int>{16});
  CHECK(c.target_volume() == 24.0);
  CHECK(c.network(32).layer_sizes == std::vector<int>{32, 16, 1});
  CHECK(c.train_options().iters == 5);
  CHECK(c.raw.at("problem").at("nx") == "12");

  const RunConfig defaults = parse_run_config("");
  CHECK(defaults.nx == 60);
  CHECK(defaults.ny == 20);
  CHECK(defaults.beta == 0.5);
  CHECK(defaults.learning_rate == 1e-3);
  CHECK(defaults.iters == 300);

  CHECK(config_error("[problem]\nV0 = 2400\n").find("V0") != std::string::npos);
  CHECK(config_error("[run]\nmethod = sgd\n").find("run.method") != std::string::npos);
  CHECK(config_error("[problem]\nnx = sixty\n").find("problem.nx") != std::string::npos);
  CHECK(config_error("[problem]\ncolor = red\n").find("color") != std::string::npos);
  CHECK(config_error("[plot]\nx = 1\n").find("plot") != std::string::npos);
  CHECK(config_error("[radius]\nbetas =\n").find("radius.betas") != std::string::npos);
  CHECK(config_error("[ntk]\nfull_torus = true\n").find("ntk.full_torus") !=
        std::string::npos);
}

TEST_CASE("argument errors exit with code 2") {
  Workspace w("args");
  const fs::path cfg = w.write("c.ini", kSmallOptimize);
  const char* missing[] = {"topopt", "optimize"};
  CHECK(run_cli(2, missing) == 2);
  const char* unknown[] = {"topopt", "train", "--config", "c.ini"};
  CHECK(run_cli(4, unknown) == 2);
  CHECK(run("optimize", w.root / "absent.ini") == 2);
  CHECK(run("optimize", w.write("v0.ini", "[problem]\nnx = 4\nny = 4\nV0 = 16\n")) == 2);
  CHECK(run("optimize", w.write("m.ini", "[run]\nmethod = ga\n")) == 2);
  CHECK(run("spectrum", w.write("k.ini", "[problem]\nnx = 3\nny = 3\n[spectrum]\nk = 10\n"),
            w.root / "k") == 2);
  CHECK(run("radius", w.write("r.ini", "[radius]\nprofile = torus\nomegas =\n")) == 2);
  CHECK(run("upsample", w.write("u.ini", "[upsample]\ncheckpoint = " +
                                             (w.root / "none.bin").string() + "\n")) == 2);
  CHECK(!fs::exists(w.root / "k"));
}

TEST_CASE("optimize writes its artifacts idempotently") {
  Workspace w("optimize");
  const fs::path cfg = w.write("c.ini", kSmallOptimize);
  REQUIRE(run("optimize", cfg, w.root / "a") == 0);
  REQUIRE(run("optimize", cfg, w.root / "b") == 0);
  for (const char* f : {"density.pgm", "record.csv", "summary.json", "checkpoint.bin"}) {
    CHECK(fs::exists(w.root / "a" / f));
    CHECK(slurp(w.root / "a" / f) == slurp(w.root / "b" / f));
  }
  const std::string pgm = slurp(w.root / "a" / "density.pgm");
  CHECK(pgm.rfind("P5\n12 4\n255\n", 0) == 0);
  CHECK(pgm.size() == std::string("P5\n12 4\n255\n").size() + 48);
  const auto record = read_csv(w.root / "a" / "record.csv");
  CHECK(record.size() == 7);
  CHECK(record[0][0] == "iter");

  const std::string summary = slurp(w.root / "a" / "summary.json");
  CHECK(summary.find("\"final_compliance\"") != std::string::npos);
  CHECK(summary.find("\"seed\": 3") != std::string::npos);

  const fs::path mf = w.write("mf.ini", std::string(kSmallOptimize) + "[filter]\nrmin = 1.5\n");
  std::string text = slurp(mf);
  text.replace(text.find("method = nn"), 11, "method = mf");
  std::ofstream(mf) << text;
  REQUIRE(run("optimize", mf, w.root / "mf") == 0);
  CHECK(fs::exists(w.root / "mf" / "density.pgm"));
  CHECK(!fs::exists(w.root / "mf" / "checkpoint.bin"));
}

TEST_CASE("upsample from a checkpoint") {
  Workspace w("upsample");
  std::string text = kSmallOptimize;
  text.replace(text.find("type = gaussian"), 15, "type = torus");
  const fs::path cfg = w.write("c.ini", text);
  REQUIRE(run("optimize", cfg, w.root / "run") == 0);
  const fs::path up = w.write(
      "u.ini", text + "[upsample]\ncheckpoint = " + (w.root / "run" / "checkpoint.bin").string() +
                   "\nfactor = 3\n");
  REQUIRE(run("upsample", up, w.root / "up") == 0);
  CHECK(slurp(w.root / "up" / "coarse.pgm") == slurp(w.root / "run" / "density.pgm"));
  CHECK(slurp(w.root / "up" / "upsampled.pgm").rfind("P5\n36 12\n255\n", 0) == 0);
  CHECK(slurp(w.root / "up" / "summary.json").find("block_average_mean_abs_difference") !=
        std::string::npos);
}

TEST_CASE("radius sweep matches the direct computation") {
  Workspace w("radius");
  const fs::path single = w.write("s.ini", "[problem]\nnx = 30\nny = 10\n[radius]\nprofile = gaussian\nbetas = 0.3\nells = 2.5\n");
  REQUIRE(run("radius", single, w.root / "s") == 0);
  const auto rows = read_csv(w.root / "s" / "radius.csv");
  REQUIRE(rows.size() == 2);
  CHECK(rows[0] == std::vector<std::string>{"beta", "omega", "ell", "radius"});
  CHECK(rows[1][3] ==
        format_double(half_max_radius(profile_gaussian(0.3, 2.5), std::hypot(30.0, 10.0))));

  const fs::path sweep = w.write("e.ini", "[radius]\nprofile = gaussian\nbetas = 0.5\nells = 0.5, 1, 1.4, 2, 4\n");
  REQUIRE(run("radius", sweep, w.root / "e") == 0);
  const auto ell_rows = read_csv(w.root / "e" / "radius.csv");
  REQUIRE(ell_rows.size() == 6);
  for (std::size_t i = 2; i < ell_rows.size(); ++i)
    CHECK(std::stod(ell_rows[i][3]) > std::stod(ell_rows[i - 1][3]));

  const fs::path torus = w.write("t.ini", "[radius]\nprofile = torus\nbetas = 0.1, 0.5\nomegas = 2, 8\n");
  REQUIRE(run("radius", torus, w.root / "t") == 0);
  CHECK(read_csv(w.root / "t" / "radius.csv").size() == 5);
}

TEST_CASE("ntk command") {
  Workspace w("ntk");
  const fs::path one = w.write(
      "one.ini",
      "[problem]\nnx = 1\nny = 1\n[embedding]\ntype = torus\n[network]\nhidden = 8\n[ntk]\nmode = empirical\n");
  REQUIRE(run("ntk", one, w.root / "one") == 0);
  const auto row = read_csv(w.root / "one" / "empirical_row.csv");
  REQUIRE(row.size() == 2);
  CHECK(std::stod(row[1][3]) > 0.0);

  const fs::path full = w.write(
      "full.ini",
      "[problem]\nnx = 8\nny = 8\n[embedding]\ntype = torus\n[network]\nhidden = 16, 16\n"
      "beta = 0.2\nactivation = cosine\nomega = 3\n[ntk]\nmode = limiting\nfull_torus = true\n");
  REQUIRE(run("ntk", full, w.root / "full") == 0);
  const std::string summary = slurp(w.root / "full" / "summary.json");
  const auto pos = summary.find("\"circulant_deviation\": ");
  REQUIRE(pos != std::string::npos);
  CHECK(std::stod(summary.substr(pos + 23)) <= 1e-10);

  const fs::path compare = w.write(
      "cmp.ini",
      "[problem]\nnx = 4\nny = 4\n[embedding]\nn0 = 64\n[network]\nhidden = 256\n[ntk]\nmode = compare\n");
  REQUIRE(run("ntk", compare, w.root / "cmp") == 0);
  CHECK(slurp(w.root / "cmp" / "summary.json").find("relative_frobenius_error") !=
        std::string::npos);
}

TEST_CASE("spectrum command") {
  Workspace w("spectrum");
  const fs::path cfg = w.write(
      "s.ini", "[problem]\nnx = 8\nny = 8\n[embedding]\nn0 = 200\n[spectrum]\nk = 4\n");
  REQUIRE(run("spectrum", cfg, w.root / "s") == 0);
  const auto rows = read_csv(w.root / "s" / "eigenvalues.csv");
  REQUIRE(rows.size() == 5);
  for (std::size_t i = 2; i < rows.size(); ++i)
    CHECK(std::stod(rows[i][1]) <= std::stod(rows[i - 1][1]));
  CHECK(fs::exists(w.root / "s" / "eigenimage_003.pgm"));
  REQUIRE(run("spectrum", cfg, w.root / "t") == 0);
  CHECK(slurp(w.root / "s" / "eigenvalues.csv") == slurp(w.root / "t" / "eigenvalues.csv"));
}
