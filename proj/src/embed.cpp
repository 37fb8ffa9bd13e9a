#include "ntopo/embed.hpp"

#include "ntopo/errors.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace ntopo {

TorusEmbedding TorusEmbedding::for_grid(int nx, int ny) {
  return {std::numbers::sqrt2, std::numbers::pi / (2.0 * std::max(nx, ny))};
}

TorusEmbedding TorusEmbedding::full_torus(int n) {
  return {std::numbers::sqrt2, 2.0 * std::numbers::pi / n};
}

GaussianEmbedding GaussianEmbedding::sample(int n0, double ell,
                                            std::uint64_t seed,
                                            PhaseMode phases) {
  if (n0 < 1 || !(ell > 0.0)) {
    throw ShapeMismatch("gaussian embedding needs n0 >= 1 and ell > 0");
  }
  GaussianEmbedding g;
  g.n0 = n0;
  g.ell = ell;
  g.seed = seed;
  g.frequencies.resize(n0, 2);
  g.phases = Eigen::VectorXd::Zero(n0);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0 / ell);
  for (int i = 0; i < n0; ++i) {
    g.frequencies(i, 0) = normal(rng);
    g.frequencies(i, 1) = normal(rng);
  }
  if (phases == PhaseMode::uniform) {
    std::uniform_real_distribution<double> uniform(0.0,
                                                   2.0 * std::numbers::pi);
    for (int i = 0; i < n0; ++i) g.phases(i) = uniform(rng);
  }
  return g;
}

int embedding_dim(const Embedding& embedding) {
  struct {
    int operator()(const IdentityEmbedding&) const { return 2; }
    int operator()(const TorusEmbedding&) const { return 4; }
    int operator()(const GaussianEmbedding& g) const { return g.n0; }
  } visitor;
  return std::visit(visitor, embedding);
}

Eigen::Vector4d torus_embed(const TorusEmbedding& torus,
                            const Eigen::Vector2d& p) {
  const double a = torus.delta * p(0);
  const double b = torus.delta * p(1);
  return torus.radius *
         Eigen::Vector4d(std::cos(a), std::sin(a), std::cos(b), std::sin(b));
}

Eigen::VectorXd gaussian_embed(const GaussianEmbedding& gaussian,
                               const Eigen::Vector2d& p) {
  const Eigen::ArrayXd arg = (gaussian.frequencies * p).array() +
                             std::numbers::pi / 4.0 + gaussian.phases.array();
  return std::numbers::sqrt2 * arg.sin().matrix();
}

Eigen::MatrixXd embed_points(const Embedding& embedding,
                             const Eigen::MatrixX2d& points) {
  const Eigen::Index n = points.rows();
  if (const auto* torus = std::get_if<TorusEmbedding>(&embedding)) {
    Eigen::MatrixXd z(n, 4);
    for (Eigen::Index i = 0; i < n; ++i)
      z.row(i) = torus_embed(*torus, points.row(i).transpose()).transpose();
    return z;
  }
  if (const auto* gaussian = std::get_if<GaussianEmbedding>(&embedding)) {
    Eigen::ArrayXXd arg = points * gaussian->frequencies.transpose();
    arg.rowwise() +=
        (gaussian->phases.array() + std::numbers::pi / 4.0).transpose();
    return std::numbers::sqrt2 * arg.sin().matrix();
  }
  return points;
}

Eigen::MatrixX2d element_centers(int nx, int ny, double spacing) {
  Eigen::MatrixX2d centers(static_cast<Eigen::Index>(nx) * ny, 2);
  for (int ex = 0; ex < nx; ++ex) {
    for (int ey = 0; ey < ny; ++ey) {
      centers(ex * ny + ey, 0) = (ex + 0.5) * spacing;
      centers(ex * ny + ey, 1) = (ey + 0.5) * spacing;
    }
  }
  return centers;
}

}  // namespace ntopo
