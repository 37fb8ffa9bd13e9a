#pragma once

// Coordinate embeddings feeding the density network. Grid points are element
// centers (ex + 0.5, ey + 0.5) in element units, listed with index ex * ny + ey.

#include <Eigen/Core>

#include <cstdint>
#include <numbers>
#include <variant>

namespace ntopo {

/// Raw coordinates, n0 = 2.
struct IdentityEmbedding {};

/// p -> r (cos d p1, sin d p1, cos d p2, sin d p2), n0 = 4.
struct TorusEmbedding {
  double radius = std::numbers::sqrt2;
  double delta = std::numbers::pi / 2.0;

  /// Default angle pi / (2 max(nx, ny)): the grid covers about half the torus.
  static TorusEmbedding for_grid(int nx, int ny);
  /// delta = 2 pi / n: an n-by-n grid wraps exactly once around the torus.
  static TorusEmbedding full_torus(int n);
};

enum class PhaseMode { zero, uniform };

/// Random Fourier features for the Gaussian kernel exp(-|p - p'|^2 / 2 ell^2):
/// p -> sqrt(2) sin(w_i . p + pi / 4 + b_i), w_i ~ N(0, I / ell^2).
struct GaussianEmbedding {
  int n0 = 1000;
  double ell = 4.0;
  Eigen::MatrixX2d frequencies;
  Eigen::VectorXd phases;
  std::uint64_t seed = 0;

  static GaussianEmbedding sample(int n0, double ell, std::uint64_t seed,
                                  PhaseMode phases = PhaseMode::zero);
};

using Embedding =
    std::variant<IdentityEmbedding, TorusEmbedding, GaussianEmbedding>;

int embedding_dim(const Embedding& embedding);

Eigen::Vector4d torus_embed(const TorusEmbedding& torus,
                            const Eigen::Vector2d& p);

Eigen::VectorXd gaussian_embed(const GaussianEmbedding& gaussian,
                               const Eigen::Vector2d& p);

/// Row i of the result embeds row i of `points`.
Eigen::MatrixXd embed_points(const Embedding& embedding,
                             const Eigen::MatrixX2d& points);

/// Element centers of an nx-by-ny grid whose elements have side `spacing`.
Eigen::MatrixX2d element_centers(int nx, int ny, double spacing = 1.0);

inline Eigen::MatrixXd embed_grid(const Embedding& embedding, int nx, int ny) {
  return embed_points(embedding, element_centers(nx, ny));
}

}  // namespace ntopo
