#pragma once

// Plane-stress bilinear-quad finite elements on a regular nx-by-ny grid of
// unit-square elements, with modified-SIMP stiffness interpolation.
//
// Numbering (fixed, regression artifacts depend on it):
//   node (ix, iy), ix in [0, nx], iy in [0, ny] counted from the top edge:
//     node = ix * (ny + 1) + iy
//   dofs of a node are interleaved: 2 * node (ux), 2 * node + 1 (uy, positive up)
//   element (ex, ey): e = ex * ny + ey

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <array>
#include <map>
#include <vector>

namespace ntopo {

struct ProblemSpec {
  int nx = 0;
  int ny = 0;
  std::vector<int> fixed_dofs;
  std::map<int, double> loads;
  double V0 = 0.0;
  double E0 = 1.0;
  double Emin = 1e-9;
  double nu = 0.3;
  double penal = 3.0;

  int num_elements() const { return nx * ny; }
  int num_nodes() const { return (nx + 1) * (ny + 1); }
  int num_dofs() const { return 2 * num_nodes(); }
  double volume_fraction() const { return V0 / num_elements(); }

  /// Throws InvalidProblem naming the offending field.
  void validate() const;
};

enum class LinearSolver { pcg, cholesky };

struct SolverOptions {
  LinearSolver kind = LinearSolver::pcg;
  /// Relative residual target ||K U - F|| / ||F||.
  double tolerance = 1e-10;
  /// Zero selects 10 * (number of free dofs).
  int max_iterations = 0;
  /// Optional warm start over all dofs; ignored when empty.
  Eigen::VectorXd initial_guess;
};

struct DisplacementField {
  Eigen::VectorXd U;
  double relative_residual = 0.0;
  int iterations = 0;
};

struct ComplianceResult {
  double compliance = 0.0;
  Eigen::VectorXd grad_y;
  DisplacementField displacement;
};

/// Unit-modulus element stiffness of a unit-square bilinear quad, local node
/// order lower-left, lower-right, upper-right, upper-left.
template <typename Scalar>
Eigen::Matrix<Scalar, 8, 8> element_stiffness(Scalar nu) {
  Eigen::Matrix<Scalar, 4, 4> a11, a12, b11, b12;
  a11 << 12, 3, -6, -3, 3, 12, 3, 0, -6, 3, 12, -3, -3, 0, -3, 12;
  a12 << -6, -3, 0, 3, -3, -6, -3, -6, 0, -3, -6, 3, 3, -6, 3, -6;
  b11 << -4, 3, -2, 9, 3, -4, -9, 4, -2, -9, -4, -3, 9, 4, -3, -4;
  b12 << 2, -3, 4, -9, -3, 2, 9, -2, 4, 9, 2, 3, -9, -2, 3, 2;
  Eigen::Matrix<Scalar, 8, 8> a, b;
  a << a11, a12, a12.transpose(), a11;
  b << b11, b12, b12.transpose(), b11;
  return (a + nu * b) / (Scalar(24) * (Scalar(1) - nu * nu));
}

/// Global dofs of element (ex, ey) in element_stiffness order.
std::array<int, 8> element_dofs(int ny, int ex, int ey);

Eigen::VectorXd load_vector(const ProblemSpec& spec);

/// Full (unreduced) global stiffness matrix K(y).
Eigen::SparseMatrix<double> assemble_stiffness(const ProblemSpec& spec,
                                               const Eigen::VectorXd& y);

DisplacementField assemble_and_solve(const ProblemSpec& spec,
                                     const Eigen::VectorXd& y,
                                     const SolverOptions& options = {});

ComplianceResult compliance_and_grad(const ProblemSpec& spec,
                                     const Eigen::VectorXd& y,
                                     const SolverOptions& options = {});

// Load/support presets. V0 is in element units.

/// Half MBB beam: rollers on the left edge (ux = 0), vertical roller at the
/// bottom-right node, unit downward load at the top-left node.
ProblemSpec mbb_half_beam(int nx, int ny, double V0);

/// Cantilever: left edge clamped, unit downward load at the right edge node
/// iy = ny / 2.
ProblemSpec cantilever(int nx, int ny, double V0);

/// Symmetric bridge: both bottom corners pinned, unit downward load at the
/// bottom node ix = nx / 2. Mirror-symmetric about x = nx / 2 when nx is even.
ProblemSpec symmetric_bridge(int nx, int ny, double V0);

}  // namespace ntopo
