#include "ntopo/fea.hpp"

#include "ntopo/errors.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

namespace ntopo {

void ProblemSpec::validate() const {
  if (nx < 1 || ny < 1) {
    throw InvalidProblem("nx and ny must be at least 1");
  }
  const int n = num_elements();
  if (!(V0 > 0.0 && V0 < n)) {
    throw InvalidProblem("V0 must satisfy 0 < V0 < N (N = " +
                         std::to_string(n) + ")");
  }
  if (!(Emin < E0) || !(Emin > 0.0)) {
    throw InvalidProblem("Emin must satisfy 0 < Emin < E0");
  }
  if (!(nu > -1.0 && nu < 0.5)) {
    throw InvalidProblem("nu must lie in (-1, 0.5)");
  }
  if (!(penal >= 1.0)) {
    throw InvalidProblem("penal must be at least 1");
  }
  if (fixed_dofs.empty()) {
    throw InvalidProblem("fixed_dofs must not be empty");
  }
  const std::set<int> fixed(fixed_dofs.begin(), fixed_dofs.end());
  for (int d : fixed) {
    if (d < 0 || d >= num_dofs()) {
      throw InvalidProblem("fixed dof " + std::to_string(d) + " out of range");
    }
  }
  for (const auto& [dof, value] : loads) {
    if (dof < 0 || dof >= num_dofs()) {
      throw InvalidProblem("load dof " + std::to_string(dof) + " out of range");
    }
    if (fixed.count(dof)) {
      throw InvalidProblem("load dof " + std::to_string(dof) + " is fixed");
    }
    if (!std::isfinite(value)) {
      throw InvalidProblem("load values must be finite");
    }
  }
}

std::array<int, 8> element_dofs(int ny, int ex, int ey) {
  const int n1 = ex * (ny + 1) + ey;
  const int n2 = (ex + 1) * (ny + 1) + ey;
  return {2 * n1 + 2, 2 * n1 + 3, 2 * n2 + 2, 2 * n2 + 3,
          2 * n2,     2 * n2 + 1, 2 * n1,     2 * n1 + 1};
}

Eigen::VectorXd load_vector(const ProblemSpec& spec) {
  Eigen::VectorXd f = Eigen::VectorXd::Zero(spec.num_dofs());
  for (const auto& [dof, value] : spec.loads) f(dof) += value;
  return f;
}

namespace {

void check_densities(const ProblemSpec& spec, const Eigen::VectorXd& y) {
  if (y.size() != spec.num_elements()) {
    throw InvalidDensity("density vector has " + std::to_string(y.size()) +
                         " entries, expected " +
                         std::to_string(spec.num_elements()));
  }
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (!(y(i) >= 0.0 && y(i) <= 1.0)) {
      throw InvalidDensity("density " + std::to_string(i) +
                           " is outside [0, 1]");
    }
  }
}

Eigen::VectorXd element_moduli(const ProblemSpec& spec,
                               const Eigen::VectorXd& y) {
  return (spec.Emin +
          y.array().pow(spec.penal) * (spec.E0 - spec.Emin))
      .matrix();
}

// Maps every dof to its index among free dofs, -1 when fixed.
std::vector<int> free_dof_map(const ProblemSpec& spec, int& num_free) {
  std::vector<int> map(spec.num_dofs(), 0);
  for (int d : spec.fixed_dofs) map[d] = -1;
  num_free = 0;
  for (int& m : map) m = (m < 0) ? -1 : num_free++;
  return map;
}

}  // namespace

Eigen::SparseMatrix<double> assemble_stiffness(const ProblemSpec& spec,
                                               const Eigen::VectorXd& y) {
  check_densities(spec, y);
  const Eigen::Matrix<double, 8, 8> ke = element_stiffness(spec.nu);
  const Eigen::VectorXd modulus = element_moduli(spec, y);
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(64 * spec.num_elements());
  for (int ex = 0; ex < spec.nx; ++ex) {
    for (int ey = 0; ey < spec.ny; ++ey) {
      const auto dofs = element_dofs(spec.ny, ex, ey);
      const double e = modulus(ex * spec.ny + ey);
      for (int a = 0; a < 8; ++a)
        for (int b = 0; b < 8; ++b)
          triplets.emplace_back(dofs[a], dofs[b], e * ke(a, b));
    }
  }
  Eigen::SparseMatrix<double> k(spec.num_dofs(), spec.num_dofs());
  k.setFromTriplets(triplets.begin(), triplets.end());
  return k;
}

DisplacementField assemble_and_solve(const ProblemSpec& spec,
                                     const Eigen::VectorXd& y,
                                     const SolverOptions& options) {
  check_densities(spec, y);
  DisplacementField out;
  out.U = Eigen::VectorXd::Zero(spec.num_dofs());
  const Eigen::VectorXd f = load_vector(spec);
  const double f_norm = f.norm();
  if (f_norm == 0.0) return out;

  int num_free = 0;
  const std::vector<int> free = free_dof_map(spec, num_free);

  const Eigen::Matrix<double, 8, 8> ke = element_stiffness(spec.nu);
  const Eigen::VectorXd modulus = element_moduli(spec, y);
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(64 * spec.num_elements());
  for (int ex = 0; ex < spec.nx; ++ex) {
    for (int ey = 0; ey < spec.ny; ++ey) {
      const auto dofs = element_dofs(spec.ny, ex, ey);
      const double e = modulus(ex * spec.ny + ey);
      for (int a = 0; a < 8; ++a) {
        const int fa = free[dofs[a]];
        if (fa < 0) continue;
        for (int b = 0; b < 8; ++b) {
          const int fb = free[dofs[b]];
          if (fb >= 0) triplets.emplace_back(fa, fb, e * ke(a, b));
        }
      }
    }
  }
  Eigen::SparseMatrix<double> k(num_free, num_free);
  k.setFromTriplets(triplets.begin(), triplets.end());

  Eigen::VectorXd rhs(num_free);
  for (int d = 0; d < spec.num_dofs(); ++d)
    if (free[d] >= 0) rhs(free[d]) = f(d);

  Eigen::VectorXd u;
  if (options.kind == LinearSolver::pcg) {
    Eigen::ConjugateGradient<Eigen::SparseMatrix<double>,
                             Eigen::Lower | Eigen::Upper,
                             Eigen::DiagonalPreconditioner<double>>
        cg;
    cg.setTolerance(options.tolerance);
    cg.setMaxIterations(options.max_iterations > 0 ? options.max_iterations
                                                   : 10 * num_free);
    cg.compute(k);
    if (options.initial_guess.size() == spec.num_dofs()) {
      Eigen::VectorXd guess(num_free);
      for (int d = 0; d < spec.num_dofs(); ++d)
        if (free[d] >= 0) guess(free[d]) = options.initial_guess(d);
      u = cg.solveWithGuess(rhs, guess);
    } else {
      u = cg.solve(rhs);
    }
    out.iterations = static_cast<int>(cg.iterations());
  } else {
    Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt(k);
    if (llt.info() != Eigen::Success) {
      throw SingularSystem("Cholesky factorization failed; check supports");
    }
    u = llt.solve(rhs);
  }

  out.relative_residual = (k * u - rhs).norm() / f_norm;
  const double limit = std::max(options.tolerance, 1e-8);
  if (!std::isfinite(out.relative_residual) || out.relative_residual > limit) {
    throw SingularSystem("linear solve stalled at relative residual " +
                         std::to_string(out.relative_residual) +
                         "; check supports");
  }
  for (int d = 0; d < spec.num_dofs(); ++d)
    if (free[d] >= 0) out.U(d) = u(free[d]);
  return out;
}

ComplianceResult compliance_and_grad(const ProblemSpec& spec,
                                     const Eigen::VectorXd& y,
                                     const SolverOptions& options) {
  ComplianceResult out;
  out.displacement = assemble_and_solve(spec, y, options);
  const Eigen::VectorXd& u = out.displacement.U;
  const Eigen::Matrix<double, 8, 8> ke = element_stiffness(spec.nu);
  const Eigen::VectorXd modulus = element_moduli(spec, y);

  out.grad_y.resize(spec.num_elements());
  double compliance = 0.0;
  Eigen::Matrix<double, 8, 1> ue;
  for (int ex = 0; ex < spec.nx; ++ex) {
    for (int ey = 0; ey < spec.ny; ++ey) {
      const int e = ex * spec.ny + ey;
      const auto dofs = element_dofs(spec.ny, ex, ey);
      for (int a = 0; a < 8; ++a) ue(a) = u(dofs[a]);
      const double energy = ue.dot(ke * ue);
      compliance += modulus(e) * energy;
      out.grad_y(e) = -spec.penal * std::pow(y(e), spec.penal - 1.0) *
                      (spec.E0 - spec.Emin) * energy;
    }
  }
  out.compliance = compliance;
  return out;
}

ProblemSpec mbb_half_beam(int nx, int ny, double V0) {
  ProblemSpec spec;
  spec.nx = nx;
  spec.ny = ny;
  spec.V0 = V0;
  for (int iy = 0; iy <= ny; ++iy) spec.fixed_dofs.push_back(2 * iy);
  spec.fixed_dofs.push_back(2 * ((nx + 1) * (ny + 1)) - 1);
  spec.loads[1] = -1.0;
  return spec;
}

ProblemSpec cantilever(int nx, int ny, double V0) {
  ProblemSpec spec;
  spec.nx = nx;
  spec.ny = ny;
  spec.V0 = V0;
  for (int d = 0; d < 2 * (ny + 1); ++d) spec.fixed_dofs.push_back(d);
  const int node = nx * (ny + 1) + ny / 2;
  spec.loads[2 * node + 1] = -1.0;
  return spec;
}

ProblemSpec symmetric_bridge(int nx, int ny, double V0) {
  ProblemSpec spec;
  spec.nx = nx;
  spec.ny = ny;
  spec.V0 = V0;
  const int left = ny;
  const int right = nx * (ny + 1) + ny;
  spec.fixed_dofs = {2 * left, 2 * left + 1, 2 * right, 2 * right + 1};
  const int load = (nx / 2) * (ny + 1) + ny;
  spec.loads[2 * load + 1] = -1.0;
  return spec;
}

}  // namespace ntopo
