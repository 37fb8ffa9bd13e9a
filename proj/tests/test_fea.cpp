#include "oracles.hpp"

#include "ntopo/errors.hpp"
#include "ntopo/fea.hpp"

#include <doctest.h>

#include <Eigen/Dense>

#include <random>

using namespace ntopo;

namespace {

Eigen::VectorXd random_field(int n, double lo, double hi, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) y(i) = u(rng);
  return y;
}

ProblemSpec corner_load_1x1() {
  ProblemSpec s;
  s.nx = 1;
  s.ny = 1;
  s.V0 = 0.5;
  s.fixed_dofs = {0, 1, 2, 3};
  s.loads[7] = -1.0;  // node (1, 1): bottom-right, uy
  return s;
}

}  // namespace

TEST_CASE("element stiffness matches Gauss quadrature") {
  for (double nu : {0.3, 0.0, -0.2, 0.45}) {
    const auto ke = element_stiffness(nu);
    const auto ref = oracle::quadrature_stiffness<double>(nu);
    CHECK((ke - ref).cwiseAbs().maxCoeff() < 1e-14);
  }
  CHECK(element_stiffness(0.3)(0, 0) ==
        doctest::Approx(oracle::quadrature_stiffness<double>(0.3)(0, 0)).epsilon(1e-14));
}

TEST_CASE("element stiffness is symmetric PSD with rigid-body null space") {
  const auto ke = element_stiffness(0.3);
  CHECK((ke - ke.transpose()).norm() == 0.0);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 8, 8>> eig(ke);
  CHECK(eig.eigenvalues().minCoeff() >= -1e-12);
  Eigen::Matrix<double, 8, 1> tx, ty, rot;
  tx << 1, 0, 1, 0, 1, 0, 1, 0;
  ty << 0, 1, 0, 1, 0, 1, 0, 1;
  const double xs[4] = {0, 1, 1, 0};
  const double ys[4] = {0, 0, 1, 1};
  for (int i = 0; i < 4; ++i) {
    rot(2 * i) = -(ys[i] - 0.5);
    rot(2 * i + 1) = xs[i] - 0.5;
  }
  CHECK((ke * tx).norm() < 1e-14);
  CHECK((ke * ty).norm() < 1e-14);
  CHECK((ke * rot).norm() < 1e-14);
  CHECK(ke.rowwise().sum().cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("element dofs follow the node numbering") {
  // Element (0, 0) of a grid with ny = 2: top-left node 0, bottom-left 1,
  // top-right 3, bottom-right 4.
  const auto d = element_dofs(2, 0, 0);
  const std::array<int, 8> expected = {2, 3, 8, 9, 6, 7, 0, 1};
  CHECK(d == expected);
}

TEST_CASE("zero load gives zero displacement and compliance") {
  ProblemSpec s = mbb_half_beam(4, 3, 6.0);
  s.loads.clear();
  const auto r = compliance_and_grad(s, Eigen::VectorXd::Constant(12, 0.5));
  CHECK(r.displacement.U.norm() == 0.0);
  CHECK(r.compliance == 0.0);
  CHECK(r.grad_y.norm() == 0.0);
}

TEST_CASE("single element compliance matches dense Cholesky") {
  const ProblemSpec s = corner_load_1x1();
  const Eigen::VectorXd y = Eigen::VectorXd::Ones(1);
  for (auto kind : {LinearSolver::pcg, LinearSolver::cholesky}) {
    SolverOptions o;
    o.kind = kind;
    const auto r = compliance_and_grad(s, y, o);
    CHECK(r.compliance > 0.0);
    CHECK(r.compliance ==
          doctest::Approx(oracle::dense_compliance<double>(s, y)).epsilon(1e-10));
    CHECK(r.compliance ==
          doctest::Approx(load_vector(s).dot(r.displacement.U)).epsilon(1e-12));
  }
}

TEST_CASE("MBB compliance matches dense solve") {
  const ProblemSpec s = mbb_half_beam(6, 4, 12.0);
  const Eigen::VectorXd y = Eigen::VectorXd::Constant(24, 0.5);
  const auto r = compliance_and_grad(s, y);
  CHECK(r.compliance ==
        doctest::Approx(oracle::dense_compliance<double>(s, y)).epsilon(1e-8));
  const Eigen::VectorXd y2 = random_field(24, 0.0, 1.0, 3);
  CHECK(compliance_and_grad(s, y2).compliance ==
        doctest::Approx(oracle::dense_compliance<double>(s, y2)).epsilon(1e-8));
}

TEST_CASE("global stiffness matches the dense oracle") {
  const ProblemSpec s = cantilever(5, 3, 7.0);
  const Eigen::VectorXd y = random_field(15, 0.1, 1.0, 9);
  const Eigen::MatrixXd k = Eigen::MatrixXd(assemble_stiffness(s, y));
  CHECK((k - oracle::dense_stiffness<double>(s, y)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("solve meets the residual contract and pins fixed dofs") {
  for (const ProblemSpec& s :
       {mbb_half_beam(12, 6, 30.0), cantilever(10, 6, 30.0),
        symmetric_bridge(12, 6, 30.0)}) {
    const Eigen::VectorXd y = random_field(s.num_elements(), 0.0, 1.0, 5);
    const auto u = assemble_and_solve(s, y);
    const Eigen::VectorXd f = load_vector(s);
    const Eigen::SparseMatrix<double> k = assemble_stiffness(s, y);
    Eigen::VectorXd r = k * u.U - f;
    for (int d : s.fixed_dofs) {
      CHECK(u.U(d) == 0.0);
      r(d) = 0.0;  // reactions
    }
    CHECK(r.norm() / f.norm() <= 1e-8);
    CHECK(u.relative_residual <= 1e-8);
  }
}

TEST_CASE("pcg and cholesky agree") {
  const ProblemSpec s = mbb_half_beam(20, 10, 100.0);
  const Eigen::VectorXd y = random_field(200, 0.0, 1.0, 11);
  SolverOptions chol;
  chol.kind = LinearSolver::cholesky;
  const auto a = compliance_and_grad(s, y);
  const auto b = compliance_and_grad(s, y, chol);
  CHECK(a.compliance == doctest::Approx(b.compliance).epsilon(1e-9));
  CHECK((a.grad_y - b.grad_y).norm() <= 1e-8 * b.grad_y.norm());
}

TEST_CASE("compliance gradient matches central differences") {
  const ProblemSpec s = mbb_half_beam(6, 4, 12.0);
  Eigen::VectorXd y = Eigen::VectorXd::Constant(24, 0.5);
  const auto r = compliance_and_grad(s, y);
  const Eigen::VectorXd fd = oracle::fd_compliance_gradient(s, y);
  for (int i = 0; i < 24; ++i) {
    CHECK(std::abs(fd(i) - r.grad_y(i)) <= 1e-4 * std::abs(fd(i)));
  }
}

TEST_CASE("gradient property on random fields up to 8x8") {
  int seed = 0;
  for (auto [nx, ny] : {std::pair{3, 2}, std::pair{5, 5}, std::pair{8, 8}}) {
    for (const ProblemSpec& s :
         {mbb_half_beam(nx, ny, 0.5 * nx * ny), cantilever(nx, ny, 0.5 * nx * ny)}) {
      const Eigen::VectorXd y = random_field(nx * ny, 0.2, 0.8, ++seed);
      const auto r = compliance_and_grad(s, y);
      const Eigen::VectorXd fd = oracle::fd_compliance_gradient(s, y);
      for (int i = 0; i < nx * ny; ++i) {
        CHECK(std::abs(fd(i) - r.grad_y(i)) <= 1e-4 * std::abs(fd(i)));
      }
    }
  }
}

TEST_CASE("gradient sign and the void floor") {
  const ProblemSpec s = mbb_half_beam(8, 4, 16.0);
  const auto full = compliance_and_grad(s, Eigen::VectorXd::Ones(32));
  CHECK(full.grad_y.maxCoeff() <= 0.0);
  const auto ke = element_stiffness(s.nu);
  const auto dofs = element_dofs(s.ny, 2, 1);
  Eigen::Matrix<double, 8, 1> ue;
  for (int k = 0; k < 8; ++k) ue(k) = full.displacement.U(dofs[k]);
  CHECK(full.grad_y(2 * 4 + 1) ==
        doctest::Approx(-s.penal * (s.E0 - s.Emin) * ue.dot(ke * ue)).epsilon(1e-12));

  Eigen::VectorXd y = Eigen::VectorXd::Constant(32, 0.5);
  y(5) = 0.0;
  CHECK(compliance_and_grad(s, y).grad_y(5) == 0.0);
}

TEST_CASE("adding material never increases compliance") {
  const ProblemSpec s = mbb_half_beam(4, 4, 8.0);
  std::mt19937 rng(21);
  std::uniform_int_distribution<int> pick(0, 15);
  std::uniform_real_distribution<double> amount(0.0, 0.3);
  Eigen::VectorXd y = random_field(16, 0.1, 0.7, 4);
  for (int t = 0; t < 20; ++t) {
    const double before = compliance_and_grad(s, y).compliance;
    Eigen::VectorXd raised = y;
    const int i = pick(rng);
    raised(i) = std::min(1.0, raised(i) + amount(rng));
    CHECK(compliance_and_grad(s, raised).compliance <= before * (1 + 1e-12));
    y = raised;
  }
}

TEST_CASE("validation errors") {
  ProblemSpec s = mbb_half_beam(4, 2, 4.0);
  s.V0 = 8.0;
  try {
    s.validate();
    FAIL("expected InvalidProblem");
  } catch (const InvalidProblem& e) {
    CHECK(std::string(e.what()).find("V0") != std::string::npos);
  }
  s.V0 = 4.0;
  s.loads[s.fixed_dofs.front()] = 1.0;
  CHECK_THROWS_AS(s.validate(), InvalidProblem);

  const ProblemSpec ok = mbb_half_beam(4, 2, 4.0);
  Eigen::VectorXd y = Eigen::VectorXd::Constant(8, 0.5);
  y(3) = 1.5;
  CHECK_THROWS_AS(assemble_and_solve(ok, y), InvalidDensity);
  y(3) = -0.1;
  CHECK_THROWS_AS(assemble_and_solve(ok, y), InvalidDensity);
}

TEST_CASE("insufficient supports raise SingularSystem") {
  ProblemSpec s;
  s.nx = 4;
  s.ny = 2;
  s.V0 = 4.0;
  s.fixed_dofs = {0};  // free to slide vertically and rotate
  s.loads[2 * 14 + 1] = -1.0;
  CHECK_THROWS_AS(assemble_and_solve(s, Eigen::VectorXd::Ones(8)),
                  SingularSystem);
}

TEST_CASE("presets") {
  const ProblemSpec m = mbb_half_beam(6, 4, 12.0);
  CHECK(m.loads.size() == 1);
  CHECK(m.loads.at(1) == -1.0);
  CHECK(m.fixed_dofs.back() == m.num_dofs() - 1);
  const ProblemSpec c = cantilever(6, 4, 12.0);
  CHECK(c.fixed_dofs.size() == 10);
  CHECK(c.loads.at(2 * (6 * 5 + 2) + 1) == -1.0);
  const ProblemSpec b = symmetric_bridge(6, 4, 12.0);
  CHECK(b.loads.at(2 * (3 * 5 + 4) + 1) == -1.0);
  // Mirror-symmetric design gives a mirror-symmetric response.
  Eigen::VectorXd y(24);
  for (int ex = 0; ex < 6; ++ex)
    for (int ey = 0; ey < 4; ++ey) y(ex * 4 + ey) = 0.3 + 0.1 * std::min(ex, 5 - ex) + 0.05 * ey;
  const auto r = compliance_and_grad(b, y);
  for (int ex = 0; ex < 6; ++ex)
    for (int ey = 0; ey < 4; ++ey)
      CHECK(r.grad_y(ex * 4 + ey) ==
            doctest::Approx(r.grad_y((5 - ex) * 4 + ey)).epsilon(1e-8));
}
