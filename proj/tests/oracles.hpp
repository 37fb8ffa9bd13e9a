#pragma once

// Independent reference computations shared by the tests.

#include "ntopo/fea.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <type_traits>
#include <vector>

namespace oracle {

/// Plane-stress bilinear quad stiffness by 2x2 Gauss quadrature on the unit
/// square, nodes (0,0), (1,0), (1,1), (0,1), dofs (ux, uy) per node.
template <typename T = double>
Eigen::Matrix<T, 8, 8> quadrature_stiffness(T nu) {
  Eigen::Matrix<T, 3, 3> d;
  d << 1, nu, 0, nu, 1, 0, 0, 0, (1 - nu) / 2;
  d /= 1 - nu * nu;
  const int xs[4] = {0, 1, 1, 0};
  const int ys[4] = {0, 0, 1, 1};
  const T half(0.5);
  const T g[2] = {half - half / std::sqrt(T(3)), half + half / std::sqrt(T(3))};
  Eigen::Matrix<T, 8, 8> ke = Eigen::Matrix<T, 8, 8>::Zero();
  for (T x : g) {
    for (T y : g) {
      Eigen::Matrix<T, 3, 8> b = Eigen::Matrix<T, 3, 8>::Zero();
      for (int i = 0; i < 4; ++i) {
        const T sx = xs[i] ? 1 : -1;
        const T sy = ys[i] ? 1 : -1;
        const T dndx = sx * (ys[i] ? y : 1 - y);
        const T dndy = sy * (xs[i] ? x : 1 - x);
        b(0, 2 * i) = dndx;
        b(1, 2 * i + 1) = dndy;
        b(2, 2 * i) = dndy;
        b(2, 2 * i + 1) = dndx;
      }
      ke += T(0.25) * b.transpose() * d * b;
    }
  }
  return ke;
}

/// Dense global stiffness built from the quadrature element matrix with nodes
/// (ix, iy) numbered ix * (ny + 1) + iy, iy counted from the top.
template <typename T = double>
Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic> dense_stiffness(
    const ntopo::ProblemSpec& s, const Eigen::Matrix<T, Eigen::Dynamic, 1>& y) {
  using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
  const Eigen::Matrix<T, 8, 8> ke = quadrature_stiffness<T>(T(s.nu));
  Mat k = Mat::Zero(s.num_dofs(), s.num_dofs());
  for (int ex = 0; ex < s.nx; ++ex) {
    for (int ey = 0; ey < s.ny; ++ey) {
      const int corners[4][2] = {
          {ex, ey + 1}, {ex + 1, ey + 1}, {ex + 1, ey}, {ex, ey}};
      int dofs[8];
      for (int c = 0; c < 4; ++c) {
        const int node = corners[c][0] * (s.ny + 1) + corners[c][1];
        dofs[2 * c] = 2 * node;
        dofs[2 * c + 1] = 2 * node + 1;
      }
      const T e = T(s.Emin) + std::pow(y(ex * s.ny + ey), T(s.penal)) *
                                  (T(s.E0) - T(s.Emin));
      for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j) k(dofs[i], dofs[j]) += e * ke(i, j);
    }
  }
  return k;
}

/// Compliance F^T U from a dense Cholesky solve on the free dofs.
template <typename T = double>
T dense_compliance(const ntopo::ProblemSpec& s,
                   const Eigen::Matrix<T, Eigen::Dynamic, 1>& y) {
  using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
  using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;
  const Mat k = dense_stiffness<T>(s, y);
  std::vector<bool> fixed(s.num_dofs(), false);
  for (int d : s.fixed_dofs) fixed[d] = true;
  std::vector<int> free;
  for (int d = 0; d < s.num_dofs(); ++d)
    if (!fixed[d]) free.push_back(d);
  const int n = static_cast<int>(free.size());
  Mat kf(n, n);
  Vec ff = Vec::Zero(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) kf(i, j) = k(free[i], free[j]);
    auto it = s.loads.find(free[i]);
    if (it != s.loads.end()) ff(i) = T(it->second);
  }
  const Vec u = kf.llt().solve(ff);
  return ff.dot(u);
}

/// Central difference of the compliance in extended precision, h = 1e-6.
inline Eigen::VectorXd fd_compliance_gradient(const ntopo::ProblemSpec& s,
                                              const Eigen::VectorXd& y) {
  using Vec = Eigen::Matrix<long double, Eigen::Dynamic, 1>;
  const long double h = 1e-6L;
  const Vec base = y.cast<long double>();
  Eigen::VectorXd g(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    Vec yp = base, ym = base;
    yp(i) += h;
    ym(i) -= h;
    g(i) = static_cast<double>(
        (dense_compliance<long double>(s, yp) - dense_compliance<long double>(s, ym)) /
        (2 * h));
  }
  return g;
}

/// Densities of x with the volume-matching bias found by plain bisection.
template <typename T = long double>
Eigen::Matrix<T, Eigen::Dynamic, 1> densities(
    const Eigen::Matrix<T, Eigen::Dynamic, 1>& x, std::type_identity_t<T> v0) {
  auto volume = [&](T b) {
    T s = 0;
    for (Eigen::Index i = 0; i < x.size(); ++i) s += 1 / (1 + std::exp(-(x(i) + b)));
    return s;
  };
  T lo = -200, hi = 200;
  for (int it = 0; it < 400; ++it) {
    const T mid = (lo + hi) / 2;
    (volume(mid) < v0 ? lo : hi) = mid;
  }
  const T b = (lo + hi) / 2;
  Eigen::Matrix<T, Eigen::Dynamic, 1> y(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) y(i) = 1 / (1 + std::exp(-(x(i) + b)));
  return y;
}

}  // namespace oracle
