#include "ntopo/density.hpp"

#include "ntopo/errors.hpp"

#include <algorithm>
#include <string>
#include <vector>

namespace ntopo {

namespace {

double volume_at(const Eigen::VectorXd& x, double b) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) sum += sigmoid(x(i) + b);
  return sum;
}

}  // namespace

double find_bias(const Eigen::VectorXd& x, double V0) {
  const double n = static_cast<double>(x.size());
  if (x.size() == 0 || !(V0 > 0.0 && V0 < n)) {
    throw InvalidVolume("V0 must satisfy 0 < V0 < N, got V0 = " +
                        std::to_string(V0));
  }
  const double logit = std::log(V0 / (n - V0));
  const double span = x.cwiseAbs().maxCoeff() + std::abs(logit) + 40.0;
  double lo = -span;
  double hi = span;
  // sum sigmoid(x + b) is strictly increasing in b.
  for (int it = 0; it < 200 && hi - lo > 1e-13 * std::max(1.0, span); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (volume_at(x, mid) < V0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  double b = 0.5 * (lo + hi);
  for (int it = 0; it < 5; ++it) {
    double sum = 0.0;
    double slope = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double s = sigmoid(x(i) + b);
      sum += s;
      slope += s * (1.0 - s);
    }
    if (slope <= 0.0) break;
    const double next = b - (sum - V0) / slope;
    if (!(next >= lo && next <= hi)) break;
    b = next;
  }
  return b;
}

DensityTransform DensityTransform::from(Eigen::VectorXd x, double V0) {
  DensityTransform t;
  t.bias = find_bias(x, V0);
  t.x = std::move(x);
  const Eigen::Index n = t.x.size();
  t.y.resize(n);
  t.sdot.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double s = sigmoid(t.x(i) + t.bias);
    t.y(i) = s;
    t.sdot(i) = s * (1.0 - s);
  }
  t.sdot_l1 = t.sdot.sum();
  return t;
}

Eigen::VectorXd apply_dx(const DensityTransform& t, const Eigen::VectorXd& g) {
  if (t.sdot_l1 <= 0.0) return Eigen::VectorXd::Zero(g.size());
  const Eigen::VectorXd& a = t.sdot;
  // Subtract the a-weighted mean first so constants cancel exactly.
  const double mean = a.dot(g) / t.sdot_l1;
  return (a.array() * (g.array() - mean)).matrix();
}

ConeFilter::ConeFilter(int nx, int ny, double rmin)
    : nx_(nx), ny_(ny), rmin_(rmin), t_(nx * ny, nx * ny) {
  if (nx < 1 || ny < 1) throw InvalidProblem("filter grid must be nonempty");
  if (!(rmin >= 1.0)) throw InvalidProblem("rmin must be at least 1");
  const int reach = static_cast<int>(std::ceil(rmin)) - 1;
  std::vector<Eigen::Triplet<double>> triplets;
  for (int ex = 0; ex < nx; ++ex) {
    for (int ey = 0; ey < ny; ++ey) {
      const int row = ex * ny + ey;
      double total = 0.0;
      const auto first = triplets.size();
      for (int i = std::max(ex - reach, 0); i <= std::min(ex + reach, nx - 1);
           ++i) {
        for (int j = std::max(ey - reach, 0);
             j <= std::min(ey + reach, ny - 1); ++j) {
          const double w =
              rmin - std::hypot(static_cast<double>(ex - i),
                                static_cast<double>(ey - j));
          if (w > 0.0) {
            triplets.emplace_back(row, i * ny + j, w);
            total += w;
          }
        }
      }
      for (auto k = first; k < triplets.size(); ++k) {
        triplets[k] = Eigen::Triplet<double>(triplets[k].row(),
                                             triplets[k].col(),
                                             triplets[k].value() / total);
      }
    }
  }
  t_.setFromTriplets(triplets.begin(), triplets.end());
}

}  // namespace ntopo
