#pragma once

// Shared fixtures for the test binaries.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "dsd/structure.hpp"

namespace fixture {

inline std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> x(n);
  for (int i = 0; i < n; ++i) x[i] = lo + (hi - lo) * i / (n - 1);
  return x;
}

struct Component {
  dsd::DesignMatrix z;
  dsd::StructureSpec k;
};

/// n points on [-1, 1], cubic B-splines with m functions, RW2 penalty.
inline Component pspline(int m, int n = 50) {
  const auto x = linspace(-1.0, 1.0, n);
  return {dsd::build_bspline_basis(x, m, 3), dsd::build_rw(2, m)};
}

inline Component iid(int n) {
  dsd::StructureSpec k{Eigen::MatrixXd::Identity(n, n), 0, "iid"};
  return {dsd::identity_design(n), k};
}

inline Eigen::MatrixXd random_orthogonal(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = g(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  return qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
}

/// Connected graph: random spanning tree plus extra random edges.
inline Eigen::MatrixXd random_connected_graph(int n, int extra, std::mt19937_64& rng) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (int v = 1; v < n; ++v) {
    const int u = std::uniform_int_distribution<int>(0, v - 1)(rng);
    a(u, v) = a(v, u) = 1.0;
  }
  std::uniform_int_distribution<int> pick(0, n - 1);
  for (int e = 0; e < extra; ++e) {
    const int u = pick(rng), v = pick(rng);
    if (u != v) a(u, v) = a(v, u) = 1.0;
  }
  return a;
}

inline double max_rel_diff(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  if (a.size() != b.size()) return INFINITY;
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    worst = std::max(worst, std::abs(a[i] - b[i]) / std::abs(b[i]));
  return worst;
}

}  // namespace fixture
