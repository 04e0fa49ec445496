#pragma once

// Independent reference implementations used by the tests. Nothing here calls
// into the library except for plain data types; each oracle rebuilds its
// quantity from first principles with dense linear algebra.

#include <Eigen/Dense>

#include <cmath>
#include <vector>

#include "pto/grid_fem.hpp"

namespace oracle {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Bilinear shape-function derivatives on the square [-1,1]^2, nodes ordered
// counter-clockwise from the lower-left corner.
inline void shape_derivatives(double xi, double eta, double dxi[4], double deta[4]) {
  const double sx[4] = {-1, 1, 1, -1};
  const double sy[4] = {-1, -1, 1, 1};
  for (int a = 0; a < 4; ++a) {
    dxi[a] = 0.25 * sx[a] * (1 + sy[a] * eta);
    deta[a] = 0.25 * sy[a] * (1 + sx[a] * xi);
  }
}

// Strain-displacement matrix of a square element with edge h at (xi, eta).
inline Eigen::Matrix<double, 3, 8> strain_displacement(double xi, double eta, double h) {
  double dxi[4], deta[4];
  shape_derivatives(xi, eta, dxi, deta);
  Eigen::Matrix<double, 3, 8> b = Eigen::Matrix<double, 3, 8>::Zero();
  for (int a = 0; a < 4; ++a) {
    const double dx = dxi[a] * 2.0 / h;
    const double dy = deta[a] * 2.0 / h;
    b(0, 2 * a) = dx;
    b(1, 2 * a + 1) = dy;
    b(2, 2 * a) = dy;
    b(2, 2 * a + 1) = dx;
  }
  return b;
}

inline Eigen::Matrix3d plane_stress(double e, double nu) {
  Eigen::Matrix3d d;
  d << 1, nu, 0, nu, 1, 0, 0, 0, (1 - nu) / 2;
  return e / (1 - nu * nu) * d;
}

// 2x2 Gauss quadrature of B^T D B over a unit-thickness square element.
inline Eigen::Matrix<double, 8, 8> gauss_stiffness(double nu, double h = 1.0) {
  const double g = 1.0 / std::sqrt(3.0);
  const Eigen::Matrix3d d = plane_stress(1.0, nu);
  Eigen::Matrix<double, 8, 8> k = Eigen::Matrix<double, 8, 8>::Zero();
  for (double xi : {-g, g}) {
    for (double eta : {-g, g}) {
      const auto b = strain_displacement(xi, eta, h);
      k += b.transpose() * d * b * (h * h / 4.0);
    }
  }
  return k;
}

// Global DOFs of element (col, row) enumerated straight from the numbering
// rule: nodes run down each column from the top-left corner.
inline std::vector<int> element_dofs(int col, int row, int nely) {
  auto node = [nely](int c, int r) { return c * (nely + 1) + r; };
  const int nodes[4] = {node(col, row + 1), node(col + 1, row + 1), node(col + 1, row), node(col, row)};
  std::vector<int> out;
  for (int n : nodes) {
    out.push_back(2 * n);
    out.push_back(2 * n + 1);
  }
  return out;
}

// Dense global stiffness with Gauss-integrated element matrices.
inline MatrixXd dense_stiffness(int nelx, int nely, double nu, const VectorXd& moduli) {
  const int ndof = 2 * (nelx + 1) * (nely + 1);
  const auto ke = gauss_stiffness(nu);
  MatrixXd k = MatrixXd::Zero(ndof, ndof);
  for (int col = 0; col < nelx; ++col) {
    for (int row = 0; row < nely; ++row) {
      const auto dofs = element_dofs(col, row, nely);
      const double e = moduli(col * nely + row);
      for (int a = 0; a < 8; ++a) {
        for (int b = 0; b < 8; ++b) k(dofs[a], dofs[b]) += e * ke(a, b);
      }
    }
  }
  return k;
}

// Dense direct solve with the fixed DOFs removed.
inline VectorXd dense_solve(const MatrixXd& k, const VectorXd& f, const std::vector<pto::Index>& fixed) {
  const int n = int(k.rows());
  std::vector<bool> is_fixed(n, false);
  for (auto d : fixed) is_fixed[d] = true;
  std::vector<int> free;
  for (int i = 0; i < n; ++i) {
    if (!is_fixed[i]) free.push_back(i);
  }
  const int m = int(free.size());
  MatrixXd kff(m, m);
  VectorXd ff(m);
  for (int i = 0; i < m; ++i) {
    ff(i) = f(free[i]);
    for (int j = 0; j < m; ++j) kff(i, j) = k(free[i], free[j]);
  }
  const VectorXd uf = kff.fullPivLu().solve(ff);
  VectorXd u = VectorXd::Zero(n);
  for (int i = 0; i < m; ++i) u(free[i]) = uf(i);
  return u;
}

// Dense cone-filter matrix by a double loop over every element pair.
inline MatrixXd dense_filter(int nelx, int nely, double rmin, bool normalize) {
  const int n = nelx * nely;
  MatrixXd w = MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    const int ci = i / nely, ri = i % nely;
    for (int j = 0; j < n; ++j) {
      const int cj = j / nely, rj = j % nely;
      const double r = std::hypot(double(ci - cj), double(ri - rj));
      w(i, j) = std::max(0.0, rmin - r);
    }
  }
  if (normalize) {
    for (int i = 0; i < n; ++i) w.row(i) /= w.row(i).sum();
  }
  return w;
}

struct LoopResult {
  VectorXd x;
  int passes = 0;
};

// Literal transcription of the proportional inner loop with a dense filter:
// x = 0; while RM > tol: x += W (RM p); clamp; RM = TM - sum(x).
inline LoopResult inner_loop(double target, const VectorXd& weights, double q, const MatrixXd& w, double lo, double hi,
                             double tol, int cap = 10000000) {
  VectorXd p = weights.array().pow(q).matrix();
  p /= p.sum();
  LoopResult out;
  out.x = VectorXd::Zero(weights.size());
  double rm = target;
  while (rm > tol && out.passes < cap) {
    out.x += w * (rm * p);
    out.x = out.x.cwiseMax(lo).cwiseMin(hi);
    rm = target - out.x.sum();
    ++out.passes;
  }
  return out;
}

}  // namespace oracle
