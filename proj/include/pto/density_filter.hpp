#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "pto/grid_fem.hpp"

namespace pto {

/// Cone-weighted neighborhood averaging over a structured grid.
///
/// Raw weights are max(0, rmin - r_ij) with r_ij the center distance in
/// element units, collected over the square neighborhood of half-width
/// ceil(rmin) - 1. Each row of the normalized operator sums to one.
class FilterOperator {
 public:
  using SparseRowMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

  FilterOperator(SparseRowMatrix raw, double radius);

  const SparseRowMatrix& raw_weights() const { return raw_; }
  const SparseRowMatrix& weights() const { return normalized_; }
  double radius() const { return radius_; }
  Index size() const { return normalized_.rows(); }

 private:
  SparseRowMatrix raw_;
  SparseRowMatrix normalized_;
  double radius_;
};

/// Cone filter over the grid. Weights only couple elements of the same kind:
/// active elements average over active neighbours and passive over passive,
/// so a void region does not thin the material along its boundary. Grids
/// without passive elements are unaffected.
FilterOperator build_filter(const StructuredGrid& grid, double rmin);

/// Row-stochastic average: out_i = sum_j W_ij field_j.
Eigen::VectorXd apply_filter(const FilterOperator& filter, const Eigen::Ref<const Eigen::VectorXd>& field);

}  // namespace pto
