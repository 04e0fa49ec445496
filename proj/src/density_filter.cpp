#include "pto/density_filter.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace pto {

FilterOperator::FilterOperator(SparseRowMatrix raw, double radius) : raw_(std::move(raw)), radius_(radius) {
  raw_.makeCompressed();
  const Eigen::VectorXd row_sums = raw_ * Eigen::VectorXd::Ones(raw_.cols());
  if ((row_sums.array() <= 0.0).any()) {
    throw InvalidSpec("filter row without positive weight");
  }
  normalized_ = row_sums.cwiseInverse().asDiagonal() * raw_;
  normalized_.makeCompressed();
}

FilterOperator build_filter(const StructuredGrid& grid, double rmin) {
  if (!(rmin > 0.0)) {
    throw InvalidSpec("filter radius must be positive");
  }
  const int nelx = grid.nelx();
  const int nely = grid.nely();
  const int reach = int(std::ceil(rmin)) - 1;

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(std::size_t(grid.element_count()) * std::size_t(2 * reach + 1) * std::size_t(2 * reach + 1));
  for (int i1 = 0; i1 < nelx; ++i1) {
    for (int j1 = 0; j1 < nely; ++j1) {
      const Index e1 = grid.element_index(i1, j1);
      for (int i2 = std::max(i1 - reach, 0); i2 <= std::min(i1 + reach, nelx - 1); ++i2) {
        for (int j2 = std::max(j1 - reach, 0); j2 <= std::min(j1 + reach, nely - 1); ++j2) {
          const Index e2 = grid.element_index(i2, j2);
          if (grid.is_passive(e1) != grid.is_passive(e2)) continue;
          const double dx = i1 - i2;
          const double dy = j1 - j2;
          const double w = std::max(0.0, rmin - std::sqrt(dx * dx + dy * dy));
          triplets.emplace_back(e1, e2, w);
        }
      }
    }
  }
  FilterOperator::SparseRowMatrix raw(grid.element_count(), grid.element_count());
  raw.setFromTriplets(triplets.begin(), triplets.end());
  return FilterOperator(std::move(raw), rmin);
}

Eigen::VectorXd apply_filter(const FilterOperator& filter, const Eigen::Ref<const Eigen::VectorXd>& field) {
  if (field.size() != filter.size()) {
    throw InvalidSpec("field length does not match the filter");
  }
  return filter.weights() * field;
}

}  // namespace pto
