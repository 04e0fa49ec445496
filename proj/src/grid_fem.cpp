#include "pto/grid_fem.hpp"

#include <algorithm>
#include <sstream>

namespace pto {

StructuredGrid::StructuredGrid(int nelx, int nely, double edge_length)
    : nelx_(nelx), nely_(nely), edge_length_(edge_length) {
  if (nelx < 1 || nely < 1) {
    throw InvalidSpec("grid needs at least one element in each direction");
  }
  if (!(edge_length > 0.0)) {
    throw InvalidSpec("element edge length must be positive");
  }
  active_ = ElementMask::Constant(element_count(), true);
}

void StructuredGrid::set_passive(Index e, bool passive) {
  if (e < 0 || e >= element_count()) {
    throw InvalidSpec("passive element index out of range");
  }
  active_(e) = !passive;
}

void MaterialModel::validate() const {
  if (!(e0 > e_min && e_min > 0.0)) {
    throw InvalidSpec("material needs E0 > Emin > 0");
  }
  if (!(nu >= 0.0 && nu < 0.5)) {
    throw InvalidSpec("Poisson's ratio must lie in [0, 0.5)");
  }
  if (!(penal >= 1.0)) {
    throw InvalidSpec("penalization exponent must be >= 1");
  }
}

Connectivity build_connectivity(const StructuredGrid& grid) {
  const int nely = grid.nely();
  Connectivity edofs(grid.element_count(), 8);
  for (int col = 0; col < grid.nelx(); ++col) {
    for (int row = 0; row < nely; ++row) {
      const Index upper_left = grid.node_index(col, row);
      const Index lower_left = upper_left + 1;
      const Index lower_right = lower_left + nely + 1;
      const Index upper_right = upper_left + nely + 1;
      edofs.row(grid.element_index(col, row)) << 2 * lower_left, 2 * lower_left + 1, 2 * lower_right,
          2 * lower_right + 1, 2 * upper_right, 2 * upper_right + 1, 2 * upper_left, 2 * upper_left + 1;
    }
  }
  return edofs;
}

Eigen::SparseMatrix<double> assemble_global(const StructuredGrid& grid, const Matrix8d& ke,
                                            const Eigen::Ref<const Eigen::VectorXd>& moduli) {
  if (moduli.size() != grid.element_count()) {
    throw InvalidSpec("modulus vector length does not match the grid");
  }
  const Connectivity edofs = build_connectivity(grid);
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(64 * std::size_t(grid.element_count()));
  for (Index e = 0; e < edofs.rows(); ++e) {
    for (int a = 0; a < 8; ++a) {
      for (int b = 0; b < 8; ++b) {
        triplets.emplace_back(edofs(e, a), edofs(e, b), moduli(e) * ke(a, b));
      }
    }
  }
  Eigen::SparseMatrix<double> k(grid.dof_count(), grid.dof_count());
  k.setFromTriplets(triplets.begin(), triplets.end());
  return k;
}

StiffnessSystem::StiffnessSystem(const StructuredGrid& grid, const BoundaryConditions& bc,
                                 const MaterialModel& material)
    : dof_count_(grid.dof_count()),
      element_count_(grid.element_count()),
      ke_(element_stiffness(material)),
      edofs_(build_connectivity(grid)) {
  material.validate();
  if (bc.load.size() != dof_count_) {
    throw InvalidSpec("load vector length does not match the DOF count");
  }
  if (bc.fixed_dofs.empty()) {
    throw InvalidSpec("at least one DOF must be fixed");
  }

  std::vector<Index> free_of(dof_count_, 0);
  for (Index d : bc.fixed_dofs) {
    if (d < 0 || d >= dof_count_) {
      throw InvalidSpec("fixed DOF index out of range");
    }
    free_of[d] = -1;
  }
  for (Index d = 0; d < dof_count_; ++d) {
    if (free_of[d] == 0) {
      free_of[d] = Index(free_dofs_.size());
      free_dofs_.push_back(d);
    }
  }
  const Index n_free = Index(free_dofs_.size());
  if (n_free == 0) {
    throw InvalidSpec("every DOF is fixed");
  }
  free_load_.resize(n_free);
  for (Index i = 0; i < n_free; ++i) {
    free_load_(i) = bc.load(free_dofs_[i]);
  }

  std::vector<Eigen::Triplet<double>> pattern;
  pattern.reserve(64 * std::size_t(element_count_));
  for (Index e = 0; e < element_count_; ++e) {
    for (int a = 0; a < 8; ++a) {
      const Index i = free_of[edofs_(e, a)];
      if (i < 0) continue;
      for (int b = 0; b < 8; ++b) {
        const Index j = free_of[edofs_(e, b)];
        if (j >= 0) pattern.emplace_back(i, j, 1.0);
      }
    }
  }
  reduced_.resize(n_free, n_free);
  reduced_.setFromTriplets(pattern.begin(), pattern.end());
  reduced_.makeCompressed();

  const auto* outer = reduced_.outerIndexPtr();
  const auto* inner = reduced_.innerIndexPtr();
  slots_.assign(64 * std::size_t(element_count_), -1);
  for (Index e = 0; e < element_count_; ++e) {
    for (int a = 0; a < 8; ++a) {
      const Index i = free_of[edofs_(e, a)];
      if (i < 0) continue;
      for (int b = 0; b < 8; ++b) {
        const Index j = free_of[edofs_(e, b)];
        if (j < 0) continue;
        // Column-major storage: column j holds sorted row indices.
        const auto* first = inner + outer[j];
        const auto* last = inner + outer[j + 1];
        const auto* hit = std::lower_bound(first, last, int(i));
        slots_[64 * std::size_t(e) + 8 * a + b] = std::int64_t(hit - inner);
      }
    }
  }
  factor_.analyzePattern(reduced_);
}

void StiffnessSystem::assemble(const Eigen::Ref<const Eigen::VectorXd>& moduli) {
  if (moduli.size() != element_count_) {
    throw InvalidSpec("modulus vector length does not match the grid");
  }
  double* values = reduced_.valuePtr();
  std::fill(values, values + reduced_.nonZeros(), 0.0);
  for (Index e = 0; e < element_count_; ++e) {
    const double modulus = moduli(e);
    const std::int64_t* slot = slots_.data() + 64 * std::size_t(e);
    for (int a = 0; a < 8; ++a) {
      for (int b = 0; b < 8; ++b) {
        const std::int64_t s = slot[8 * a + b];
        if (s >= 0) values[s] += modulus * ke_(a, b);
      }
    }
  }
}

FemSolution StiffnessSystem::solve(const Eigen::Ref<const Eigen::VectorXd>& moduli) {
  if ((moduli.array() <= 0.0).any()) {
    throw InvalidSpec("element moduli must be strictly positive");
  }
  assemble(moduli);
  // The element matrix is exactly symmetric, and K(i,j), K(j,i) accumulate the
  // same products in the same order, so K already equals (K + K^T)/2 bitwise.

  FemSolution out;
  out.displacements = Eigen::VectorXd::Zero(dof_count_);
  const double load_norm = free_load_.norm();
  if (load_norm == 0.0) {
    return out;
  }

  factor_.factorize(reduced_);
  if (factor_.info() != Eigen::Success) {
    std::ostringstream msg;
    msg << "stiffness factorization failed (" << free_dofs_.size() << " free of " << dof_count_
        << " DOFs, modulus range [" << moduli.minCoeff() << ", " << moduli.maxCoeff()
        << "]); check supports for rigid-body modes";
    throw SingularSystem(msg.str());
  }
  Eigen::VectorXd u = factor_.solve(free_load_);
  Eigen::VectorXd r = free_load_ - reduced_ * u;
  double residual = r.norm() / load_norm;
  for (int refine = 0; refine < 3 && residual > kResidualTolerance; ++refine) {
    u += factor_.solve(r);
    r = free_load_ - reduced_ * u;
    residual = r.norm() / load_norm;
  }
  if (!(residual <= kResidualTolerance) || !u.allFinite()) {
    std::ostringstream msg;
    msg << "stiffness solve residual " << residual << " exceeds " << kResidualTolerance << " ("
        << free_dofs_.size() << " free DOFs)";
    throw SingularSystem(msg.str());
  }
  for (Index i = 0; i < Index(free_dofs_.size()); ++i) {
    out.displacements(free_dofs_[i]) = u(i);
  }
  out.relative_residual = residual;
  return out;
}

FemSolution assemble_and_solve(const StructuredGrid& grid, const BoundaryConditions& bc,
                               const MaterialModel& material, const Eigen::Ref<const Eigen::VectorXd>& moduli) {
  StiffnessSystem system(grid, bc, material);
  return system.solve(moduli);
}

}  // namespace pto
