#pragma once

// Structured bilinear-quad mesh, plane-stress element stiffness, SIMP
// interpolation, and the reduced (free-DOF) stiffness solve.
//
// Numbering: elements, nodes and DOFs start at the top-left corner and run
// down each column before moving right. Node n = col*(nely+1) + row owns DOFs
// 2n (x) and 2n+1 (y). All indices here are 0-based.

#include <Eigen/Core>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <cstdint>
#include <type_traits>
#include <vector>

#include "pto/errors.hpp"

namespace pto {

using Index = Eigen::Index;

template <typename Scalar>
using Matrix8 = Eigen::Matrix<Scalar, 8, 8>;
template <typename Scalar>
using Vector8 = Eigen::Matrix<Scalar, 8, 1>;

using Matrix8d = Matrix8<double>;
using Vector8d = Vector8<double>;

/// Per-element table of the 8 global DOFs, one row per element.
using Connectivity = Eigen::Matrix<Index, Eigen::Dynamic, 8, Eigen::RowMajor>;

/// Element mask; true marks an active (design) element.
using ElementMask = Eigen::Array<bool, Eigen::Dynamic, 1>;

class StructuredGrid {
 public:
  StructuredGrid(int nelx, int nely, double edge_length = 1.0);

  int nelx() const { return nelx_; }
  int nely() const { return nely_; }
  double edge_length() const { return edge_length_; }
  /// Element area times unit thickness.
  double element_volume() const { return edge_length_ * edge_length_; }

  Index element_count() const { return Index(nelx_) * nely_; }
  Index node_count() const { return Index(nelx_ + 1) * (nely_ + 1); }
  Index dof_count() const { return 2 * node_count(); }

  Index element_index(int col, int row) const { return Index(col) * nely_ + row; }
  Index node_index(int col, int row) const { return Index(col) * (nely_ + 1) + row; }
  static Index x_dof(Index node) { return 2 * node; }
  static Index y_dof(Index node) { return 2 * node + 1; }

  /// Marks element `e` as passive void. Passive elements are pinned at the
  /// lower density bound and never receive material.
  void set_passive(Index e, bool passive = true);
  bool is_passive(Index e) const { return !active_(e); }
  const ElementMask& active_mask() const { return active_; }
  Index active_count() const { return active_.count(); }

 private:
  int nelx_;
  int nely_;
  double edge_length_;
  ElementMask active_;
};

struct MaterialModel {
  double e0 = 1.0;
  double e_min = 1e-9;
  double nu = 0.3;
  double penal = 3.0;

  void validate() const;
};

struct BoundaryConditions {
  /// Sorted, unique constrained DOFs.
  std::vector<Index> fixed_dofs;
  /// Nodal forces, length dof_count.
  Eigen::VectorXd load;
};

struct FemSolution {
  Eigen::VectorXd displacements;
  /// ||K_ff u_f - f_f|| / ||f_f|| of the accepted solve (0 for a zero load).
  double relative_residual = 0.0;
};

/// Unit-modulus stiffness of a square bilinear plane-stress element of unit
/// thickness. Independent of the edge length.
template <typename Scalar>
Matrix8<Scalar> element_stiffness(Scalar nu) {
  Eigen::Matrix<Scalar, 4, 4> a11, a12, b11, b12;
  a11 << 12, 3, -6, -3, 3, 12, 3, 0, -6, 3, 12, -3, -3, 0, -3, 12;
  a12 << -6, -3, 0, 3, -3, -6, -3, -6, 0, -3, -6, 3, 3, -6, 3, -6;
  b11 << -4, 3, -2, 9, 3, -4, -9, 4, -2, -9, -4, -3, 9, 4, -3, -4;
  b12 << 2, -3, 4, -9, -3, 2, 9, -2, 4, 9, 2, 3, -9, -2, 3, 2;
  Matrix8<Scalar> a, b;
  a << a11, a12, a12.transpose(), a11;
  b << b11, b12, b12.transpose(), b11;
  return Scalar(1) / (Scalar(1) - nu * nu) / Scalar(24) * (a + nu * b);
}

inline Matrix8d element_stiffness(const MaterialModel& material) {
  return element_stiffness<double>(material.nu);
}

/// E = E_min + rho^p (E_0 - E_min).
template <typename Scalar>
  requires(!std::is_base_of_v<Eigen::EigenBase<Scalar>, Scalar>)
Scalar interpolate_modulus(Scalar rho, const MaterialModel& material) {
  using std::pow;
  return Scalar(material.e_min) + pow(rho, Scalar(material.penal)) * Scalar(material.e0 - material.e_min);
}

/// Element-wise modulus of a density array. Returns an expression holding a
/// reference to `rho`.
template <typename Derived>
auto interpolate_modulus(const Eigen::ArrayBase<Derived>& rho, const MaterialModel& material) {
  using Scalar = typename Derived::Scalar;
  return Scalar(material.e_min) + rho.pow(Scalar(material.penal)) * Scalar(material.e0 - material.e_min);
}

/// Element DOF table. Row e lists lower-left, lower-right, upper-right,
/// upper-left node DOFs (x then y), the order the element stiffness expects.
Connectivity build_connectivity(const StructuredGrid& grid);

/// Full global stiffness for the given element moduli.
Eigen::SparseMatrix<double> assemble_global(const StructuredGrid& grid, const Matrix8d& ke,
                                            const Eigen::Ref<const Eigen::VectorXd>& moduli);

/// Reduced stiffness system on the free DOFs of a fixed grid and support set.
///
/// The sparsity pattern and fill-reducing ordering are computed once; each
/// solve only rewrites the values, refactorizes and back-substitutes. Values
/// are accumulated element by element in a fixed order, so repeated solves
/// with identical moduli are bitwise identical.
class StiffnessSystem {
 public:
  static constexpr double kResidualTolerance = 1e-9;

  StiffnessSystem(const StructuredGrid& grid, const BoundaryConditions& bc, const MaterialModel& material);

  /// Assembles K_ff for `moduli` and solves K_ff u_f = f_f.
  /// Throws SingularSystem when the factorization fails or the relative
  /// residual cannot be brought below kResidualTolerance.
  FemSolution solve(const Eigen::Ref<const Eigen::VectorXd>& moduli);

  /// Reduced matrix of the most recent assembly.
  const Eigen::SparseMatrix<double>& reduced_matrix() const { return reduced_; }
  const std::vector<Index>& free_dofs() const { return free_dofs_; }
  const Matrix8d& element_matrix() const { return ke_; }
  const Connectivity& connectivity() const { return edofs_; }

 private:
  void assemble(const Eigen::Ref<const Eigen::VectorXd>& moduli);

  Index dof_count_;
  Index element_count_;
  Matrix8d ke_;
  Connectivity edofs_;
  std::vector<Index> free_dofs_;
  Eigen::VectorXd free_load_;
  // Slot in reduced_.valuePtr() for each (element, a, b); -1 when either DOF is fixed.
  std::vector<std::int64_t> slots_;
  Eigen::SparseMatrix<double> reduced_;
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>, Eigen::Lower, Eigen::AMDOrdering<int>> factor_;
};

/// One-shot assemble and solve.
FemSolution assemble_and_solve(const StructuredGrid& grid, const BoundaryConditions& bc,
                               const MaterialModel& material, const Eigen::Ref<const Eigen::VectorXd>& moduli);

}  // namespace pto
