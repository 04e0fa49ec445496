#pragma once

// Element-center stress recovery, von Mises reduction, elemental compliance
// and the contrast index.

#include <Eigen/Core>

#include <cmath>

#include "pto/grid_fem.hpp"

namespace pto {

/// Strain-displacement matrix of a square bilinear element evaluated at its
/// center, for the node order of build_connectivity().
template <typename Scalar>
Eigen::Matrix<Scalar, 3, 8> center_strain_displacement(Scalar edge_length) {
  Eigen::Matrix<Scalar, 3, 8> b;
  b << -1, 0, 1, 0, 1, 0, -1, 0,  //
      0, -1, 0, -1, 0, 1, 0, 1,   //
      -1, -1, -1, 1, 1, 1, 1, -1;
  return b / (Scalar(2) * edge_length);
}

/// Plane-stress constitutive matrix for unit Young's modulus.
template <typename Scalar>
Eigen::Matrix<Scalar, 3, 3> plane_stress_constitutive(Scalar nu) {
  Eigen::Matrix<Scalar, 3, 3> d;
  d << 1, nu, 0, nu, 1, 0, 0, 0, (Scalar(1) - nu) / Scalar(2);
  return d / (Scalar(1) - nu * nu);
}

/// Von Mises equivalent of a plane stress triple (sx, sy, sxy).
template <typename Derived>
typename Derived::Scalar von_mises(const Eigen::MatrixBase<Derived>& s) {
  EIGEN_STATIC_ASSERT_VECTOR_SPECIFIC_SIZE(Derived, 3);
  using std::sqrt;
  using Scalar = typename Derived::Scalar;
  const Scalar sx = s(0), sy = s(1), sxy = s(2);
  const Scalar squared = sx * sx + sy * sy - sx * sy + Scalar(3) * sxy * sxy;
  return squared > Scalar(0) ? sqrt(squared) : Scalar(0);
}

template <typename Scalar>
Scalar von_mises(Scalar sx, Scalar sy, Scalar sxy) {
  return von_mises(Eigen::Matrix<Scalar, 3, 1>(sx, sy, sxy));
}

struct StressField {
  /// One row (sx, sy, sxy) per element.
  Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor> components;
  Eigen::VectorXd von_mises;
};

struct ComplianceField {
  Eigen::VectorXd elemental;
  double total = 0.0;
};

/// sigma_e = E_e * D * B * u_e at every element center. Stresses are the raw
/// modulus-scaled values; no density normalization is applied.
StressField recover_stress(const StructuredGrid& grid, const MaterialModel& material, const FemSolution& solution,
                           const Eigen::Ref<const Eigen::VectorXd>& moduli);

/// C_e = E_e * u_e^T KE u_e, with KE the unit-modulus element stiffness.
ComplianceField elemental_compliance(const StructuredGrid& grid, const MaterialModel& material,
                                     const FemSolution& solution, const Eigen::Ref<const Eigen::VectorXd>& moduli);

/// Unit-modulus elemental strain energies u_e^T KE u_e (E_e factored out).
Eigen::VectorXd unit_strain_energy(const StructuredGrid& grid, const MaterialModel& material,
                                   const FemSolution& solution);

/// Fraction of elements with rho < 0.01 or rho > 0.99.
double contrast_index(const Eigen::Ref<const Eigen::VectorXd>& rho);

/// Same, over the active elements of `active` only.
double contrast_index(const Eigen::Ref<const Eigen::VectorXd>& rho, const ElementMask& active);

/// Largest value over active elements.
double max_over_active(const Eigen::Ref<const Eigen::VectorXd>& values, const ElementMask& active);

/// Mean over active elements.
double mean_over_active(const Eigen::Ref<const Eigen::VectorXd>& values, const ElementMask& active);

/// Sum over active elements.
double sum_over_active(const Eigen::Ref<const Eigen::VectorXd>& values, const ElementMask& active);

}  // namespace pto
