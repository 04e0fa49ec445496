#include "pto/field_analysis.hpp"

#include <limits>

namespace pto {

namespace {

Vector8d gather(const Eigen::VectorXd& u, const Connectivity& edofs, Index e) {
  Vector8d ue;
  for (int a = 0; a < 8; ++a) ue(a) = u(edofs(e, a));
  return ue;
}

void check_sizes(const StructuredGrid& grid, const FemSolution& solution, Index moduli_size) {
  if (solution.displacements.size() != grid.dof_count()) {
    throw InvalidSpec("displacement vector length does not match the grid");
  }
  if (moduli_size != grid.element_count()) {
    throw InvalidSpec("modulus vector length does not match the grid");
  }
}

}  // namespace

StressField recover_stress(const StructuredGrid& grid, const MaterialModel& material, const FemSolution& solution,
                           const Eigen::Ref<const Eigen::VectorXd>& moduli) {
  check_sizes(grid, solution, moduli.size());
  const Connectivity edofs = build_connectivity(grid);
  const Eigen::Matrix<double, 3, 8> db =
      plane_stress_constitutive(material.nu) * center_strain_displacement(grid.edge_length());

  StressField out;
  out.components.resize(grid.element_count(), 3);
  out.von_mises.resize(grid.element_count());
  for (Index e = 0; e < grid.element_count(); ++e) {
    const Eigen::Vector3d s = moduli(e) * (db * gather(solution.displacements, edofs, e));
    out.components.row(e) = s.transpose();
    out.von_mises(e) = von_mises(s);
  }
  return out;
}

Eigen::VectorXd unit_strain_energy(const StructuredGrid& grid, const MaterialModel& material,
                                   const FemSolution& solution) {
  check_sizes(grid, solution, grid.element_count());
  const Connectivity edofs = build_connectivity(grid);
  const Matrix8d ke = element_stiffness(material);
  Eigen::VectorXd energy(grid.element_count());
  for (Index e = 0; e < grid.element_count(); ++e) {
    const Vector8d ue = gather(solution.displacements, edofs, e);
    energy(e) = ue.dot(ke * ue);
  }
  return energy;
}

ComplianceField elemental_compliance(const StructuredGrid& grid, const MaterialModel& material,
                                     const FemSolution& solution, const Eigen::Ref<const Eigen::VectorXd>& moduli) {
  check_sizes(grid, solution, moduli.size());
  ComplianceField out;
  out.elemental = moduli.cwiseProduct(unit_strain_energy(grid, material, solution));
  out.total = out.elemental.sum();
  return out;
}

double contrast_index(const Eigen::Ref<const Eigen::VectorXd>& rho) {
  if (rho.size() == 0) return 0.0;
  const auto crisp = (rho.array() < 0.01 || rho.array() > 0.99).count();
  return double(crisp) / double(rho.size());
}

double contrast_index(const Eigen::Ref<const Eigen::VectorXd>& rho, const ElementMask& active) {
  Index crisp = 0;
  Index total = 0;
  for (Index e = 0; e < rho.size(); ++e) {
    if (!active(e)) continue;
    ++total;
    if (rho(e) < 0.01 || rho(e) > 0.99) ++crisp;
  }
  return total == 0 ? 0.0 : double(crisp) / double(total);
}

double max_over_active(const Eigen::Ref<const Eigen::VectorXd>& values, const ElementMask& active) {
  double best = -std::numeric_limits<double>::infinity();
  for (Index e = 0; e < values.size(); ++e) {
    if (active(e) && values(e) > best) best = values(e);
  }
  return best;
}

double sum_over_active(const Eigen::Ref<const Eigen::VectorXd>& values, const ElementMask& active) {
  double sum = 0.0;
  for (Index e = 0; e < values.size(); ++e) {
    if (active(e)) sum += values(e);
  }
  return sum;
}

double mean_over_active(const Eigen::Ref<const Eigen::VectorXd>& values, const ElementMask& active) {
  const Index n = active.count();
  return n == 0 ? 0.0 : sum_over_active(values, active) / double(n);
}

}  // namespace pto
