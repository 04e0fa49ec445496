#pragma once

// Optimality-criteria compliance minimization sharing the FE core and filter
// with the PTO optimizers. The filter acts either on the sensitivities (the
// classic 88-line default) or on the design field.

#include <Eigen/Core>

#include "pto/pto_optimizers.hpp"

namespace pto {

enum class OcFilter {
  /// dC/dx_e = sum_j w_ej x_j dC/dx_j / max(1e-3, x_e); physical = design.
  sensitivity,
  /// physical = W x, with sensitivities chained through W^T.
  density,
};

struct OcConfig {
  double volume_fraction = 0.35;
  OcFilter filter = OcFilter::sensitivity;
  /// Per-iteration move limit on each design variable.
  double move = 0.2;
  /// Damping exponent on the optimality ratio.
  double damping = 0.5;
  /// Relative width (l2 - l1)/(l1 + l2) at which the multiplier search stops.
  double bisection_tol = 1e-3;
  double stop_tol_change = 0.01;
  int min_iterations = 0;
  int max_iterations = 2000;

  void validate() const;
};

/// dC/drho_e = -p rho_e^(p-1) (E0 - Emin) u_e^T KE u_e.
Eigen::VectorXd compliance_sensitivity(const Eigen::Ref<const Eigen::VectorXd>& density,
                                       const Eigen::Ref<const Eigen::VectorXd>& unit_energy,
                                       const MaterialModel& material);

struct OcUpdate {
  /// Updated design variables.
  Eigen::VectorXd design;
  /// Densities the FE model sees.
  Eigen::VectorXd physical;
  double multiplier = 0.0;
  /// max |design_new - design_old| over active elements.
  double change = 0.0;
  int bisection_steps = 0;
};

/// Multiplicative OC update x * (-dC/dx / (lambda dV/dx))^damping, limited to
/// +/- move and to the bounds. `sensitivities` are taken with respect to the
/// physical densities and filtered per config.filter; lambda is bisected until
/// the active physical material matches `target` (an absolute amount).
/// Throws BisectionFailure if the target cannot be bracketed.
OcUpdate oc_update(const Eigen::Ref<const Eigen::VectorXd>& design, const Eigen::Ref<const Eigen::VectorXd>& sensitivities,
                   double target, const OcConfig& config, const FilterOperator& filter, const ElementMask& active,
                   const DensityBounds& bounds);

/// OC driver with the same records and analysis as pto::run. Stops when the
/// design change drops below stop_tol_change.
RunResult run_oc(const Problem& problem, const OcConfig& config, const IterationObserver& observer = {});

}  // namespace pto
