#pragma once

#include "pto/grid_fem.hpp"

namespace pto {

/// Closed density interval applied to every active element.
struct DensityBounds {
  double lower = 0.0;
  double upper = 1.0;
};

/// Everything the optimizers need besides their own control parameters.
struct Problem {
  StructuredGrid grid;
  MaterialModel material;
  BoundaryConditions loads;
  double filter_radius = 1.5;
  DensityBounds bounds;
};

}  // namespace pto
