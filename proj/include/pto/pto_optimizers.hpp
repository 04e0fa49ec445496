#pragma once

// Proportional topology optimization: stress-constrained volume minimization
// (stress mode) and volume-constrained compliance minimization (compliance
// mode).
//
// Material bookkeeping per outer iteration:
//   target    TM  amount the distribution has to reach
//   current   CM  sum of active densities before the step
//   move      MM  move_fraction * active element count (stress mode only)
//   remaining RM  TM minus the amount actually placed so far
// The inner loop adds RM in proportion to weight^q, filters the increment,
// clamps to the density bounds, and repeats while RM > inner_tol.

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "pto/density_filter.hpp"
#include "pto/field_analysis.hpp"
#include "pto/problem.hpp"

namespace pto {

enum class Mode { stress, compliance };

enum class Termination { converged, max_iterations };

const char* to_string(Mode mode);
const char* to_string(Termination termination);

struct OptimizerConfig {
  Mode mode = Mode::compliance;
  /// Proportion exponent applied to the stress or compliance weights.
  double q = 1.0;
  /// History coefficient blending the previous field into the new one.
  double alpha = 0.5;
  double move_fraction = 0.001;
  double inner_tol = 0.001;
  /// Cap on executed inner-loop steps (literal passes plus skipped runs).
  int inner_step_cap = 10000;
  /// See DistributionOptions::keep_overshoot.
  bool keep_overshoot = false;
  double stress_limit = 1.0;
  double volume_fraction = 0.35;
  double stop_tol_stress = 0.001;
  /// Compare |max stress - limit| against stop_tol_stress * limit instead.
  bool relative_stress_tol = false;
  double stop_tol_change = 0.01;
  /// The stop rule is only honoured once the iteration count exceeds this.
  int min_iterations = 50;
  int max_iterations = 2000;

  /// q = 2, alpha = 0.
  static OptimizerConfig stress(double stress_limit);
  /// q = 1, alpha = 0.5.
  static OptimizerConfig compliance(double volume_fraction);

  void validate() const;
};

struct IterationRecord {
  int iteration = 0;
  double max_von_mises = 0.0;
  double compliance = 0.0;
  /// Mean active density.
  double volume_fraction = 0.0;
  /// Sum of active densities.
  double material = 0.0;
  /// |max stress - limit| in stress mode, max density change otherwise.
  double metric = 0.0;
  /// Signed remaining amount at exit of the step that produced this field
  /// (0 for the initial field). Slightly negative when filtering overshoots.
  double inner_remaining = 0.0;
  std::int64_t inner_passes = 0;
  bool uniform_fallback = false;
};

/// Log line in the fixed-width format of the reference listing.
std::string format_record(const IterationRecord& record, Mode mode);

struct DistributionOptions {
  DensityBounds bounds;
  double inner_tol = 0.001;
  int step_cap = 10000;
  /// Let a pass that overshoots the target by more than inner_tol stand, as
  /// the plain loop does, instead of cutting it back to the target.
  bool keep_overshoot = false;
};

struct Distribution {
  Eigen::VectorXd density;
  /// TM - sum(active density) at loop exit.
  double remaining = 0.0;
  /// Passes the plain loop would make; runs of passes with a fixed saturated
  /// set are taken in one closed-form step.
  std::int64_t passes = 0;
  /// Executed steps.
  int steps = 0;
  /// The last pass was cut back to land on the target.
  bool trimmed = false;
  /// All weights were zero; material was spread uniformly instead.
  bool uniform_fallback = false;
};

/// Proportional distribution of `target` over the active elements, starting
/// from the zero field. Passive elements end at the lower bound.
/// Throws UnreachableTarget when target is outside [n*lower, n*upper] and
/// StagnantInnerLoop when a pass places no material or the step cap is hit.
Distribution distribute(double target, const Eigen::Ref<const Eigen::VectorXd>& weights, double q,
                        const FilterOperator& filter, const ElementMask& active, const DistributionOptions& options);

Distribution distribute(double target, const Eigen::Ref<const Eigen::VectorXd>& weights, double q,
                        const FilterOperator& filter, const DistributionOptions& options);

struct StressStep {
  Eigen::VectorXd density;
  double target = 0.0;
  Distribution distribution;
};

/// One stress-mode update: grow the material by MM when the active maximum
/// von Mises exceeds the limit, shrink it by MM otherwise, then redistribute
/// in proportion to von Mises^q.
StressStep ptos_step(const Eigen::Ref<const Eigen::VectorXd>& density, const Eigen::Ref<const Eigen::VectorXd>& von_mises,
                     const OptimizerConfig& config, const FilterOperator& filter, const ElementMask& active,
                     const DensityBounds& bounds);

struct ComplianceStep {
  Eigen::VectorXd density;
  Eigen::VectorXd optimum;
  /// max_i |density_i - previous_i| over active elements.
  double change = 0.0;
  Distribution distribution;
};

/// One compliance-mode update: distribute the fixed target in proportion to
/// C_e^q, then blend with the previous field by alpha.
ComplianceStep ptoc_step(const Eigen::Ref<const Eigen::VectorXd>& density,
                         const Eigen::Ref<const Eigen::VectorXd>& compliance, double target,
                         const OptimizerConfig& config, const FilterOperator& filter, const ElementMask& active,
                         const DensityBounds& bounds);

/// Change metric in the form the reference listing computes it,
/// (1/alpha - 1) * max|optimum - updated|. Since
///   updated - previous = (1 - alpha)(optimum - previous),
///   optimum - updated  = alpha (optimum - previous),
/// this equals max|updated - previous| for alpha in (0, 1).
double listing_change_metric(double alpha, const Eigen::Ref<const Eigen::VectorXd>& optimum,
                             const Eigen::Ref<const Eigen::VectorXd>& updated);

/// FE solve plus derived fields for one density state.
struct DesignAnalysis {
  Eigen::VectorXd moduli;
  FemSolution solution;
  StressField stress;
  ComplianceField compliance;
  double max_von_mises = 0.0;
};

/// Reusable FE analysis bound to one problem.
class Analyzer {
 public:
  explicit Analyzer(const Problem& problem);
  DesignAnalysis analyze(const Eigen::Ref<const Eigen::VectorXd>& density);
  const Problem& problem() const { return problem_; }

 private:
  const Problem& problem_;
  StiffnessSystem system_;
};

struct RunResult {
  Eigen::VectorXd density;
  std::vector<IterationRecord> history;
  Termination termination = Termination::max_iterations;
  /// Analysis of the returned density.
  DesignAnalysis analysis;
};

using IterationObserver = std::function<void(const IterationRecord&)>;

/// Outer loop: FE solve, analysis, stop check, step. The initial field is
/// uniform 0.5 in stress mode and uniform volume_fraction in compliance mode.
RunResult run(const Problem& problem, const OptimizerConfig& config, const IterationObserver& observer = {});

}  // namespace pto
