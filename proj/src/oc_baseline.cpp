#include "pto/oc_baseline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace pto {

void OcConfig::validate() const {
  if (!(volume_fraction > 0.0 && volume_fraction <= 1.0)) throw InvalidSpec("volume fraction must lie in (0, 1]");
  if (!(move > 0.0 && move <= 1.0)) throw InvalidSpec("OC move limit must lie in (0, 1]");
  if (!(damping > 0.0 && damping <= 1.0)) throw InvalidSpec("OC damping exponent must lie in (0, 1]");
  if (!(bisection_tol > 0.0) || !(stop_tol_change > 0.0)) throw InvalidSpec("tolerances must be positive");
  if (max_iterations < 1 || min_iterations < 0) throw InvalidSpec("iteration caps must be positive");
}

Eigen::VectorXd compliance_sensitivity(const Eigen::Ref<const Eigen::VectorXd>& density,
                                       const Eigen::Ref<const Eigen::VectorXd>& unit_energy,
                                       const MaterialModel& material) {
  return (-material.penal * (material.e0 - material.e_min) * density.array().pow(material.penal - 1.0) *
          unit_energy.array())
      .matrix();
}

namespace {

constexpr int kMaxBisectionSteps = 200;

class OcCandidate {
 public:
  OcCandidate(const Eigen::Ref<const Eigen::VectorXd>& design, Eigen::VectorXd ratio, const OcConfig& config,
              const FilterOperator& filter, const ElementMask& active, const DensityBounds& bounds)
      : design_(design), ratio_(std::move(ratio)), config_(config), filter_(filter), active_(active), bounds_(bounds) {}

  /// Design update for multiplier `lambda`; lambda = 0 means every positive
  /// ratio pushes to its upper move limit.
  Eigen::VectorXd design(double lambda) const {
    Eigen::VectorXd x(design_.size());
    for (Index e = 0; e < x.size(); ++e) {
      if (!active_(e)) {
        x(e) = bounds_.lower;
        continue;
      }
      const double lo = std::max(bounds_.lower, design_(e) - config_.move);
      const double hi = std::min(bounds_.upper, design_(e) + config_.move);
      double candidate;
      if (lambda == 0.0) {
        candidate = ratio_(e) > 0.0 ? hi : lo;
      } else {
        candidate = design_(e) * std::pow(ratio_(e) / lambda, config_.damping);
      }
      x(e) = std::clamp(candidate, lo, hi);
    }
    return x;
  }

  Eigen::VectorXd physical(const Eigen::VectorXd& x) const {
    Eigen::VectorXd phys = config_.filter == OcFilter::density ? Eigen::VectorXd(filter_.weights() * x) : x;
    for (Index e = 0; e < phys.size(); ++e) {
      if (!active_(e)) phys(e) = bounds_.lower;
    }
    return phys;
  }

  double material(const Eigen::VectorXd& phys) const { return sum_over_active(phys, active_); }

 private:
  const Eigen::Ref<const Eigen::VectorXd>& design_;
  Eigen::VectorXd ratio_;
  const OcConfig& config_;
  const FilterOperator& filter_;
  const ElementMask& active_;
  const DensityBounds& bounds_;
};

}  // namespace

OcUpdate oc_update(const Eigen::Ref<const Eigen::VectorXd>& design, const Eigen::Ref<const Eigen::VectorXd>& sensitivities,
                   double target, const OcConfig& config, const FilterOperator& filter, const ElementMask& active,
                   const DensityBounds& bounds) {
  const Index n = design.size();
  if (sensitivities.size() != n || filter.size() != n || active.size() != n) {
    throw InvalidSpec("design, sensitivity, mask and filter sizes differ");
  }

  Eigen::VectorXd dc = sensitivities;
  Eigen::VectorXd dv = Eigen::VectorXd::Ones(n);
  for (Index e = 0; e < n; ++e) {
    if (!active(e)) dc(e) = dv(e) = 0.0;
  }
  if (config.filter == OcFilter::density) {
    // Chain rule through the filter, passive physical densities held fixed.
    dc = filter.weights().transpose() * dc;
    dv = filter.weights().transpose() * dv;
  } else {
    // Heuristic smoothing of the density-weighted sensitivities.
    dc = filter.weights() * design.cwiseProduct(dc);
    for (Index e = 0; e < n; ++e) dc(e) /= std::max(1e-3, design(e));
  }
  Eigen::VectorXd ratio(n);
  for (Index e = 0; e < n; ++e) {
    ratio(e) = active(e) && dv(e) > 0.0 ? std::max(0.0, -dc(e) / dv(e)) : 0.0;
  }

  const OcCandidate candidate(design, std::move(ratio), config, filter, active, bounds);
  double l1 = 0.0;
  double l2 = 1e9;
  const double slack = 1e-9 * std::max(1.0, target);
  if (candidate.material(candidate.physical(candidate.design(l1))) < target - slack) {
    std::ostringstream msg;
    msg << "OC cannot reach material " << target << " within the move limit";
    throw BisectionFailure(msg.str());
  }
  int grow = 0;
  while (candidate.material(candidate.physical(candidate.design(l2))) > target) {
    if (++grow > 30) {
      std::ostringstream msg;
      msg << "OC cannot bring material down to " << target << " within the move limit";
      throw BisectionFailure(msg.str());
    }
    l2 *= 10.0;
  }

  OcUpdate out;
  out.design = design;
  out.physical = candidate.physical(out.design);
  // l1 stays 0 when the target equals the largest attainable amount; the step
  // cap stops the halving of l2 there.
  while ((l2 - l1) / (l1 + l2) > config.bisection_tol && out.bisection_steps < kMaxBisectionSteps) {
    const double mid = 0.5 * (l1 + l2);
    out.design = candidate.design(mid);
    out.physical = candidate.physical(out.design);
    if (candidate.material(out.physical) > target) {
      l1 = mid;
    } else {
      l2 = mid;
    }
    out.multiplier = mid;
    ++out.bisection_steps;
  }
  out.change = 0.0;
  for (Index e = 0; e < n; ++e) {
    if (active(e)) out.change = std::max(out.change, std::abs(out.design(e) - design(e)));
  }
  return out;
}

RunResult run_oc(const Problem& problem, const OcConfig& config, const IterationObserver& observer) {
  config.validate();
  const StructuredGrid& grid = problem.grid;
  const ElementMask& active = grid.active_mask();
  const DensityBounds& bounds = problem.bounds;
  if (!(config.volume_fraction >= bounds.lower && config.volume_fraction <= bounds.upper)) {
    throw UnreachableTarget("volume fraction outside the density bounds");
  }
  const FilterOperator filter = build_filter(grid, problem.filter_radius);
  Analyzer analyzer(problem);
  const double target = double(active.count()) * config.volume_fraction;

  Eigen::VectorXd design(grid.element_count());
  for (Index e = 0; e < design.size(); ++e) design(e) = active(e) ? config.volume_fraction : bounds.lower;
  Eigen::VectorXd physical = design;

  RunResult result;
  double change = std::numeric_limits<double>::infinity();
  for (int iteration = 1;; ++iteration) {
    result.analysis = analyzer.analyze(physical);
    const DesignAnalysis& a = result.analysis;

    IterationRecord record;
    record.iteration = iteration;
    record.max_von_mises = a.max_von_mises;
    record.compliance = a.compliance.total;
    record.material = sum_over_active(physical, active);
    record.volume_fraction = record.material / double(active.count());
    record.metric = change;
    result.history.push_back(record);
    if (observer) observer(record);

    if (change < config.stop_tol_change && iteration > config.min_iterations) {
      result.termination = Termination::converged;
      break;
    }
    if (iteration >= config.max_iterations) {
      result.termination = Termination::max_iterations;
      break;
    }

    const Eigen::VectorXd energy = unit_strain_energy(grid, problem.material, a.solution);
    const Eigen::VectorXd dc = compliance_sensitivity(physical, energy, problem.material);
    OcUpdate update = oc_update(design, dc, target, config, filter, active, bounds);
    change = update.change;
    design = std::move(update.design);
    physical = std::move(update.physical);
  }
  result.density = std::move(physical);
  return result;
}

}  // namespace pto
