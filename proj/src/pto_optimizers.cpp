#include "pto/pto_optimizers.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <cstdint>
#include <vector>

namespace pto {

const char* to_string(Mode mode) { return mode == Mode::stress ? "stress" : "compliance"; }

const char* to_string(Termination termination) {
  return termination == Termination::converged ? "converged" : "max_iterations";
}

OptimizerConfig OptimizerConfig::stress(double stress_limit) {
  OptimizerConfig config;
  config.mode = Mode::stress;
  config.q = 2.0;
  config.alpha = 0.0;
  config.stress_limit = stress_limit;
  return config;
}

OptimizerConfig OptimizerConfig::compliance(double volume_fraction) {
  OptimizerConfig config;
  config.mode = Mode::compliance;
  config.q = 1.0;
  config.alpha = 0.5;
  config.volume_fraction = volume_fraction;
  return config;
}

void OptimizerConfig::validate() const {
  if (!(q > 0.0)) throw InvalidSpec("proportion exponent q must be positive");
  if (!(alpha >= 0.0 && alpha < 1.0)) throw InvalidSpec("history coefficient must lie in [0, 1)");
  if (!(move_fraction > 0.0)) throw InvalidSpec("move fraction must be positive");
  if (!(inner_tol > 0.0) || !(stop_tol_stress > 0.0) || !(stop_tol_change > 0.0)) {
    throw InvalidSpec("tolerances must be positive");
  }
  if (inner_step_cap < 1 || max_iterations < 1 || min_iterations < 0) {
    throw InvalidSpec("iteration caps must be positive");
  }
  if (mode == Mode::stress && !(stress_limit > 0.0)) throw InvalidSpec("stress limit must be positive");
  if (mode == Mode::compliance && !(volume_fraction > 0.0 && volume_fraction <= 1.0)) {
    throw InvalidSpec("volume fraction must lie in (0, 1]");
  }
}

std::string format_record(const IterationRecord& record, Mode mode) {
  char line[160];
  std::snprintf(line, sizeof line, "It:%5d Max_vms:%5.2f Comp:%8.2f Vol:%5.2f %s:%6.3f", record.iteration,
                record.max_von_mises, record.compliance, record.volume_fraction,
                mode == Mode::stress ? "Res" : "Ch", record.metric);
  return line;
}

namespace {

void check_bounds(const DensityBounds& bounds) {
  if (!(bounds.lower >= 0.0 && bounds.lower <= bounds.upper && bounds.upper <= 1.0)) {
    throw InvalidSpec("density bounds must satisfy 0 <= lower <= upper <= 1");
  }
}

void clamp_and_pin(Eigen::VectorXd& x, const ElementMask& active, const DensityBounds& bounds) {
  for (Index e = 0; e < x.size(); ++e) {
    x(e) = active(e) ? std::clamp(x(e), bounds.lower, bounds.upper) : bounds.lower;
  }
}

}  // namespace

Distribution distribute(double target, const Eigen::Ref<const Eigen::VectorXd>& weights, double q,
                        const FilterOperator& filter, const ElementMask& active, const DistributionOptions& options) {
  const Index n = weights.size();
  if (n != filter.size() || active.size() != n) {
    throw InvalidSpec("weights, mask and filter sizes differ");
  }
  check_bounds(options.bounds);
  const Index n_active = active.count();
  if (n_active == 0) throw InvalidSpec("no active elements");
  const double lowest = double(n_active) * options.bounds.lower;
  const double highest = double(n_active) * options.bounds.upper;
  if (!(target >= lowest && target <= highest)) {
    std::ostringstream msg;
    msg << "target material " << target << " outside attainable range [" << lowest << ", " << highest << "] for "
        << n_active << " active elements";
    throw UnreachableTarget(msg.str());
  }

  Distribution out;
  Eigen::VectorXd proportion = Eigen::VectorXd::Zero(n);
  for (Index e = 0; e < n; ++e) {
    if (!active(e)) continue;
    if (!(weights(e) >= 0.0)) throw InvalidSpec("distribution weights must be non-negative and finite");
    proportion(e) = std::pow(weights(e), q);
  }
  const double total = proportion.sum();
  if (!(total > 0.0) || !std::isfinite(total)) {
    out.uniform_fallback = true;
    for (Index e = 0; e < n; ++e) proportion(e) = active(e) ? 1.0 : 0.0;
    proportion /= double(n_active);
  } else {
    proportion /= total;
  }

  // The filter is linear, so W * (remaining * proportion) is remaining * (W * proportion).
  const Eigen::VectorXd spread = filter.weights() * proportion;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  double remaining = target;

  // The only field holding the largest attainable amount is the all-upper
  // one; the passes approach it without ever reaching it.
  if (target >= highest) {
    for (Index e = 0; e < n; ++e) x(e) = active(e) ? options.bounds.upper : options.bounds.lower;
    out.density = std::move(x);
    out.remaining = target - highest;
    return out;
  }

  auto count_step = [&] {
    if (out.steps >= options.step_cap) {
      std::ostringstream msg;
      msg << "distribution did not converge after " << out.steps << " steps (" << out.passes
          << " passes, remaining " << remaining << " of target " << target << ")";
      throw StagnantInnerLoop(msg.str());
    }
    ++out.steps;
  };

  auto literal_pass = [&] {
    count_step();
    const Eigen::VectorXd before = x;
    x += remaining * spread;
    clamp_and_pin(x, active, options.bounds);
    const double previous = remaining;
    remaining = target - sum_over_active(x, active);
    ++out.passes;
    if (remaining < -options.inner_tol && !options.keep_overshoot) {
      // Filter columns near the boundary sum to more than one, so a full pass
      // can place more than RM. Take the fraction of the pass that lands on
      // the target instead; the placed amount is monotone in the fraction.
      double lo = 0.0, hi = 1.0;
      for (int k = 0; k < 200 && std::abs(remaining) > 1e-12 * std::max(1.0, target); ++k) {
        const double t = 0.5 * (lo + hi);
        x = before + (t * previous) * spread;
        clamp_and_pin(x, active, options.bounds);
        remaining = target - sum_over_active(x, active);
        (remaining > 0.0 ? lo : hi) = t;
      }
      out.trimmed = true;
    }
    // Increments are non-negative, so the placed amount never shrinks; a pass
    // that places nothing means every receiving element is saturated.
    if (!(remaining < previous) && remaining > options.inner_tol) {
      std::ostringstream msg;
      msg << "distribution stalled after " << out.passes << " passes (remaining " << remaining << " of target "
          << target << "); all weighted elements are saturated";
      throw StagnantInnerLoop(msg.str());
    }
  };

  // After the first pass no element sits below the lower bound and the
  // saturated set only grows. While it is fixed, every pass scales the
  // remainder by (1 - share), share being the spread still landing on
  // unsaturated elements, so a run of passes has a closed form. Long runs are
  // skipped in one step up to the pass before the next saturation or exit.
  constexpr std::int64_t kMinSkip = 64;
  constexpr double kMaxPasses = 1e15;
  std::vector<Index> open;
  while (remaining > options.inner_tol) {
    if (out.passes == 0) {
      literal_pass();
      continue;
    }
    open.clear();
    double share = 0.0;
    for (Index e = 0; e < n; ++e) {
      if (active(e) && spread(e) > 0.0 && x(e) < options.bounds.upper) {
        open.push_back(e);
        share += spread(e);
      }
    }
    std::int64_t skip = 0;
    if (share > 0.0 && share < 1.0) {
      const double log_rate = std::log1p(-share);
      // Passes until the remainder drops to the tolerance.
      double passes = std::ceil(std::log(options.inner_tol / remaining) / log_rate);
      for (Index e : open) {
        // x_e after k passes: x_e + spread_e * remaining * (1 - rate^k) / share.
        const double g = 1.0 - (options.bounds.upper - x(e)) * share / (spread(e) * remaining);
        if (g > 0.0) passes = std::min(passes, std::ceil(std::log(g) / log_rate));
      }
      if (!(passes <= kMaxPasses)) {
        std::ostringstream msg;
        msg << "distribution would need " << passes << " more passes (remaining " << remaining << " of target "
            << target << ", share " << share << ")";
        throw StagnantInnerLoop(msg.str());
      }
      skip = std::int64_t(passes) - 1;
    }
    if (skip < kMinSkip) {
      literal_pass();
      continue;
    }
    count_step();
    const double placed = -std::expm1(double(skip) * std::log1p(-share)) * remaining / share;
    for (Index e : open) x(e) += spread(e) * placed;
    clamp_and_pin(x, active, options.bounds);
    remaining = target - sum_over_active(x, active);
    out.passes += skip;
  }
  clamp_and_pin(x, active, options.bounds);
  out.density = std::move(x);
  out.remaining = remaining;
  return out;
}

Distribution distribute(double target, const Eigen::Ref<const Eigen::VectorXd>& weights, double q,
                        const FilterOperator& filter, const DistributionOptions& options) {
  return distribute(target, weights, q, filter, ElementMask::Constant(weights.size(), true), options);
}

namespace {

DistributionOptions distribution_options(const OptimizerConfig& config, const DensityBounds& bounds) {
  return {bounds, config.inner_tol, config.inner_step_cap, config.keep_overshoot};
}

}  // namespace

StressStep ptos_step(const Eigen::Ref<const Eigen::VectorXd>& density, const Eigen::Ref<const Eigen::VectorXd>& von_mises,
                     const OptimizerConfig& config, const FilterOperator& filter, const ElementMask& active,
                     const DensityBounds& bounds) {
  const double current = sum_over_active(density, active);
  const double move = config.move_fraction * double(active.count());
  const double peak = max_over_active(von_mises, active);

  StressStep out;
  out.target = peak > config.stress_limit ? current + move : current - move;
  Eigen::VectorXd weights = von_mises;
  for (Index e = 0; e < weights.size(); ++e) {
    if (!active(e)) weights(e) = 0.0;
  }
  out.distribution = distribute(out.target, weights, config.q, filter, active, distribution_options(config, bounds));
  out.density = out.distribution.density;
  return out;
}

ComplianceStep ptoc_step(const Eigen::Ref<const Eigen::VectorXd>& density,
                         const Eigen::Ref<const Eigen::VectorXd>& compliance, double target,
                         const OptimizerConfig& config, const FilterOperator& filter, const ElementMask& active,
                         const DensityBounds& bounds) {
  Eigen::VectorXd weights = compliance;
  for (Index e = 0; e < weights.size(); ++e) {
    if (!active(e)) weights(e) = 0.0;
  }
  ComplianceStep out;
  out.distribution = distribute(target, weights, config.q, filter, active, distribution_options(config, bounds));
  out.optimum = out.distribution.density;
  out.density = config.alpha * density + (1.0 - config.alpha) * out.optimum;
  out.change = 0.0;
  for (Index e = 0; e < density.size(); ++e) {
    if (active(e)) out.change = std::max(out.change, std::abs(out.density(e) - density(e)));
  }
  return out;
}

double listing_change_metric(double alpha, const Eigen::Ref<const Eigen::VectorXd>& optimum,
                             const Eigen::Ref<const Eigen::VectorXd>& updated) {
  return ((1.0 / alpha - 1.0) * (optimum - updated)).cwiseAbs().maxCoeff();
}

Analyzer::Analyzer(const Problem& problem)
    : problem_(problem), system_(problem.grid, problem.loads, problem.material) {}

DesignAnalysis Analyzer::analyze(const Eigen::Ref<const Eigen::VectorXd>& density) {
  const StructuredGrid& grid = problem_.grid;
  DesignAnalysis out;
  out.moduli = interpolate_modulus(density.array(), problem_.material).matrix();
  out.solution = system_.solve(out.moduli);
  out.stress = recover_stress(grid, problem_.material, out.solution, out.moduli);
  out.compliance = elemental_compliance(grid, problem_.material, out.solution, out.moduli);
  out.max_von_mises = max_over_active(out.stress.von_mises, grid.active_mask());
  return out;
}

RunResult run(const Problem& problem, const OptimizerConfig& config, const IterationObserver& observer) {
  config.validate();
  check_bounds(problem.bounds);
  const StructuredGrid& grid = problem.grid;
  const ElementMask& active = grid.active_mask();
  const FilterOperator filter = build_filter(grid, problem.filter_radius);
  Analyzer analyzer(problem);

  const double initial = config.mode == Mode::stress ? 0.5 : config.volume_fraction;
  Eigen::VectorXd x = Eigen::VectorXd::Constant(grid.element_count(), initial);
  clamp_and_pin(x, active, problem.bounds);

  // Fixed for the whole run in compliance mode.
  const double compliance_target = double(active.count()) * config.volume_fraction;
  if (config.mode == Mode::compliance &&
      !(compliance_target >= double(active.count()) * problem.bounds.lower &&
        compliance_target <= double(active.count()) * problem.bounds.upper)) {
    throw UnreachableTarget("volume fraction outside the density bounds");
  }

  RunResult result;
  double change = std::numeric_limits<double>::infinity();
  Distribution last_distribution;
  for (int iteration = 1;; ++iteration) {
    result.analysis = analyzer.analyze(x);
    const DesignAnalysis& a = result.analysis;

    IterationRecord record;
    record.iteration = iteration;
    record.max_von_mises = a.max_von_mises;
    record.compliance = a.compliance.total;
    record.material = sum_over_active(x, active);
    record.volume_fraction = record.material / double(active.count());
    record.inner_remaining = last_distribution.remaining;
    record.inner_passes = last_distribution.passes;
    record.uniform_fallback = last_distribution.uniform_fallback;

    bool done = false;
    if (config.mode == Mode::stress) {
      record.metric = std::abs(a.max_von_mises - config.stress_limit);
      const double tol = config.relative_stress_tol ? config.stop_tol_stress * config.stress_limit
                                                    : config.stop_tol_stress;
      done = record.metric < tol && iteration > config.min_iterations;
    } else {
      record.metric = change;
      done = change < config.stop_tol_change && iteration > config.min_iterations;
    }
    result.history.push_back(record);
    if (observer) observer(record);

    if (done) {
      result.termination = Termination::converged;
      break;
    }
    if (iteration >= config.max_iterations) {
      result.termination = Termination::max_iterations;
      break;
    }

    if (config.mode == Mode::stress) {
      StressStep step = ptos_step(x, a.stress.von_mises, config, filter, active, problem.bounds);
      last_distribution = std::move(step.distribution);
      x = std::move(step.density);
    } else {
      ComplianceStep step =
          ptoc_step(x, a.compliance.elemental, compliance_target, config, filter, active, problem.bounds);
      last_distribution = std::move(step.distribution);
      change = step.change;
      x = std::move(step.density);
    }
  }
  result.density = std::move(x);
  return result;
}

}  // namespace pto
