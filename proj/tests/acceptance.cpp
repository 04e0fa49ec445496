// Acceptance checks against the published results and the numerical
// properties of each module. Prints one "criterion N: PASS|FAIL" line per
// criterion (detail lines are indented). With arguments, runs only the listed
// criterion numbers. Exit status is the number of failed criteria.

#include <Eigen/Eigenvalues>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "pto/bench.hpp"

using namespace pto;
using namespace pto::bench;

namespace {

void note(const char* fmt, auto... args) {
  std::printf("  ");
  std::printf(fmt, args...);
  std::printf("\n");
  std::fflush(stdout);
}

struct Verdict {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

struct TableRow {
  ProblemKind kind;
  Method method;
  int iterations;
  double volume_fraction;
  double compliance;
  double max_stress;
  double contrast;
};

const TableRow kTable1[] = {
    {ProblemKind::mbb, Method::ptoc, 170, 0.35, 266.61, 1.08, 0.80},
    {ProblemKind::mbb, Method::ptos, 206, 0.31, 294.92, 1.08, 0.83},
    {ProblemKind::cantilever, Method::ptoc, 106, 0.35, 88.54, 0.57, 0.85},
    {ProblemKind::cantilever, Method::ptos, 164, 0.34, 90.62, 0.57, 0.88},
    {ProblemKind::lbracket, Method::ptoc, 78, 0.35, 235.25, 1.05, 0.83},
    {ProblemKind::lbracket, Method::ptos, 187, 0.33, 248.97, 1.05, 0.85},
};

Verdict table1() {
  Verdict v;
  for (const TableRow& row : kTable1) {
    ProblemSpec spec = ProblemSpec::standard(row.kind);
    spec.volume_fraction = row.volume_fraction;
    spec.stress_limit = row.max_stress;
    const auto start = std::chrono::steady_clock::now();
    const RunSummary s = run_benchmark(spec, row.method).summary;
    const std::string name = std::string(to_string(row.kind)) + "/" + to_string(row.method);
    note("%-18s it %4d (%d)  vf %.4f (%.2f)  C %8.3f (%.2f)  vm %.4f (%.2f)  ci %.3f (%.2f)  %.1f s", name.c_str(),
         s.iterations, row.iterations, s.volume_fraction, row.volume_fraction, s.compliance, row.compliance,
         s.max_von_mises, row.max_stress, s.contrast_index, row.contrast, seconds_since(start));
    v.require(s.termination == Termination::converged, name + " did not converge");
    v.require(std::abs(s.volume_fraction - row.volume_fraction) <= 0.01, name + " volume fraction");
    v.require(std::abs(s.compliance - row.compliance) <= 0.03 * row.compliance, name + " compliance");
    v.require(std::abs(s.max_von_mises - row.max_stress) <= 0.005, name + " max stress");
    v.require(std::abs(s.contrast_index - row.contrast) <= 0.03, name + " contrast index");
    v.require(std::abs(s.iterations - row.iterations) <= 0.25 * row.iterations, name + " iterations");
  }
  return v;
}

Verdict table2() {
  Verdict v;
  constexpr int kRounds = 4;
  const struct {
    ProblemKind kind;
    double stress, volume;
  } published[] = {{ProblemKind::mbb, 12.8, 9.5}, {ProblemKind::cantilever, 5.5, 4.1}, {ProblemKind::lbracket, 7.0, 4.0}};
  double stress_sum = 0.0, volume_sum = 0.0;
  for (const auto& p : published) {
    const AlternationReport r = run_alternation(ProblemSpec::standard(p.kind), 0.5, kRounds);
    std::ostringstream rounds;
    for (const AlternationRound& round : r.rounds) {
      char buf[64];
      std::snprintf(buf, sizeof buf, " (%.2f, %.2f)", round.stress_improvement, round.volume_improvement);
      rounds << buf;
    }
    note("%-10s stress %5.2f%% (%.1f)  volume %5.2f%% (%.1f)  per round (stress, volume):%s", to_string(p.kind),
         r.mean_stress_improvement, p.stress, r.mean_volume_improvement, p.volume, rounds.str().c_str());
    stress_sum += r.mean_stress_improvement;
    volume_sum += r.mean_volume_improvement;
    if (p.kind == ProblemKind::mbb) {
      v.require(std::abs(r.mean_stress_improvement - 12.8) <= 3.0, "MBB stress improvement");
      v.require(std::abs(r.mean_volume_improvement - 9.5) <= 3.0, "MBB volume improvement");
    }
  }
  const double stress = stress_sum / 3.0, volume = volume_sum / 3.0;
  note("average    stress %5.2f%% (8.4)  volume %5.2f%% (5.9)", stress, volume);
  v.require(std::abs(stress - 8.4) <= 2.0, "average stress improvement");
  v.require(std::abs(volume - 5.9) <= 2.0, "average volume improvement");
  return v;
}

Verdict sweep() {
  Verdict v;
  const std::vector<double> fractions{0.25, 0.30, 0.35, 0.40, 0.45, 0.50};
  for (ProblemKind kind : {ProblemKind::mbb, ProblemKind::cantilever, ProblemKind::lbracket}) {
    const std::vector<SweepRow> rows = run_sweep(ProblemSpec::standard(kind), fractions);
    for (const SweepRow& r : rows) {
      note("%-10s vf %.2f  C_ptoc %9.4f  C_oc %9.4f  gap %.3f%%", to_string(kind), r.volume_fraction,
           r.ptoc.compliance, r.oc.compliance, 100.0 * r.relative_gap);
      char what[64];
      std::snprintf(what, sizeof what, "%s vf %.2f gap", to_string(kind), r.volume_fraction);
      v.require(r.relative_gap <= 0.03, what);
    }
  }
  return v;
}

Verdict small_oracle() {
  Verdict v;
  ProblemSpec spec = ProblemSpec::standard(ProblemKind::mbb);
  spec.nelx = 6;
  spec.nely = 4;
  const Problem p = build_problem(spec);
  std::mt19937 rng(6);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  for (bool solid : {true, false}) {
    Eigen::VectorXd rho(24);
    for (Index e = 0; e < 24; ++e) rho(e) = solid ? 1.0 : u(rng);
    const Eigen::VectorXd moduli = interpolate_modulus(rho.array(), p.material).matrix();
    const FemSolution s = assemble_and_solve(p.grid, p.loads, p.material, moduli);
    const Eigen::MatrixXd k = oracle::dense_stiffness(6, 4, p.material.nu, moduli);
    const Eigen::VectorXd ref = oracle::dense_solve(k, p.loads.load, p.loads.fixed_dofs);
    const double disp_err = (s.displacements - ref).norm() / ref.norm();
    const ComplianceField c = elemental_compliance(p.grid, p.material, s, moduli);
    const double fu = p.loads.load.dot(s.displacements);
    const double comp_err = std::abs(c.elemental.sum() - fu) / std::abs(fu);
    note("%s design: displacement rel. error %.2e, compliance sum rel. error %.2e", solid ? "solid " : "random",
         disp_err, comp_err);
    v.require(disp_err <= 1e-9, "displacements");
    v.require(comp_err <= 1e-8, "compliance sum");
  }
  return v;
}

Verdict stiffness() {
  Verdict v;
  for (double nu : {0.0, 0.3, 0.45}) {
    const Matrix8d ke = element_stiffness<double>(nu);
    const double asym = (ke - ke.transpose()).cwiseAbs().maxCoeff();
    const Eigen::SelfAdjointEigenSolver<Matrix8d> eig(ke);
    const auto& lambda = eig.eigenvalues();
    const double top = lambda.cwiseAbs().maxCoeff();
    int zero = 0;
    for (int i = 0; i < 8; ++i) zero += std::abs(lambda(i)) < 1e-10 * top;
    note("nu %.2f: %d near-zero eigenvalues, smallest nonzero %.4f, max |K - K^T| %.1e", nu, zero, lambda(3), asym);
    v.require(zero == 3, "rigid-body modes");
    v.require(asym <= 4.0 * std::numeric_limits<double>::epsilon() * top, "symmetry");
    v.require(lambda(3) > 1e-10 * top, "positive elastic modes");
  }
  return v;
}

Verdict filter() {
  Verdict v;
  double row_err = 0.0, const_err = 0.0;
  for (double r : {1.2, 1.5, 2.0, 3.5}) {
    StructuredGrid g(17, 9);
    const FilterOperator f = build_filter(g, r);
    const Index n = g.element_count();
    row_err = std::max(row_err, ((f.weights() * Eigen::VectorXd::Ones(n)).array() - 1.0).abs().maxCoeff());
    const_err = std::max(const_err, (apply_filter(f, Eigen::VectorXd::Constant(n, 0.37)).array() - 0.37).abs().maxCoeff());
  }
  const StructuredGrid g(5, 5);
  const FilterOperator f = build_filter(g, 1.5);
  const Index c = g.element_index(2, 2);
  const double side = f.raw_weights().coeff(c, g.element_index(1, 2));
  const double diag = f.raw_weights().coeff(c, g.element_index(1, 1));
  const double self = f.raw_weights().coeff(c, c);
  note("max row-sum error %.1e, max constant-field error %.1e", row_err, const_err);
  note("rmin 1.5 raw weights: self %.15f, side %.15f, diagonal %.15f", self, side, diag);
  v.require(row_err <= 1e-12, "row sums");
  v.require(const_err <= 1e-12, "constant fixed point");
  v.require(std::abs(side - 0.5) <= 1e-12, "side weight");
  v.require(std::abs(diag - (1.5 - std::sqrt(2.0))) <= 1e-12, "diagonal weight");
  v.require(std::abs(self - 1.5) <= 1e-12, "self weight");
  return v;
}

Verdict distribution() {
  Verdict v;
  std::mt19937 rng(77);
  std::uniform_real_distribution<double> u(0.0, 1.0);

  double homogeneity = 0.0;
  {
    const StructuredGrid g(9, 6);
    const FilterOperator f = build_filter(g, 1.5);
    Eigen::VectorXd w(54);
    for (Index i = 0; i < 54; ++i) w(i) = u(rng);
    for (double q : {1.0, 2.0}) {
      const Distribution a = distribute(20.0, w, q, f, DistributionOptions{});
      for (double c : {1e-3, 0.5, 7.0, 1e4}) {
        const Distribution b = distribute(20.0, c * w, q, f, DistributionOptions{});
        homogeneity = std::max(homogeneity, (a.density - b.density).cwiseAbs().maxCoeff());
      }
    }
  }
  note("weight scaling changes the field by at most %.1e", homogeneity);
  v.require(homogeneity <= 1e-12, "homogeneity");

  // Grids of 2..10 elements a side, filter radius 1..3, random bounds, weights,
  // exponent and a target strictly inside the attainable range.
  std::uniform_int_distribution<int> side(2, 10);
  double worst = 0.0;
  int misses = 0, trimmed = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int nelx = side(rng), nely = side(rng);
    const int n = nelx * nely;
    const double rmin = 1.0 + 2.0 * u(rng);
    DistributionOptions opts;
    opts.bounds.lower = trial % 3 == 0 ? 0.1 * u(rng) : 0.0;
    opts.bounds.upper = trial % 5 == 0 ? 0.6 + 0.4 * u(rng) : 1.0;
    Eigen::VectorXd w(n);
    for (int i = 0; i < n; ++i) w(i) = u(rng);
    const double q = trial % 2 ? 2.0 : 1.0;
    const double span = opts.bounds.upper - opts.bounds.lower;
    const double target = n * (opts.bounds.lower + span * (0.02 + 0.96 * u(rng)));
    const Distribution d = distribute(target, w, q, build_filter(StructuredGrid(nelx, nely), rmin), opts);
    const double err = std::abs(d.density.sum() - target);
    worst = std::max(worst, err);
    misses += err > 0.001;
    trimmed += d.trimmed;
  }
  note("1000 random instances: worst |sum - target| %.2e, %d above 0.001, %d passes cut back", worst, misses, trimmed);
  v.require(misses == 0, "random instances");

  const Eigen::Vector2d w(1.0, 3.0);
  DistributionOptions tight;
  tight.inner_tol = 1e-8;
  const Distribution d = distribute(1.5, w, 1.0, build_filter(StructuredGrid(2, 1), 1.0), tight);
  const double fixed_err = (d.density - Eigen::Vector2d(0.5, 1.0)).cwiseAbs().maxCoeff();
  note("two-element fixed point: (%.9f, %.9f) after %lld passes", d.density(0), d.density(1),
       static_cast<long long>(d.passes));
  v.require(fixed_err <= 1e-6, "two-element fixed point");
  return v;
}

Verdict mass() {
  Verdict v;
  const ProblemSpec spec = ProblemSpec::standard(ProblemKind::mbb);
  const Problem p = build_problem(spec);
  const double target = double(p.grid.active_count()) * spec.volume_fraction;
  double worst = 0.0;
  int iterations = 0;
  run(p, optimizer_config(spec, Mode::compliance), [&](const IterationRecord& r) {
    worst = std::max(worst, std::abs(r.material - target));
    ++iterations;
  });
  note("%d iterations, max |sum - N vlim| %.2e", iterations, worst);
  v.require(worst <= 0.002, "mass drift");
  return v;
}

Verdict sensitivity() {
  Verdict v;
  ProblemSpec spec = ProblemSpec::standard(ProblemKind::mbb);
  spec.nelx = 4;
  spec.nely = 3;
  spec.load_spread = 1;
  const Problem p = build_problem(spec);
  auto total = [&](const Eigen::VectorXd& rho) {
    const Eigen::VectorXd moduli = interpolate_modulus(rho.array(), p.material).matrix();
    return p.loads.load.dot(assemble_and_solve(p.grid, p.loads, p.material, moduli).displacements);
  };
  const Eigen::VectorXd rho = Eigen::VectorXd::Constant(12, 0.5);
  const Eigen::VectorXd moduli = interpolate_modulus(rho.array(), p.material).matrix();
  const FemSolution s = assemble_and_solve(p.grid, p.loads, p.material, moduli);
  const Eigen::VectorXd dc = compliance_sensitivity(rho, unit_strain_energy(p.grid, p.material, s), p.material);
  double worst = 0.0;
  for (Index e = 0; e < 12; ++e) {
    Eigen::VectorXd plus = rho, minus = rho;
    plus(e) += 1e-6;
    minus(e) -= 1e-6;
    const double fd = (total(plus) - total(minus)) / 2e-6;
    worst = std::max(worst, std::abs(dc(e) - fd) / std::abs(fd));
  }
  note("max relative difference to central differences %.2e", worst);
  v.require(worst <= 1e-4, "finite differences");
  return v;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Verdict determinism() {
  Verdict v;
  const ProblemSpec spec = ProblemSpec::standard(ProblemKind::mbb);
  const auto base = std::filesystem::temp_directory_path() / "pto_acceptance_determinism";
  std::filesystem::remove_all(base);
  run_benchmark(spec, Method::ptoc, {base / "a"});
  run_benchmark(spec, Method::ptoc, {base / "b"});
  int compared = 0;
  for (const auto& entry : std::filesystem::directory_iterator(base / "a")) {
    const std::string name = entry.path().filename().string();
    // The summary carries the wall time.
    if (name == "summary.txt") continue;
    ++compared;
    v.require(slurp(entry.path()) == slurp(base / "b" / name), name + " differs");
  }
  note("%d artifact files compared", compared);
  v.require(compared >= 7, "missing artifacts");
  std::filesystem::remove_all(base);
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::function<Verdict()>> criteria{table1,      table2, sweep, small_oracle, stiffness,
                                                       filter,      distribution, mass,  sensitivity,  determinism};
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  int failed = 0;
  for (int k = 1; k <= int(criteria.size()); ++k) {
    if (!selected.empty() && !selected.count(k)) continue;
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[k - 1]();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail = std::string("exception: ") + e.what();
    }
    failed += !v.pass;
    std::printf("criterion %d: %s (%.1f s)%s%s\n", k, v.pass ? "PASS" : "FAIL", seconds_since(start),
                v.detail.empty() ? "" : " ", v.detail.c_str());
    std::fflush(stdout);
  }
  return failed;
}
