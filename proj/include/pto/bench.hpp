#pragma once

// Benchmark problems (half MBB beam, cantilever, L-bracket), run
// orchestration, and artifact output.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pto/oc_baseline.hpp"
#include "pto/pto_optimizers.hpp"

namespace pto::bench {

enum class ProblemKind { mbb, cantilever, lbracket };
enum class Method { ptos, ptoc, oc };

const char* to_string(ProblemKind kind);
const char* to_string(Method method);
ProblemKind parse_problem_kind(const std::string& name);
Method parse_method(const std::string& name);

/// Problem definition plus the per-method control values. Defaults are the
/// standard benchmark inputs (E0 = 1, Emin = 1e-9, nu = 0.3, p = 3, lv = 1,
/// ld = 3, L = 1, rmin = 1.5, bounds [0, 1]).
///
/// For the L-bracket, nelx is the long edge and nely the short edge, both in
/// elements; the bounding grid is nelx x nelx with the upper-right
/// (nelx - nely) x (nelx - nely) block passive.
struct ProblemSpec {
  ProblemKind kind = ProblemKind::mbb;
  int nelx = 120;
  int nely = 40;
  double edge_length = 1.0;
  double load = 1.0;
  int load_spread = 3;
  MaterialModel material;
  double rmin = 1.5;
  DensityBounds bounds;

  double stress_limit = 1.08;
  double volume_fraction = 0.35;
  /// Overrides of the method defaults (q = 2 / alpha = 0 for ptos,
  /// q = 1 / alpha = 0.5 for ptoc).
  std::optional<double> q;
  std::optional<double> alpha;
  int max_iterations = 2000;
  std::optional<int> min_iterations;
  OcFilter oc_filter = OcFilter::sensitivity;
  bool keep_overshoot = false;

  /// Standard spec for a named benchmark (120x40 MBB, 120x60 cantilever,
  /// 100/40 L-bracket).
  static ProblemSpec standard(ProblemKind kind);
};

/// Applies one `key = value` setting. Keys follow the positional argument
/// names of the reference programs: E0 Emin L lv ld nelx nely nell nels nu
/// penal q alpha rmin vmslim vlim xlim, plus problem, max_iterations,
/// min_iterations, oc_filter (sensitivity | density) and keep_overshoot
/// (0 | 1). Throws InvalidSpec for unknown keys or malformed values.
void apply_setting(ProblemSpec& spec, const std::string& key, const std::string& value);

/// Reads a plain-text key/value file (`key = value`, `#` comments).
void load_config(ProblemSpec& spec, const std::filesystem::path& path);

/// Grid, supports and loads for `spec`. Throws InvalidSpec on inconsistent
/// sizes.
Problem build_problem(const ProblemSpec& spec);

OptimizerConfig optimizer_config(const ProblemSpec& spec, Mode mode);
OcConfig oc_config(const ProblemSpec& spec);

struct RunSummary {
  Method method = Method::ptoc;
  int iterations = 0;
  double volume_fraction = 0.0;
  double compliance = 0.0;
  double max_von_mises = 0.0;
  double contrast_index = 0.0;
  Termination termination = Termination::max_iterations;
  double wall_time_seconds = 0.0;
};

struct BenchmarkRun {
  RunSummary summary;
  RunResult result;
  Problem problem;
};

struct RunOptions {
  /// Artifact directory; nothing is written when empty.
  std::filesystem::path out_dir;
  /// Echo each iteration log line to stdout.
  bool echo = false;
};

/// Runs `method` on `spec`. ptos uses spec.stress_limit; ptoc and oc use
/// spec.volume_fraction.
BenchmarkRun run_benchmark(const ProblemSpec& spec, Method method, const RunOptions& options = {});

/// Writes density/stress/compliance fields (ASCII and PGM), the iteration log
/// and the summary into `dir`.
void write_artifacts(const std::filesystem::path& dir, const BenchmarkRun& run);

struct AlternationRound {
  RunSummary ptoc;
  RunSummary ptos;
  /// PTOc at the volume fraction PTOs reached.
  RunSummary ptoc_next;
  /// (ptoc_next stress - ptos stress) / ptoc_next stress, in percent.
  double stress_improvement = 0.0;
  /// (ptoc volume - ptos volume) / ptoc volume, in percent.
  double volume_improvement = 0.0;
};

struct AlternationReport {
  std::vector<AlternationRound> rounds;
  double mean_stress_improvement = 0.0;
  double mean_volume_improvement = 0.0;
};

/// PTOc(vf) -> stress -> PTOs(stress) -> vf -> PTOc(vf) -> ..., starting at
/// start_vf, for `rounds` PTOs runs. Each round's PTOc at the PTOs volume is
/// the next round's starting PTOc.
AlternationReport run_alternation(const ProblemSpec& spec, double start_vf, int rounds,
                                  const std::filesystem::path& out_dir = {});

struct SweepRow {
  double volume_fraction = 0.0;
  RunSummary ptoc;
  RunSummary oc;
  /// |C_ptoc - C_oc| / C_oc.
  double relative_gap = 0.0;
};

/// PTOc and OC compliance at each volume fraction.
std::vector<SweepRow> run_sweep(const ProblemSpec& spec, const std::vector<double>& volume_fractions,
                                const std::filesystem::path& out_dir = {});

std::string format_summary(const ProblemSpec& spec, const RunSummary& summary);
std::string format_sweep_table(const std::vector<SweepRow>& rows);
std::string format_alternation_table(const AlternationReport& report);

/// Shortest round-trip decimal text of `value`, independent of the locale.
std::string format_number(double value);

/// One text row per grid row, columns separated by single spaces.
std::string format_field(const StructuredGrid& grid, const Eigen::Ref<const Eigen::VectorXd>& values);

/// Binary 8-bit PGM, values scaled by the field maximum with 1 drawn black.
std::string encode_pgm(const StructuredGrid& grid, const Eigen::Ref<const Eigen::VectorXd>& values);

/// Process exit codes of the command-line tool.
enum ExitCode : int { kConverged = 0, kNonConvergence = 2, kInvalidSpec = 3, kSolverFailure = 4 };

}  // namespace pto::bench
