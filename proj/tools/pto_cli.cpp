// Command-line front end: single runs, volume-fraction sweeps, the PTOs/PTOc
// alternation experiment, and PTOc vs OC comparisons.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "pto/bench.hpp"

namespace {

using namespace pto;
using namespace pto::bench;

struct CommonOptions {
  std::string problem = "mbb";
  std::string config;
  std::vector<std::string> settings;
  std::string out;
  bool quiet = false;
};

void add_common(CLI::App& cmd, CommonOptions& opts) {
  cmd.add_option("-p,--problem", opts.problem, "Benchmark: mbb, cantilever or lbracket")
      ->check(CLI::IsMember({"mbb", "cantilever", "lbracket"}));
  cmd.add_option("-c,--config", opts.config, "Key/value config file")->check(CLI::ExistingFile);
  cmd.add_option("-s,--set", opts.settings, "Override a setting, e.g. --set vlim=0.4 (repeatable)");
  cmd.add_option("-o,--out", opts.out, "Artifact directory");
  cmd.add_flag("-q,--quiet", opts.quiet, "Do not echo iteration lines");
}

ProblemSpec make_spec(const CommonOptions& opts) {
  ProblemSpec spec = ProblemSpec::standard(parse_problem_kind(opts.problem));
  if (!opts.config.empty()) {
    load_config(spec, opts.config);
    // A config file may name a different problem; start again from its defaults.
    if (spec.kind != parse_problem_kind(opts.problem)) {
      const ProblemKind kind = spec.kind;
      spec = ProblemSpec::standard(kind);
      load_config(spec, opts.config);
    }
  }
  for (const std::string& kv : opts.settings) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw InvalidSpec("--set expects key=value, got '" + kv + "'");
    apply_setting(spec, kv.substr(0, eq), kv.substr(eq + 1));
  }
  return spec;
}

int exit_code(Termination t) { return t == Termination::converged ? kConverged : kNonConvergence; }

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const std::string item = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    ProblemSpec scratch;
    apply_setting(scratch, "vlim", item);
    out.push_back(scratch.volume_fraction);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Proportional topology optimization benchmarks"};
  app.require_subcommand(1);

  CommonOptions run_opts;
  std::string method = "ptoc";
  std::optional<double> vlim, vmslim;
  auto* run_cmd = app.add_subcommand("run", "Run one method on one benchmark");
  add_common(*run_cmd, run_opts);
  run_cmd->add_option("-m,--method", method, "ptos, ptoc or oc")->check(CLI::IsMember({"ptos", "ptoc", "oc"}));
  run_cmd->add_option("--vlim", vlim, "Volume fraction (ptoc, oc)");
  run_cmd->add_option("--vmslim", vmslim, "Stress limit (ptos)");

  CommonOptions sweep_opts;
  std::string sweep_list = "0.25,0.30,0.35,0.40,0.45,0.50";
  auto* sweep_cmd = app.add_subcommand("sweep", "PTOc and OC compliance over a list of volume fractions");
  add_common(*sweep_cmd, sweep_opts);
  sweep_cmd->add_option("--vf", sweep_list, "Comma-separated volume fractions");

  CommonOptions alt_opts;
  double start_vf = 0.5;
  int rounds = 4;
  auto* alt_cmd = app.add_subcommand("alternate", "Feed PTOc stress into PTOs and PTOs volume back into PTOc");
  add_common(*alt_cmd, alt_opts);
  alt_cmd->add_option("--start-vf", start_vf, "Volume fraction of the first PTOc run");
  alt_cmd->add_option("--rounds", rounds, "Number of PTOs runs")->check(CLI::PositiveNumber);

  CommonOptions cmp_opts;
  std::optional<double> cmp_vlim;
  auto* cmp_cmd = app.add_subcommand("compare", "PTOc and OC side by side at one volume fraction");
  add_common(*cmp_cmd, cmp_opts);
  cmp_cmd->add_option("--vlim", cmp_vlim, "Volume fraction");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) {
      ProblemSpec spec = make_spec(run_opts);
      if (vlim) spec.volume_fraction = *vlim;
      if (vmslim) spec.stress_limit = *vmslim;
      const BenchmarkRun r = run_benchmark(spec, parse_method(method), {run_opts.out, !run_opts.quiet});
      std::cout << format_summary(spec, r.summary) << '\n';
      return exit_code(r.summary.termination);
    }
    if (sweep_cmd->parsed()) {
      const ProblemSpec spec = make_spec(sweep_opts);
      const auto rows = run_sweep(spec, parse_list(sweep_list), sweep_opts.out);
      std::cout << format_sweep_table(rows);
      for (const SweepRow& row : rows) {
        if (row.ptoc.termination != Termination::converged || row.oc.termination != Termination::converged) {
          return kNonConvergence;
        }
      }
      return kConverged;
    }
    if (alt_cmd->parsed()) {
      const ProblemSpec spec = make_spec(alt_opts);
      const AlternationReport report = run_alternation(spec, start_vf, rounds, alt_opts.out);
      std::cout << format_alternation_table(report);
      for (const AlternationRound& r : report.rounds) {
        for (const RunSummary* s : {&r.ptoc, &r.ptos, &r.ptoc_next}) {
          if (s->termination != Termination::converged) return kNonConvergence;
        }
      }
      return kConverged;
    }
    if (cmp_cmd->parsed()) {
      ProblemSpec spec = make_spec(cmp_opts);
      if (cmp_vlim) spec.volume_fraction = *cmp_vlim;
      const std::filesystem::path out = cmp_opts.out;
      const BenchmarkRun p = run_benchmark(spec, Method::ptoc, {out.empty() ? out : out / "ptoc", false});
      const BenchmarkRun o = run_benchmark(spec, Method::oc, {out.empty() ? out : out / "oc", false});
      std::cout << format_summary(spec, p.summary) << '\n' << format_summary(spec, o.summary) << '\n';
      std::printf("compliance gap %.3f%%, contrast gap %.3f\n",
                  100.0 * std::abs(p.summary.compliance - o.summary.compliance) / o.summary.compliance,
                  std::abs(p.summary.contrast_index - o.summary.contrast_index));
      return std::max(exit_code(p.summary.termination), exit_code(o.summary.termination));
    }
  } catch (const InvalidSpec& e) {
    std::cerr << "invalid spec: " << e.what() << '\n';
    return kInvalidSpec;
  } catch (const UnreachableTarget& e) {
    std::cerr << "invalid spec: " << e.what() << '\n';
    return kInvalidSpec;
  } catch (const Error& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return kSolverFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kSolverFailure;
  }
  return kConverged;
}
