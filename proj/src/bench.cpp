#include "pto/bench.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace pto::bench {

const char* to_string(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::mbb: return "mbb";
    case ProblemKind::cantilever: return "cantilever";
    case ProblemKind::lbracket: return "lbracket";
  }
  return "?";
}

const char* to_string(Method method) {
  switch (method) {
    case Method::ptos: return "ptos";
    case Method::ptoc: return "ptoc";
    case Method::oc: return "oc";
  }
  return "?";
}

ProblemKind parse_problem_kind(const std::string& name) {
  if (name == "mbb") return ProblemKind::mbb;
  if (name == "cantilever") return ProblemKind::cantilever;
  if (name == "lbracket") return ProblemKind::lbracket;
  throw InvalidSpec("unknown problem '" + name + "' (expected mbb, cantilever or lbracket)");
}

Method parse_method(const std::string& name) {
  if (name == "ptos") return Method::ptos;
  if (name == "ptoc") return Method::ptoc;
  if (name == "oc") return Method::oc;
  throw InvalidSpec("unknown method '" + name + "' (expected ptos, ptoc or oc)");
}

ProblemSpec ProblemSpec::standard(ProblemKind kind) {
  ProblemSpec spec;
  spec.kind = kind;
  switch (kind) {
    case ProblemKind::mbb:
      spec.nelx = 120;
      spec.nely = 40;
      spec.stress_limit = 1.08;
      break;
    case ProblemKind::cantilever:
      spec.nelx = 120;
      spec.nely = 60;
      spec.stress_limit = 0.57;
      break;
    case ProblemKind::lbracket:
      spec.nelx = 100;
      spec.nely = 40;
      spec.stress_limit = 1.05;
      break;
  }
  return spec;
}

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

double parse_double(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc() || ptr != t.data() + t.size()) {
    throw InvalidSpec("setting '" + key + "': '" + text + "' is not a number");
  }
  return value;
}

int parse_int(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  int value = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc() || ptr != t.data() + t.size()) {
    throw InvalidSpec("setting '" + key + "': '" + text + "' is not an integer");
  }
  return value;
}

}  // namespace

void apply_setting(ProblemSpec& spec, const std::string& raw_key, const std::string& value) {
  const std::string key = trim(raw_key);
  if (key == "problem") {
    spec.kind = parse_problem_kind(trim(value));
  } else if (key == "E0") {
    spec.material.e0 = parse_double(key, value);
  } else if (key == "Emin") {
    spec.material.e_min = parse_double(key, value);
  } else if (key == "L") {
    spec.edge_length = parse_double(key, value);
  } else if (key == "lv") {
    spec.load = parse_double(key, value);
  } else if (key == "ld") {
    spec.load_spread = parse_int(key, value);
  } else if (key == "nelx" || key == "nell") {
    spec.nelx = parse_int(key, value);
  } else if (key == "nely" || key == "nels") {
    spec.nely = parse_int(key, value);
  } else if (key == "nu") {
    spec.material.nu = parse_double(key, value);
  } else if (key == "penal") {
    spec.material.penal = parse_double(key, value);
  } else if (key == "q") {
    spec.q = parse_double(key, value);
  } else if (key == "alpha") {
    spec.alpha = parse_double(key, value);
  } else if (key == "rmin") {
    spec.rmin = parse_double(key, value);
  } else if (key == "vmslim") {
    spec.stress_limit = parse_double(key, value);
  } else if (key == "vlim") {
    spec.volume_fraction = parse_double(key, value);
  } else if (key == "xlim") {
    std::string t = value;
    std::replace_if(t.begin(), t.end(), [](char c) { return c == ',' || c == '[' || c == ']'; }, ' ');
    std::istringstream in(t);
    std::string lo, hi, extra;
    if (!(in >> lo >> hi) || (in >> extra)) throw InvalidSpec("setting 'xlim' needs two numbers");
    spec.bounds.lower = parse_double(key, lo);
    spec.bounds.upper = parse_double(key, hi);
  } else if (key == "max_iterations") {
    spec.max_iterations = parse_int(key, value);
  } else if (key == "min_iterations") {
    spec.min_iterations = parse_int(key, value);
  } else if (key == "keep_overshoot") {
    const int flag = parse_int(key, value);
    if (flag != 0 && flag != 1) throw InvalidSpec("setting 'keep_overshoot' must be 0 or 1");
    spec.keep_overshoot = flag == 1;
  } else if (key == "oc_filter") {
    const std::string mode = trim(value);
    if (mode == "sensitivity") {
      spec.oc_filter = OcFilter::sensitivity;
    } else if (mode == "density") {
      spec.oc_filter = OcFilter::density;
    } else {
      throw InvalidSpec("setting 'oc_filter' must be sensitivity or density");
    }
  } else {
    throw InvalidSpec("unknown setting '" + key + "'");
  }
}

void load_config(ProblemSpec& spec, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidSpec("cannot read config file " + path.string());
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw InvalidSpec(path.string() + ":" + std::to_string(number) + ": expected key = value");
    }
    apply_setting(spec, line.substr(0, eq), line.substr(eq + 1));
  }
}

Problem build_problem(const ProblemSpec& spec) {
  spec.material.validate();
  if (spec.load_spread < 1) throw InvalidSpec("load must be spread over at least one node");
  if (!(spec.bounds.lower >= 0.0 && spec.bounds.lower < spec.bounds.upper && spec.bounds.upper <= 1.0)) {
    throw InvalidSpec("xlim must satisfy 0 <= lower < upper <= 1");
  }
  if (!(spec.rmin > 0.0)) throw InvalidSpec("rmin must be positive");

  const int ld = spec.load_spread;
  const double nodal_force = -spec.load / double(ld);
  std::vector<Index> fixed;

  auto make = [&](StructuredGrid grid) {
    Problem p{std::move(grid), spec.material, {}, spec.rmin, spec.bounds};
    p.loads.load = Eigen::VectorXd::Zero(p.grid.dof_count());
    return p;
  };

  switch (spec.kind) {
    case ProblemKind::mbb: {
      Problem p = make(StructuredGrid(spec.nelx, spec.nely, spec.edge_length));
      const StructuredGrid& g = p.grid;
      if (ld > spec.nelx + 1 || ld > spec.nely + 1) throw InvalidSpec("ld exceeds the node count of an edge");
      // Downward load on the first ld top-edge nodes.
      for (int i = 0; i < ld; ++i) p.loads.load(StructuredGrid::y_dof(g.node_index(i, 0))) = nodal_force;
      // x fixed along the symmetry edge, y fixed on the last ld nodes (bottom of the right edge).
      for (int row = 0; row <= spec.nely; ++row) fixed.push_back(StructuredGrid::x_dof(g.node_index(0, row)));
      for (Index n = g.node_count() - ld; n < g.node_count(); ++n) fixed.push_back(StructuredGrid::y_dof(n));
      std::sort(fixed.begin(), fixed.end());
      fixed.erase(std::unique(fixed.begin(), fixed.end()), fixed.end());
      p.loads.fixed_dofs = std::move(fixed);
      return p;
    }
    case ProblemKind::cantilever: {
      Problem p = make(StructuredGrid(spec.nelx, spec.nely, spec.edge_length));
      const StructuredGrid& g = p.grid;
      if (ld > spec.nely + 1) throw InvalidSpec("ld exceeds the node count of the right edge");
      const int first = (spec.nely - (ld - 1)) / 2;
      for (int i = 0; i < ld; ++i) {
        p.loads.load(StructuredGrid::y_dof(g.node_index(spec.nelx, first + i))) = nodal_force;
      }
      for (int row = 0; row <= spec.nely; ++row) {
        const Index n = g.node_index(0, row);
        fixed.push_back(StructuredGrid::x_dof(n));
        fixed.push_back(StructuredGrid::y_dof(n));
      }
      p.loads.fixed_dofs = std::move(fixed);
      return p;
    }
    case ProblemKind::lbracket: {
      const int length = spec.nelx;
      const int width = spec.nely;
      if (width >= length) throw InvalidSpec("L-bracket short edge must be shorter than the long edge");
      Problem p = make(StructuredGrid(length, length, spec.edge_length));
      StructuredGrid& g = p.grid;
      const int void_rows = length - width;
      for (int col = width; col < length; ++col) {
        for (int row = 0; row < void_rows; ++row) g.set_passive(g.element_index(col, row));
      }
      // Downward load on the top face of the horizontal leg, ending at the
      // outer corner of the rightmost edge.
      if (ld > void_rows + 1) throw InvalidSpec("ld exceeds the node count of the loaded face");
      for (int i = 0; i < ld; ++i) {
        p.loads.load(StructuredGrid::y_dof(g.node_index(length - i, void_rows))) = nodal_force;
      }
      // Fully clamped top edge of the vertical leg.
      for (int col = 0; col <= width; ++col) {
        const Index n = g.node_index(col, 0);
        fixed.push_back(StructuredGrid::x_dof(n));
        fixed.push_back(StructuredGrid::y_dof(n));
      }
      p.loads.fixed_dofs = std::move(fixed);
      return p;
    }
  }
  throw InvalidSpec("unknown problem kind");
}

OptimizerConfig optimizer_config(const ProblemSpec& spec, Mode mode) {
  OptimizerConfig config = mode == Mode::stress ? OptimizerConfig::stress(spec.stress_limit)
                                                : OptimizerConfig::compliance(spec.volume_fraction);
  if (spec.q) config.q = *spec.q;
  if (spec.alpha) config.alpha = *spec.alpha;
  if (spec.min_iterations) config.min_iterations = *spec.min_iterations;
  config.max_iterations = spec.max_iterations;
  config.keep_overshoot = spec.keep_overshoot;
  return config;
}

OcConfig oc_config(const ProblemSpec& spec) {
  OcConfig config;
  config.volume_fraction = spec.volume_fraction;
  config.filter = spec.oc_filter;
  config.max_iterations = spec.max_iterations;
  if (spec.min_iterations) config.min_iterations = *spec.min_iterations;
  return config;
}

namespace {

Mode record_mode(Method method) { return method == Method::ptos ? Mode::stress : Mode::compliance; }

std::string format_log(const std::vector<IterationRecord>& history, Method method) {
  std::string out;
  for (const IterationRecord& r : history) {
    out += format_record(r, record_mode(method));
    if (method == Method::oc) out += " method=oc";
    out += '\n';
  }
  return out;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << content;
}

}  // namespace

BenchmarkRun run_benchmark(const ProblemSpec& spec, Method method, const RunOptions& options) {
  BenchmarkRun out{{}, {}, build_problem(spec)};
  IterationObserver observer;
  if (options.echo) {
    observer = [method](const IterationRecord& r) {
      std::string line = format_record(r, record_mode(method));
      if (method == Method::oc) line += " method=oc";
      std::puts(line.c_str());
      std::fflush(stdout);
    };
  }

  const auto start = std::chrono::steady_clock::now();
  switch (method) {
    case Method::ptos: out.result = run(out.problem, optimizer_config(spec, Mode::stress), observer); break;
    case Method::ptoc: out.result = run(out.problem, optimizer_config(spec, Mode::compliance), observer); break;
    case Method::oc: out.result = run_oc(out.problem, oc_config(spec), observer); break;
  }
  const auto stop = std::chrono::steady_clock::now();

  const IterationRecord& last = out.result.history.back();
  RunSummary& s = out.summary;
  s.method = method;
  s.iterations = last.iteration;
  s.volume_fraction = last.volume_fraction;
  s.compliance = last.compliance;
  s.max_von_mises = last.max_von_mises;
  s.contrast_index = contrast_index(out.result.density, out.problem.grid.active_mask());
  s.termination = out.result.termination;
  s.wall_time_seconds = std::chrono::duration<double>(stop - start).count();

  if (!options.out_dir.empty()) write_artifacts(options.out_dir, out);
  return out;
}

void write_artifacts(const std::filesystem::path& dir, const BenchmarkRun& run) {
  std::filesystem::create_directories(dir);
  const StructuredGrid& grid = run.problem.grid;
  const DesignAnalysis& a = run.result.analysis;
  const std::pair<const char*, const Eigen::VectorXd*> fields[] = {
      {"density", &run.result.density},
      {"stress", &a.stress.von_mises},
      {"compliance", &a.compliance.elemental},
  };
  for (const auto& [name, values] : fields) {
    write_file(dir / (std::string(name) + ".txt"), format_field(grid, *values));
    write_file(dir / (std::string(name) + ".pgm"), encode_pgm(grid, *values));
  }
  write_file(dir / "iterations.log", format_log(run.result.history, run.summary.method));
  std::ostringstream summary;
  summary << "method = " << to_string(run.summary.method) << '\n'
          << "iterations = " << run.summary.iterations << '\n'
          << "volume_fraction = " << format_number(run.summary.volume_fraction) << '\n'
          << "compliance = " << format_number(run.summary.compliance) << '\n'
          << "max_von_mises = " << format_number(run.summary.max_von_mises) << '\n'
          << "contrast_index = " << format_number(run.summary.contrast_index) << '\n'
          << "termination = " << to_string(run.summary.termination) << '\n'
          << "wall_time_s = " << format_number(run.summary.wall_time_seconds) << '\n';
  write_file(dir / "summary.txt", summary.str());
}

AlternationReport run_alternation(const ProblemSpec& spec, double start_vf, int rounds,
                                  const std::filesystem::path& out_dir) {
  if (rounds < 1) throw InvalidSpec("alternation needs at least one round");
  auto member_dir = [&](const std::string& name) {
    return out_dir.empty() ? std::filesystem::path{} : out_dir / name;
  };

  AlternationReport report;
  ProblemSpec s = spec;
  s.volume_fraction = start_vf;
  RunSummary ptoc = run_benchmark(s, Method::ptoc, {member_dir("round0_ptoc")}).summary;
  for (int k = 0; k < rounds; ++k) {
    AlternationRound round;
    round.ptoc = ptoc;
    s.stress_limit = ptoc.max_von_mises;
    round.ptos = run_benchmark(s, Method::ptos, {member_dir("round" + std::to_string(k) + "_ptos")}).summary;
    s.volume_fraction = round.ptos.volume_fraction;
    round.ptoc_next =
        run_benchmark(s, Method::ptoc, {member_dir("round" + std::to_string(k + 1) + "_ptoc")}).summary;
    round.volume_improvement = 100.0 * (round.ptoc.volume_fraction - round.ptos.volume_fraction) /
                               round.ptoc.volume_fraction;
    round.stress_improvement = 100.0 * (round.ptoc_next.max_von_mises - round.ptos.max_von_mises) /
                               round.ptoc_next.max_von_mises;
    report.mean_stress_improvement += round.stress_improvement / rounds;
    report.mean_volume_improvement += round.volume_improvement / rounds;
    ptoc = round.ptoc_next;
    report.rounds.push_back(round);
  }
  return report;
}

std::vector<SweepRow> run_sweep(const ProblemSpec& spec, const std::vector<double>& volume_fractions,
                                const std::filesystem::path& out_dir) {
  std::vector<SweepRow> rows;
  for (double vf : volume_fractions) {
    if (!(vf > 0.0 && vf <= 1.0)) throw InvalidSpec("sweep volume fractions must lie in (0, 1]");
    ProblemSpec s = spec;
    s.volume_fraction = vf;
    const std::string tag = format_number(vf);
    SweepRow row;
    row.volume_fraction = vf;
    row.ptoc = run_benchmark(s, Method::ptoc, {out_dir.empty() ? out_dir : out_dir / ("ptoc_vf" + tag)}).summary;
    row.oc = run_benchmark(s, Method::oc, {out_dir.empty() ? out_dir : out_dir / ("oc_vf" + tag)}).summary;
    row.relative_gap = std::abs(row.ptoc.compliance - row.oc.compliance) / row.oc.compliance;
    rows.push_back(row);
  }
  return rows;
}

std::string format_summary(const ProblemSpec& spec, const RunSummary& s) {
  char line[256];
  std::snprintf(line, sizeof line, "%-10s %-4s it=%4d vol=%.4f comp=%9.3f max_vms=%.4f contrast=%.3f %s (%.1fs)",
                to_string(spec.kind), to_string(s.method), s.iterations, s.volume_fraction, s.compliance,
                s.max_von_mises, s.contrast_index, to_string(s.termination), s.wall_time_seconds);
  return line;
}

std::string format_sweep_table(const std::vector<SweepRow>& rows) {
  std::string out = "vf      C_ptoc      C_oc        gap%   it_ptoc it_oc\n";
  char line[160];
  for (const SweepRow& r : rows) {
    std::snprintf(line, sizeof line, "%.2f  %10.4f  %10.4f  %6.3f  %7d %5d\n", r.volume_fraction, r.ptoc.compliance,
                  r.oc.compliance, 100.0 * r.relative_gap, r.ptoc.iterations, r.oc.iterations);
    out += line;
  }
  return out;
}

std::string format_alternation_table(const AlternationReport& report) {
  std::string out = "round  vf_ptoc  vms_ptoc  vf_ptos  vms_ptos  vms_next  d_stress%  d_volume%\n";
  char line[200];
  for (std::size_t k = 0; k < report.rounds.size(); ++k) {
    const AlternationRound& r = report.rounds[k];
    std::snprintf(line, sizeof line, "%5zu  %7.4f  %8.4f  %7.4f  %8.4f  %8.4f  %9.3f  %9.3f\n", k,
                  r.ptoc.volume_fraction, r.ptoc.max_von_mises, r.ptos.volume_fraction, r.ptos.max_von_mises,
                  r.ptoc_next.max_von_mises, r.stress_improvement, r.volume_improvement);
    out += line;
  }
  std::snprintf(line, sizeof line, "mean stress improvement %.3f%%, mean volume improvement %.3f%%\n",
                report.mean_stress_improvement, report.mean_volume_improvement);
  out += line;
  return out;
}

std::string format_number(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ec == std::errc() ? ptr : buf);
}

std::string format_field(const StructuredGrid& grid, const Eigen::Ref<const Eigen::VectorXd>& values) {
  if (values.size() != grid.element_count()) throw InvalidSpec("field length does not match the grid");
  std::string out;
  for (int row = 0; row < grid.nely(); ++row) {
    for (int col = 0; col < grid.nelx(); ++col) {
      if (col) out += ' ';
      out += format_number(values(grid.element_index(col, row)));
    }
    out += '\n';
  }
  return out;
}

std::string encode_pgm(const StructuredGrid& grid, const Eigen::Ref<const Eigen::VectorXd>& values) {
  if (values.size() != grid.element_count()) throw InvalidSpec("field length does not match the grid");
  const double peak = values.maxCoeff();
  std::string out = "P5\n" + std::to_string(grid.nelx()) + " " + std::to_string(grid.nely()) + "\n255\n";
  for (int row = 0; row < grid.nely(); ++row) {
    for (int col = 0; col < grid.nelx(); ++col) {
      const double v = peak > 0.0 ? std::clamp(values(grid.element_index(col, row)) / peak, 0.0, 1.0) : 0.0;
      out += char(static_cast<unsigned char>(std::lround(255.0 * (1.0 - v))));
    }
  }
  return out;
}

}  // namespace pto::bench
