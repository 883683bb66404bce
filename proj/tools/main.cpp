#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "dsfem/analysis.hpp"
#include "dsfem/run_config.hpp"
#include "dsfem/scheme.hpp"
#include "dsfem/verify.hpp"

namespace fs = std::filesystem;
using namespace dsfem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfigError = 1;
constexpr int kExitComputeError = 2;

std::string format_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

ProblemSpec resolve_problem(const RunConfig& config) {
  if (config.problem == "example1") return example1();
  if (config.problem == "example2") return example2();
  throw ConfigError("unknown problem '" + config.problem + "' (expected example1 or example2)");
}

StartupMode resolve_startup(const std::string& name) {
  if (name == "crank-nicolson" || name == "crank-nicolson-substepped" || name == "cn")
    return StartupMode::CrankNicolsonSubstepped;
  if (name == "exact-seed") return StartupMode::ExactSeed;
  throw ConfigError("unknown startup mode '" + name +
                    "' (expected crank-nicolson or exact-seed)");
}

Linearization resolve_linearization(const std::string& name) {
  if (name == "full-newton") return Linearization::FullNewton;
  if (name == "picard" || name == "picard-lagged-z") return Linearization::PicardLaggedZ;
  throw ConfigError("unknown linearization '" + name + "' (expected full-newton or picard)");
}

SolveMethod resolve_solver(const std::string& name) {
  if (name == "direct") return SolveMethod::Direct;
  if (name == "cg") return SolveMethod::ConjugateGradient;
  throw ConfigError("unknown solver '" + name + "' (expected direct or cg)");
}

fs::path resolve_out_dir(const RunConfig& config) {
  std::string dir = config.out_dir;
  if (dir.empty()) {
    if (const char* env = std::getenv("DSFEM_OUT_DIR")) dir = env;
  }
  if (dir.empty()) dir = ".";
  fs::path path(dir);
  fs::create_directories(path);
  return path;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open output file " + path.string());
  os << text;
}

// Options shared by all run-like subcommands. Flags override config keys.
struct CliOverrides {
  std::string config_path;
  std::string problem, startup, linearization, solver, out_dir;
  std::string sigma, h, t_final;           // rationals accepted
  std::vector<std::string> sigmas;
  std::vector<int> n_list;
  int degree = -1;
  int n_cells = -1;
  int jobs = -1;
  bool dump_mesh = false;
};

void add_common_options(CLI::App* cmd, CliOverrides& o) {
  cmd->set_help_flag("--help", "print help");
  cmd->add_option("--config", o.config_path, "key = value config file");
  cmd->add_option("--problem", o.problem, "example1 or example2");
  cmd->add_option("--degree", o.degree, "Lagrange degree 1..5");
  cmd->add_option("--n", o.n_cells, "cells per side");
  cmd->add_option("--h", o.h, "grid spacing 1/n (rational like 1/32)");
  cmd->add_option("--sigma", o.sigma, "time step (rational like 1/128)");
  cmd->add_option("--t-final", o.t_final, "horizon override");
  cmd->add_option("--startup", o.startup, "crank-nicolson or exact-seed");
  cmd->add_option("--linearization", o.linearization, "full-newton or picard");
  cmd->add_option("--solver", o.solver, "direct or cg");
  cmd->add_option("--out-dir", o.out_dir, "output directory (default $DSFEM_OUT_DIR or .)");
  cmd->add_option("--jobs", o.jobs, "parallel study rows");
}

RunConfig merge_config(const CliOverrides& o) {
  RunConfig config;
  if (!o.config_path.empty()) {
    std::ifstream is(o.config_path);
    if (!is) throw ConfigError("cannot read config file " + o.config_path);
    std::stringstream buffer;
    buffer << is.rdbuf();
    config = parse_config_text(buffer.str());
  }
  if (!o.problem.empty()) config.problem = o.problem;
  if (o.degree > 0) config.degree = o.degree;
  if (o.n_cells > 0) config.n_cells = o.n_cells;
  if (!o.h.empty()) {
    double h = parse_rational(o.h);
    double n_real = 1.0 / h;
    auto n = static_cast<long long>(std::llround(n_real));
    if (!(h > 0.0) || n < 1 || std::abs(n_real - static_cast<double>(n)) > 1e-9 * n_real)
      throw ConfigError("--h must be 1/n for a positive integer n");
    config.n_cells = static_cast<int>(n);
  }
  if (!o.sigma.empty()) config.sigma = parse_rational(o.sigma);
  if (!o.t_final.empty()) config.t_final = parse_rational(o.t_final);
  if (!o.startup.empty()) config.startup = o.startup;
  if (!o.linearization.empty()) config.linearization = o.linearization;
  if (!o.solver.empty()) config.solver = o.solver;
  if (!o.out_dir.empty()) config.out_dir = o.out_dir;
  if (!o.sigmas.empty()) {
    config.sigmas.clear();
    for (const auto& s : o.sigmas) config.sigmas.push_back(parse_rational(s));
  }
  if (!o.n_list.empty()) config.n_list = o.n_list;
  if (o.jobs > 0) config.jobs = o.jobs;
  return config;
}

StudyOptions study_options(const RunConfig& config) {
  StudyOptions options;
  options.startup = resolve_startup(config.startup);
  options.linearization = resolve_linearization(config.linearization);
  options.linear.method = resolve_solver(config.solver);
  options.jobs = config.jobs;
  options.t_final_override = config.t_final;
  return options;
}

void write_study_outputs(const ConvergenceReport& report, const fs::path& out_dir) {
  write_file(out_dir / "study.csv", report.to_csv());
  write_file(out_dir / "study.json", report.to_json());
  std::ostringstream h1, l2;
  for (const auto& row : report.rows) {
    if (row.failed) continue;
    h1 << format_g(row.resolution) << ' ' << format_g(row.err_h1_sup) << '\n';
    l2 << format_g(row.resolution) << ' ' << format_g(row.err_l2_sup) << '\n';
  }
  write_file(out_dir / "plot_h1.dat", h1.str());
  write_file(out_dir / "plot_l2.dat", l2.str());
}

int cmd_solve(const RunConfig& config, bool dump_mesh_flag) {
  if (config.n_cells < 1) throw ConfigError("solve: missing or invalid field 'n_cells' (or 'h')");
  if (!(config.sigma > 0.0)) throw ConfigError("solve: missing or invalid field 'sigma'");
  ProblemSpec spec = resolve_problem(config);
  if (config.t_final > 0.0) spec.t_final = config.t_final;

  SchemeConfig scheme;
  try {
    scheme = make_scheme_config(spec, config.sigma);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  scheme.startup = resolve_startup(config.startup);
  scheme.linearization = resolve_linearization(config.linearization);
  scheme.linear.method = resolve_solver(config.solver);

  Mesh mesh = spec.dim == 1 ? build_interval_mesh(spec.xa, spec.xb, config.n_cells)
                            : build_unit_square_tri_mesh(config.n_cells);
  FESpace space = build_space(std::move(mesh), config.degree);
  fs::path out_dir = resolve_out_dir(config);

  if (dump_mesh_flag) {
    std::ofstream os(out_dir / "mesh.txt");
    dump_mesh(space.mesh, os);
  }

  std::vector<ErrorPair> errors(scheme.n_steps + 1);
  if (spec.exact) {
    CoefVec v0 = interpolate(space, spec.history, 0.0);
    errors[0] = error_norms(space, v0, spec.exact, spec.exact_grad, 0.0);
  }
  std::vector<CoefVec> snapshots(scheme.n_steps + 1);
  snapshots[0] = interpolate(space, spec.history, 0.0);
  RunResult result = run(space, spec, scheme, [&](int n, double t, const CoefVec& v, int) {
    if (spec.exact) errors[n] = error_norms(space, v, spec.exact, spec.exact_grad, t);
    snapshots[n] = v;
  });

  // Per-step trajectory CSV.
  std::ostringstream csv;
  csv << "n,t,H1_error,L2_error,beta_norm,newton_iters\n";
  for (const auto& rec : result.records) {
    csv << rec.n << ',' << format_g(rec.t) << ',';
    if (spec.exact)
      csv << format_g(errors[rec.n].h1) << ',' << format_g(errors[rec.n].l2);
    else
      csv << ',';
    csv << ',' << format_g(rec.beta_norm) << ',' << rec.newton_iters << '\n';
  }
  write_file(out_dir / "steps.csv", csv.str());

  // Nodal plot data at t = T_f/2 and t = T_f.
  for (int n : {scheme.n_steps / 2, scheme.n_steps}) {
    std::ostringstream sol, err;
    double t = n * scheme.sigma;
    for (int d = 0; d < space.n_dofs; ++d) {
      Pt x = space.dof_coords[d];
      sol << format_g(x.x) << ' ';
      if (spec.dim == 2) sol << format_g(x.y) << ' ';
      sol << format_g(snapshots[n][d]) << '\n';
      if (spec.exact) {
        err << format_g(x.x) << ' ';
        if (spec.dim == 2) err << format_g(x.y) << ' ';
        err << format_g(snapshots[n][d] - spec.exact(x, t)) << '\n';
      }
    }
    write_file(out_dir / ("solution_n" + std::to_string(n) + ".dat"), sol.str());
    if (spec.exact) write_file(out_dir / ("error_n" + std::to_string(n) + ".dat"), err.str());
  }

  double h1_sup = 0.0, l2_sup = 0.0;
  for (int n = 1; n <= scheme.n_steps; ++n) {
    h1_sup = std::max(h1_sup, errors[n].h1);
    l2_sup = std::max(l2_sup, errors[n].l2);
  }
  std::cout << "solve " << spec.name << ": N = " << scheme.n_steps << ", m = " << scheme.m
            << ", dofs = " << space.n_dofs;
  if (spec.exact) std::cout << ", H1_sup = " << h1_sup << ", L2_sup = " << l2_sup;
  std::cout << "\noutputs in " << out_dir.string() << std::endl;
  return kExitOk;
}

int cmd_study(const RunConfig& config, StudyAxis axis) {
  ProblemSpec spec = resolve_problem(config);
  if (config.degree < 1) throw ConfigError("study: missing field 'degree'");
  StudyOptions options = study_options(config);
  ConvergenceReport report;
  if (axis == StudyAxis::Space) {
    if (config.n_list.empty()) throw ConfigError("study-space: empty resolution list 'n_list'");
    if (!(config.sigma > 0.0)) throw ConfigError("study-space: missing field 'sigma'");
    report = run_spatial_study(spec, config.degree, config.n_list, config.sigma, options);
  } else {
    if (config.sigmas.empty()) throw ConfigError("study-time: empty resolution list 'sigmas'");
    if (config.n_cells < 1) throw ConfigError("study-time: missing field 'n_cells' (or 'h')");
    report = run_temporal_study(spec, config.degree, config.n_cells, config.sigmas, options);
  }
  std::cout << report.config_summary << "\n" << report.to_table();
  write_study_outputs(report, resolve_out_dir(config));
  for (const auto& row : report.rows)
    if (row.failed) return kExitComputeError;
  return kExitOk;
}

int cmd_stability_probe(const RunConfig& config, const std::string& probe_scheme,
                        const std::string& beta_override) {
  ProblemSpec spec = resolve_problem(config);
  if (config.sigmas.empty()) throw ConfigError("stability-probe: empty 'sigmas' list");
  if (config.n_cells < 1) throw ConfigError("stability-probe: missing field 'n_cells' (or 'h')");
  if (config.degree < 1) throw ConfigError("stability-probe: missing field 'degree'");
  StabilityProbeOptions options;
  options.startup = resolve_startup(config.startup);
  if (probe_scheme == "explicit-euler")
    options.scheme = ProbeScheme::ExplicitEuler;
  else if (!probe_scheme.empty() && probe_scheme != "three-level")
    throw ConfigError("unknown probe scheme '" + probe_scheme + "'");
  if (!beta_override.empty()) options.beta_override = parse_rational(beta_override);

  auto rows = run_stability_probe(spec, config.degree, config.n_cells, config.sigmas, options);
  bool all_bounded = true;
  for (const auto& row : rows) {
    std::cout << "sigma = " << row.sigma << ": max ||v||_beta = " << row.max_beta_norm
              << ", reference scale = " << row.exact_max_beta_norm << " -> "
              << (row.bounded ? "BOUNDED" : "UNSTABLE");
    if (!row.note.empty()) std::cout << " (" << row.note << ")";
    std::cout << "\n";
    all_bounded = all_bounded && row.bounded;
  }
  return all_bounded ? kExitOk : kExitComputeError;
}

int cmd_verify(const std::string& suite, const std::string& fault) {
  if (!suite.empty()) {
    auto names = verify_suite_names();
    bool known = false;
    for (const auto& n : names) known = known || n == suite;
    if (!known) throw ConfigError("unknown verify suite '" + suite + "'");
  }
  bool inject = false;
  if (fault == "trapezoid-weight")
    inject = true;
  else if (!fault.empty())
    throw ConfigError("unknown fault '" + fault + "' (expected trapezoid-weight)");

  auto results = run_verify_suites(suite, inject);
  bool all_passed = true;
  for (const auto& r : results) {
    std::printf("[%s] %-14s (%.2f s)%s%s\n", r.passed ? "PASS" : "FAIL", r.name.c_str(),
                r.seconds, r.detail.empty() ? "" : " ", r.detail.c_str());
    all_passed = all_passed && r.passed;
  }
  return all_passed ? kExitOk : kExitComputeError;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dsfem: finite element solver for nonlinear Sobolev equations with distributed delay"};
  app.set_help_flag("--help", "print help");
  app.require_subcommand(1);

  CliOverrides solve_opts, space_opts, time_opts, probe_opts;
  std::string verify_suite, verify_fault, probe_scheme, probe_beta;

  CLI::App* solve_cmd = app.add_subcommand("solve", "single run, per-step CSV and plot data");
  add_common_options(solve_cmd, solve_opts);
  solve_cmd->add_flag("--dump-mesh", solve_opts.dump_mesh, "write mesh.txt");

  CLI::App* space_cmd = app.add_subcommand("study-space", "spatial convergence study");
  add_common_options(space_cmd, space_opts);
  space_cmd->add_option("--n-list", space_opts.n_list, "mesh resolutions (halving)");

  CLI::App* time_cmd = app.add_subcommand("study-time", "temporal convergence study");
  add_common_options(time_cmd, time_opts);
  time_cmd->add_option("--sigmas", time_opts.sigmas, "time steps (rationals, halving)");

  CLI::App* probe_cmd = app.add_subcommand("stability-probe", "coarse-step boundedness probe");
  add_common_options(probe_cmd, probe_opts);
  probe_cmd->add_option("--sigmas", probe_opts.sigmas, "time steps (rationals)");
  probe_cmd->add_option("--probe-scheme", probe_scheme, "three-level or explicit-euler (test hook)");
  probe_cmd->add_option("--beta-override", probe_beta, "override beta (test hook)");

  CLI::App* verify_cmd = app.add_subcommand("verify", "run the property suites");
  verify_cmd->set_help_flag("--help", "print help");
  verify_cmd->add_option("--suite", verify_suite, "run a single suite by name");
  verify_cmd->add_option("--inject-fault", verify_fault,
                         "negative-control fault (trapezoid-weight)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfigError;
  }

  try {
    if (solve_cmd->parsed()) return cmd_solve(merge_config(solve_opts), solve_opts.dump_mesh);
    if (space_cmd->parsed()) return cmd_study(merge_config(space_opts), StudyAxis::Space);
    if (time_cmd->parsed()) return cmd_study(merge_config(time_opts), StudyAxis::Time);
    if (probe_cmd->parsed())
      return cmd_stability_probe(merge_config(probe_opts), probe_scheme, probe_beta);
    if (verify_cmd->parsed()) return cmd_verify(verify_suite, verify_fault);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << std::endl;
    return kExitConfigError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << std::endl;
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return kExitComputeError;
  }
  return kExitConfigError;
}
