#include "dsfem/analysis.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <future>
#include <sstream>
#include <stdexcept>

namespace dsfem {

namespace {

Mesh build_problem_mesh(const ProblemSpec& spec, int cells_per_side) {
  return spec.dim == 1 ? build_interval_mesh(spec.xa, spec.xb, cells_per_side)
                       : build_unit_square_tri_mesh(cells_per_side);
}

// Serial FE-value tabulation used by the explicit-Euler probe path.
void tabulate_values(const FESpace& s, const CoefVec& v, std::vector<double>& out) {
  const int nq = s.quad.size();
  const int ndl = s.ndof_local;
  out.resize(static_cast<size_t>(s.mesh.n_cells()) * nq);
  for (int c = 0; c < s.mesh.n_cells(); ++c) {
    const int* dofs = s.cell_dofs.data() + static_cast<size_t>(c) * ndl;
    for (int q = 0; q < nq; ++q) {
      const double* phi = s.phi.data() + q * ndl;
      double val = 0.0;
      for (int i = 0; i < ndl; ++i) val += phi[i] * v[dofs[i]];
      out[static_cast<size_t>(c) * nq + q] = val;
    }
  }
}

void dirichlet_identity_rows(SparseMatrix& A, const std::vector<char>& is_boundary) {
  auto offsets = A.row_offsets();
  auto cols = A.col_indices();
  auto vals = A.values();
  for (int r = 0; r < A.rows(); ++r) {
    if (!is_boundary[r]) continue;
    for (int k = offsets[r]; k < offsets[r + 1]; ++k) vals[k] = cols[k] == r ? 1.0 : 0.0;
  }
}

std::string format_double(double v) {
  if (std::isnan(v)) return "";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double wall_seconds(const std::chrono::steady_clock::time_point& start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

ProblemSpec with_horizon(const ProblemSpec& spec, double t_final_override) {
  if (t_final_override <= 0.0) return spec;
  ProblemSpec out = spec;
  out.t_final = t_final_override;
  return out;
}

SchemeConfig study_config(const ProblemSpec& spec, double sigma, const StudyOptions& options) {
  SchemeConfig config = make_scheme_config(spec, sigma);
  config.startup = options.startup;
  config.linearization = options.linearization;
  config.linear = options.linear;
  config.exec = options.exec;
  return config;
}

StudyRow run_study_row(const ProblemSpec& spec, int degree, int cells_per_side, double sigma,
                       double resolution, const StudyOptions& options) {
  StudyRow row;
  row.resolution = resolution;
  auto start = std::chrono::steady_clock::now();
  try {
    FESpace space = build_space(build_problem_mesh(spec, cells_per_side), degree);
    SchemeConfig config = study_config(spec, sigma, options);
    std::vector<double> h1_errors, l2_errors;
    run(space, spec, config, [&](int, double t, const CoefVec& v, int) {
      ErrorPair err = error_norms(space, v, spec.exact, spec.exact_grad, t);
      h1_errors.push_back(err.h1);
      l2_errors.push_back(err.l2);
    });
    row.err_h1_sup = sup_over_steps(h1_errors);
    row.err_l2_sup = sup_over_steps(l2_errors);
  } catch (const std::exception& e) {
    row.failed = true;
    row.note = e.what();
  }
  row.wall_s = wall_seconds(start);
  return row;
}

void fill_rates(ConvergenceReport& report) {
  for (size_t i = 1; i < report.rows.size(); ++i) {
    StudyRow& fine = report.rows[i];
    const StudyRow& coarse = report.rows[i - 1];
    if (fine.failed || coarse.failed) continue;
    // Rates are meaningful only across exact halving.
    if (std::abs(coarse.resolution / fine.resolution - 2.0) > 1e-9) continue;
    if (coarse.err_h1_sup > 0.0 && fine.err_h1_sup > 0.0)
      fine.rate_h1 = convergence_rate(coarse.err_h1_sup, fine.err_h1_sup);
    if (coarse.err_l2_sup > 0.0 && fine.err_l2_sup > 0.0)
      fine.rate_l2 = convergence_rate(coarse.err_l2_sup, fine.err_l2_sup);
  }
}

ConvergenceReport run_study(const ProblemSpec& spec_in, StudyAxis axis, int degree,
                            std::span<const int> cells_list, std::span<const double> sigma_list,
                            const StudyOptions& options, const std::string& summary) {
  if ((axis == StudyAxis::Space && cells_list.empty()) ||
      (axis == StudyAxis::Time && sigma_list.empty()))
    throw std::invalid_argument("study: empty resolution list");
  if (!spec_in.exact) throw std::invalid_argument("study: problem has no exact solution");
  if (axis == StudyAxis::Space) {
    for (size_t i = 1; i < cells_list.size(); ++i)
      if (cells_list[i] <= cells_list[i - 1])
        throw std::invalid_argument("study: resolutions must be strictly refining");
  } else {
    for (size_t i = 1; i < sigma_list.size(); ++i)
      if (!(sigma_list[i] < sigma_list[i - 1]))
        throw std::invalid_argument("study: resolutions must be strictly refining");
  }

  ProblemSpec spec = with_horizon(spec_in, options.t_final_override);
  size_t n_rows = axis == StudyAxis::Space ? cells_list.size() : sigma_list.size();
  ConvergenceReport report;
  report.axis = axis;
  report.config_summary = summary;
  report.rows.resize(n_rows);

  auto make_row = [&](size_t i) {
    if (axis == StudyAxis::Space) {
      int n = cells_list[i];
      return run_study_row(spec, degree, n, sigma_list[0], 1.0 / n, options);
    }
    return run_study_row(spec, degree, cells_list[0], sigma_list[i], sigma_list[i], options);
  };

  int jobs = std::max(1, options.jobs);
  if (jobs == 1) {
    for (size_t i = 0; i < n_rows; ++i) report.rows[i] = make_row(i);
  } else {
    // Rows are independent; results land in order regardless of timing.
    std::vector<std::future<StudyRow>> futures(n_rows);
    size_t next = 0;
    while (next < n_rows) {
      size_t batch = std::min<size_t>(jobs, n_rows - next);
      for (size_t k = 0; k < batch; ++k)
        futures[next + k] = std::async(std::launch::async, make_row, next + k);
      for (size_t k = 0; k < batch; ++k) report.rows[next + k] = futures[next + k].get();
      next += batch;
    }
  }
  fill_rates(report);
  return report;
}

}  // namespace

ErrorPair error_norms(const FESpace& space, const CoefVec& coeffs, const DataFn& exact,
                      const GradFn& exact_grad, double t) {
  if (!exact) throw std::invalid_argument("error_norms: exact solution required");
  const int ndl = space.ndof_local;
  const int nq = space.quad.size();
  const int dim = space.mesh.dim;
  const double fd_step = 1e-6 * space.mesh.h;

  double l2_sq = 0.0, grad_sq = 0.0;
  for (int c = 0; c < space.mesh.n_cells(); ++c) {
    CellGeometry geom = cell_geometry(space.mesh, c);
    double scale = std::abs(geom.det_jacobian);
    for (int q = 0; q < nq; ++q) {
      double val = 0.0;
      Pt ref_grad{0.0, 0.0};
      for (int i = 0; i < ndl; ++i) {
        double coef = coeffs[space.cell_dof(c, i)];
        val += coef * space.phi[q * ndl + i];
        ref_grad.x += coef * space.dphi_x[q * ndl + i];
        ref_grad.y += coef * space.dphi_y[q * ndl + i];
      }
      Pt grad = geom.grad_to_physical(ref_grad);
      Pt x = geom.map(space.quad.points[q]);
      double diff = val - exact(x, t);
      Pt gex;
      if (exact_grad) {
        gex = exact_grad(x, t);
      } else {
        gex.x = (exact({x.x + fd_step, x.y}, t) - exact({x.x - fd_step, x.y}, t)) / (2.0 * fd_step);
        gex.y = dim == 2 ? (exact({x.x, x.y + fd_step}, t) - exact({x.x, x.y - fd_step}, t)) /
                               (2.0 * fd_step)
                         : 0.0;
      }
      double gx = grad.x - gex.x;
      double gy = dim == 2 ? grad.y - gex.y : 0.0;
      double wq = space.quad.weights[q] * scale;
      l2_sq += wq * diff * diff;
      grad_sq += wq * (gx * gx + gy * gy);
    }
  }
  return {std::sqrt(l2_sq + grad_sq), std::sqrt(l2_sq)};
}

double sup_over_steps(std::span<const double> per_step_errors) {
  if (per_step_errors.empty()) throw std::invalid_argument("sup_over_steps: empty list");
  double m = per_step_errors[0];
  for (double e : per_step_errors) m = std::max(m, e);
  return m;
}

double convergence_rate(double e_coarse, double e_fine) {
  if (!(e_coarse > 0.0) || !(e_fine > 0.0))
    throw std::invalid_argument("convergence_rate: errors must be positive");
  return std::log2(e_coarse / e_fine);
}

std::string ConvergenceReport::to_csv() const {
  std::ostringstream os;
  os << "axis,resolution,err_h1_sup,err_l2_sup,rate_h1,rate_l2,wall_s\n";
  for (const auto& row : rows) {
    os << (axis == StudyAxis::Space ? "space" : "time") << ',' << format_double(row.resolution)
       << ',' << format_double(row.err_h1_sup) << ',' << format_double(row.err_l2_sup) << ','
       << format_double(row.rate_h1) << ',' << format_double(row.rate_l2) << ','
       << format_double(row.wall_s) << '\n';
  }
  return os.str();
}

ConvergenceReport ConvergenceReport::from_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || line.rfind("axis,", 0) != 0)
    throw std::invalid_argument("ConvergenceReport: bad CSV header");
  ConvergenceReport report;
  bool first = true;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string field;
    StudyRow row;
    std::getline(ls, field, ',');
    StudyAxis axis = field == "space" ? StudyAxis::Space : StudyAxis::Time;
    if (first) {
      report.axis = axis;
      first = false;
    }
    auto next_double = [&ls](double fallback) {
      std::string f;
      if (!std::getline(ls, f, ',') || f.empty()) return fallback;
      return std::stod(f);
    };
    row.resolution = next_double(0.0);
    row.err_h1_sup = next_double(0.0);
    row.err_l2_sup = next_double(0.0);
    row.rate_h1 = next_double(std::numeric_limits<double>::quiet_NaN());
    row.rate_l2 = next_double(std::numeric_limits<double>::quiet_NaN());
    row.wall_s = next_double(0.0);
    report.rows.push_back(row);
  }
  return report;
}

std::string ConvergenceReport::to_json() const {
  nlohmann::ordered_json j;
  j["axis"] = axis == StudyAxis::Space ? "space" : "time";
  j["config"] = config_summary;
  j["rows"] = nlohmann::ordered_json::array();
  for (const auto& row : rows) {
    nlohmann::ordered_json r;
    r["resolution"] = row.resolution;
    r["err_h1_sup"] = row.err_h1_sup;
    r["err_l2_sup"] = row.err_l2_sup;
    if (!std::isnan(row.rate_h1)) r["rate_h1"] = row.rate_h1;
    if (!std::isnan(row.rate_l2)) r["rate_l2"] = row.rate_l2;
    r["wall_s"] = row.wall_s;
    if (row.failed) r["error"] = row.note;
    j["rows"].push_back(r);
  }
  return j.dump(2);
}

std::string ConvergenceReport::to_table() const {
  std::ostringstream os;
  const char* res_name = axis == StudyAxis::Space ? "h" : "sigma";
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%-12s %-14s %-8s %-14s %-8s %-10s\n", res_name, "err_H1_sup",
                "R_H1", "err_L2_sup", "R_L2", "CPU (s)");
  os << buf;
  for (const auto& row : rows) {
    if (row.failed) {
      std::snprintf(buf, sizeof(buf), "%-12.6g FAILED: %s\n", row.resolution, row.note.c_str());
      os << buf;
      continue;
    }
    std::string r1 = std::isnan(row.rate_h1) ? "--" : (std::snprintf(buf, sizeof(buf), "%.4f", row.rate_h1), buf);
    std::string r2 = std::isnan(row.rate_l2) ? "--" : (std::snprintf(buf, sizeof(buf), "%.4f", row.rate_l2), buf);
    std::snprintf(buf, sizeof(buf), "%-12.6g %-14.4e %-8s %-14.4e %-8s %-10.4f\n", row.resolution,
                  row.err_h1_sup, r1.c_str(), row.err_l2_sup, r2.c_str(), row.wall_s);
    os << buf;
  }
  return os.str();
}

ConvergenceReport run_spatial_study(const ProblemSpec& spec, int degree,
                                    std::span<const int> cells_per_side, double sigma,
                                    const StudyOptions& options) {
  std::ostringstream summary;
  summary << spec.name << " spatial study, degree " << degree << ", sigma " << sigma;
  std::vector<double> sigmas{sigma};
  return run_study(spec, StudyAxis::Space, degree, cells_per_side, sigmas, options,
                   summary.str());
}

ConvergenceReport run_temporal_study(const ProblemSpec& spec, int degree, int cells_per_side,
                                     std::span<const double> sigmas,
                                     const StudyOptions& options) {
  std::ostringstream summary;
  summary << spec.name << " temporal study, degree " << degree << ", cells " << cells_per_side;
  std::vector<int> cells{cells_per_side};
  return run_study(spec, StudyAxis::Time, degree, cells, sigmas, options, summary.str());
}

std::vector<StabilityRow> run_stability_probe(const ProblemSpec& spec_in, int degree,
                                              int cells_per_side, std::span<const double> sigmas,
                                              const StabilityProbeOptions& options) {
  ProblemSpec spec = spec_in;
  if (options.beta_override > 0.0) spec.beta = options.beta_override;
  FESpace space = build_space(build_problem_mesh(spec, cells_per_side), degree);

  std::vector<StabilityRow> rows;
  for (double sigma : sigmas) {
    StabilityRow row;
    row.sigma = sigma;
    try {
      SchemeConfig config = make_scheme_config(spec, sigma);
      config.startup = options.startup;
      config.exec = options.exec;

      SparseMatrix A = assemble_combined(space, spec.beta, options.exec);
      double exact_max = 0.0;
      if (spec.exact) {
        for (int n = 0; n <= config.n_steps; ++n) {
          CoefVec ex = interpolate(space, spec.exact, n * sigma);
          exact_max = std::max(exact_max, beta_norm(A, ex));
        }
      }
      row.exact_max_beta_norm = exact_max;

      double max_norm = 0.0;
      bool all_finite = true;
      if (options.scheme == ProbeScheme::ThreeLevel) {
        RunResult result = run(space, spec, config);
        for (const auto& rec : result.records) {
          if (!std::isfinite(rec.beta_norm)) all_finite = false;
          max_norm = std::max(max_norm, rec.beta_norm);
        }
      } else {
        // Explicit Euler comparison mode (test hook): lagged right-hand
        // side, one linear solve per step.
        SparseMatrix K = assemble_stiffness(space, options.exec);
        StepState state = make_step_state(space, spec, config);
        const int nq = space.quad.size();
        max_norm = beta_norm(A, state.v_curr);
        std::vector<double> v_vals;
        for (int n = 0; n < config.n_steps; ++n) {
          double tn = n * sigma;
          const auto weights = delay_trapezoid_weights(config.m, sigma);
          std::vector<double> z(state.quad_x.size(), 0.0);
          std::vector<double> vals;
          for (int k = n - config.m; k <= n; ++k) {
            const CoefVec& vk = state.history.at_step(k);
            tabulate_values(space, vk, vals);
            double tk = k * sigma;
            double wk = weights[k - (n - config.m)];
            for (size_t p = 0; p < z.size(); ++p)
              z[p] += wk * spec.g(state.quad_x[p], tn, tk, vals[p]);
          }
          tabulate_values(space, state.v_curr, v_vals);
          CoefVec load = assemble_load(
              space,
              [&](int c, int q, Pt x) {
                size_t p = static_cast<size_t>(c) * nq + q;
                return spec.f(x, tn, v_vals[p], z[p]);
              },
              options.exec);
          CoefVec rhs = matvec(A, state.v_curr);
          CoefVec Kv = matvec(K, state.v_curr);
          for (int i = 0; i < space.n_dofs; ++i)
            rhs[i] += sigma * (load[i] - spec.alpha * Kv[i]);
          SparseMatrix lhs = A;
          // Dirichlet rows of the next state.
          for (int d : space.boundary_dofs) rhs[d] = spec.boundary(space.dof_coords[d], tn + sigma);
          dirichlet_identity_rows(lhs, space.is_boundary_dof);
          CoefVec v_next = solve(lhs, rhs, config.linear);
          bool finite = true;
          for (double x : v_next)
            if (!std::isfinite(x)) finite = false;
          if (!finite) {
            all_finite = false;
            break;
          }
          state.history.push(v_next);
          state.v_prev = std::move(state.v_curr);
          state.v_curr = std::move(v_next);
          max_norm = std::max(max_norm, beta_norm(A, state.v_curr));
        }
      }
      row.max_beta_norm = max_norm;
      row.finite = all_finite && std::isfinite(max_norm);
      double scale = exact_max > 0.0 ? exact_max : 1.0;
      row.bounded = row.finite && max_norm <= 10.0 * scale;
      if (!row.bounded) row.note = "norm exceeded 10x the reference scale";
    } catch (const std::exception& e) {
      row.finite = false;
      row.bounded = false;
      row.note = e.what();
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace dsfem
