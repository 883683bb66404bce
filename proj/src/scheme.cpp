#include "dsfem/scheme.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace dsfem {

namespace {

template <class Fn>
void parallel_cells(ExecPolicy policy, int n_cells, const Fn& fn) {
#ifdef _OPENMP
  if (policy == ExecPolicy::Parallel) {
    std::exception_ptr err;
    std::mutex err_mutex;
#pragma omp parallel for schedule(static)
    for (int c = 0; c < n_cells; ++c) {
      try {
        fn(c);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!err) err = std::current_exception();
      }
    }
    if (err) std::rethrow_exception(err);
    return;
  }
#else
  (void)policy;
#endif
  for (int c = 0; c < n_cells; ++c) fn(c);
}

// FE values of v at the tabulated quadrature points, out[cell * nq + q].
void tabulate_fe_values(const FESpace& s, const CoefVec& v, ExecPolicy policy,
                        std::vector<double>& out) {
  const int nq = s.quad.size();
  const int ndl = s.ndof_local;
  out.resize(static_cast<size_t>(s.mesh.n_cells()) * nq);
  parallel_cells(policy, s.mesh.n_cells(), [&](int c) {
    const int* dofs = s.cell_dofs.data() + static_cast<size_t>(c) * ndl;
    for (int q = 0; q < nq; ++q) {
      const double* phi = s.phi.data() + q * ndl;
      double val = 0.0;
      for (int i = 0; i < ndl; ++i) val += phi[i] * v[dofs[i]];
      out[static_cast<size_t>(c) * nq + q] = val;
    }
  });
}

// Zero the boundary rows of J and put 1 on their diagonal. With
// symmetric = true the boundary columns are zeroed as well, which keeps
// the matrix SPD-friendly; valid because boundary increments are zero.
void apply_dirichlet_rows(SparseMatrix& J, const std::vector<char>& is_boundary, bool symmetric) {
  auto offsets = J.row_offsets();
  auto cols = J.col_indices();
  auto vals = J.values();
  for (int r = 0; r < J.rows(); ++r) {
    if (is_boundary[r]) {
      for (int k = offsets[r]; k < offsets[r + 1]; ++k) vals[k] = cols[k] == r ? 1.0 : 0.0;
    } else if (symmetric) {
      for (int k = offsets[r]; k < offsets[r + 1]; ++k)
        if (is_boundary[cols[k]]) vals[k] = 0.0;
    }
  }
}

struct NewtonCallbacks {
  std::function<CoefVec(const CoefVec&)> residual;
  std::function<SparseMatrix(const CoefVec&)> jacobian;  // boundary rows = identity
};

NewtonResult damped_newton(const NewtonCallbacks& cb, CoefVec w,
                           const std::vector<char>& is_boundary, double tol, int max_iters,
                           const SolveConfig& linear, int step_index) {
  CoefVec r = cb.residual(w);
  double rn = norm2(r);
  std::vector<double> residual_history{rn};
  for (int it = 0; it < max_iters; ++it) {
    if (rn <= tol) return {std::move(w), it, rn};
    SparseMatrix J = cb.jacobian(w);
    apply_dirichlet_rows(J, is_boundary, true);
    CoefVec rhs(r.size());
    for (size_t i = 0; i < r.size(); ++i) rhs[i] = -r[i];
    CoefVec d = solve(J, rhs, linear);

    double lambda = 1.0;
    CoefVec w_try = w;
    axpy(w_try, lambda, d);
    CoefVec r_try = cb.residual(w_try);
    double rn_try = norm2(r_try);
    for (int halvings = 0; rn_try > rn && halvings < 8; ++halvings) {
      lambda *= 0.5;
      w_try = w;
      axpy(w_try, lambda, d);
      r_try = cb.residual(w_try);
      rn_try = norm2(r_try);
    }
    w = std::move(w_try);
    r = std::move(r_try);
    rn = rn_try;
    residual_history.push_back(rn);
  }
  if (rn <= tol) return {std::move(w), max_iters, rn};
  std::ostringstream msg;
  msg << "newton: no convergence at step " << step_index << " after " << max_iters
      << " iterations, residual " << rn;
  throw NonlinearFailure(msg.str(), step_index, std::move(residual_history));
}

void check_full_newton_derivatives(const ProblemSpec& spec, const SchemeConfig& config) {
  if (!spec.df_dv) throw std::invalid_argument("scheme: df_dv is required");
  if (config.linearization == Linearization::FullNewton && (!spec.df_dz || !spec.dg_dv))
    throw std::invalid_argument("scheme: full Newton requires df_dz and dg_dv");
}

// Lagged part of the delay integral for the step n -> n+1, evaluated at
// every quadrature point. The candidate endpoint (weight sigma/2) is
// added separately by residual/jacobian since it depends on the iterate.
void update_step_cache(StepState& state, const ProblemSpec& spec, const SchemeConfig& config) {
  if (state.cache_step == state.n) return;
  const FESpace& s = *state.space;
  const int nq = s.quad.size();
  const int nc = s.mesh.n_cells();
  const double t1 = (state.n + 1) * config.sigma;
  const auto weights = delay_trapezoid_weights(config.m, config.sigma);

  state.z_lagged.assign(static_cast<size_t>(nc) * nq, 0.0);
  std::vector<double> vals;
  for (int k = state.n + 1 - config.m; k <= state.n; ++k) {
    const CoefVec& vk = state.history.at_step(k);
    tabulate_fe_values(s, vk, config.exec, vals);
    const double tk = k * config.sigma;
    const double wk = weights[k - (state.n + 1 - config.m)];
    parallel_cells(config.exec, nc, [&](int c) {
      for (int q = 0; q < nq; ++q) {
        size_t p = static_cast<size_t>(c) * nq + q;
        double gv = spec.g(state.quad_x[p], t1, tk, vals[p]);
        if (!std::isfinite(gv)) {
          std::ostringstream msg;
          msg << "scheme: non-finite g at cell " << c << ", t = " << t1 << ", s = " << tk;
          throw std::runtime_error(msg.str());
        }
        state.z_lagged[p] += wk * gv;
      }
    });
  }

  CoefVec combo = state.v_curr;
  for (auto& x : combo) x *= 4.0;
  axpy(combo, -1.0, state.v_prev);
  state.rhs_fixed = matvec(state.A, combo);
  state.cache_step = state.n;
}

void set_boundary_values(const FESpace& s, const DataFn& rho, double t, CoefVec& w) {
  for (int d : s.boundary_dofs) w[d] = rho(s.dof_coords[d], t);
}

}  // namespace

SchemeConfig make_scheme_config(const ProblemSpec& spec, double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("scheme config: sigma must be positive");
  if (!(spec.alpha > 0.0) || !(spec.beta > 0.0) || !(spec.tau > 0.0) || !(spec.t_final > 0.0))
    throw std::invalid_argument("scheme config: alpha, beta, tau and t_final must be positive");
  SchemeConfig config;
  config.sigma = sigma;

  double m_real = spec.tau / sigma;
  auto m = static_cast<long long>(std::llround(m_real));
  if (m < 1 || std::abs(m_real - static_cast<double>(m)) > 1e-12 * std::max(1.0, m_real))
    throw std::invalid_argument(
        "scheme config: sigma must divide the delay tau (sigma = tau/m for integer m >= 1)");
  config.m = static_cast<int>(m);

  double n_real = spec.t_final / sigma;
  auto n = static_cast<long long>(std::llround(n_real));
  if (n < 2 || std::abs(n_real - static_cast<double>(n)) > 1e-12 * std::max(1.0, n_real))
    throw std::invalid_argument(
        "scheme config: sigma must divide t_final (sigma = t_final/N for integer N >= 2)");
  config.n_steps = static_cast<int>(n);

  config.newton_tol = std::max(1e-12, 1e-3 * sigma * sigma * sigma);
  return config;
}

CoefVec bdf2_combination(const CoefVec& v_next, const CoefVec& v_curr, const CoefVec& v_prev) {
  if (v_next.size() != v_curr.size() || v_curr.size() != v_prev.size())
    throw std::invalid_argument("bdf2_combination: length mismatch");
  CoefVec out(v_next.size());
  // Difference form: exactly zero when all three states coincide.
  for (size_t i = 0; i < out.size(); ++i)
    out[i] = 3.0 * (v_next[i] - v_curr[i]) - (v_curr[i] - v_prev[i]);
  return out;
}

DelayHistory::DelayHistory(int m, double sigma, int n_dofs) : m_(m), sigma_(sigma), newest_(0) {
  if (m < 1) throw std::invalid_argument("DelayHistory: m must be >= 1");
  ring_.assign(m + 1, CoefVec(n_dofs, 0.0));
}

const CoefVec& DelayHistory::at_step(int step) const {
  if (step < newest_ - m_ || step > newest_)
    throw std::logic_error("DelayHistory: step outside the stored window");
  return ring_[slot(step)];
}

void DelayHistory::set_step(int step, CoefVec v) {
  if (step < newest_ - m_ || step > newest_)
    throw std::logic_error("DelayHistory: step outside the stored window");
  ring_[slot(step)] = std::move(v);
}

void DelayHistory::push(CoefVec v) {
  ++newest_;
  ring_[slot(newest_)] = std::move(v);
}

std::vector<double> delay_trapezoid_weights(int m, double sigma) {
  if (m < 1) throw std::invalid_argument("delay_trapezoid_weights: m must be >= 1");
  std::vector<double> w(m + 1, sigma);
  w.front() = 0.5 * sigma * testhooks::delay_endpoint_weight_scale();
  w.back() = 0.5 * sigma;
  return w;
}

std::vector<DelayTerm> delay_quadrature_terms(const DelayHistory& history,
                                              const CoefVec& candidate, int n) {
  if (history.newest() != n)
    throw std::logic_error("delay_quadrature_terms: history does not hold steps up to n");
  const int m = history.window();
  const double sigma = history.sigma();
  const auto weights = delay_trapezoid_weights(m, sigma);
  std::vector<DelayTerm> terms;
  terms.reserve(m + 1);
  for (int k = n + 1 - m; k <= n; ++k)
    terms.push_back({k * sigma, &history.at_step(k), weights[k - (n + 1 - m)]});
  terms.push_back({(n + 1) * sigma, &candidate, weights.back()});
  return terms;
}

namespace testhooks {
double& delay_endpoint_weight_scale() {
  static double scale = 1.0;
  return scale;
}
}  // namespace testhooks

StepState make_step_state(const FESpace& space, const ProblemSpec& spec,
                          const SchemeConfig& config) {
  StepState state;
  state.space = &space;
  state.M = assemble_mass(space, config.exec);
  state.K = assemble_stiffness(space, config.exec);
  state.A = csr_add(1.0, state.M, spec.beta, state.K);
  state.lhs_base = csr_add(3.0, state.A, 2.0 * spec.alpha * config.sigma, state.K);

  const int nq = space.quad.size();
  state.quad_x.resize(static_cast<size_t>(space.mesh.n_cells()) * nq);
  for (int c = 0; c < space.mesh.n_cells(); ++c) {
    CellGeometry geom = cell_geometry(space.mesh, c);
    for (int q = 0; q < nq; ++q)
      state.quad_x[static_cast<size_t>(c) * nq + q] = geom.map(space.quad.points[q]);
  }

  state.history = init_history(space, spec, config);
  state.v_curr = state.history.at_step(0);
  state.v_prev = state.history.at_step(-1);
  state.n = 0;
  state.t = 0.0;
  return state;
}

CoefVec residual(StepState& state, const CoefVec& w, const ProblemSpec& spec,
                 const SchemeConfig& config) {
  const FESpace& s = *state.space;
  if (static_cast<int>(w.size()) != s.n_dofs)
    throw std::invalid_argument("residual: candidate size mismatch");
  update_step_cache(state, spec, config);
  const double t1 = (state.n + 1) * config.sigma;
  const double sigma = config.sigma;
  const double w_end = delay_trapezoid_weights(config.m, sigma).back();
  const int nq = s.quad.size();

  std::vector<double> w_vals;
  tabulate_fe_values(s, w, config.exec, w_vals);
  CoefVec load = assemble_load(
      s,
      [&](int c, int q, Pt x) {
        size_t p = static_cast<size_t>(c) * nq + q;
        double wv = w_vals[p];
        double z = state.z_lagged[p] + w_end * spec.g(x, t1, t1, wv);
        return spec.f(x, t1, wv, z);
      },
      config.exec);

  CoefVec r = matvec(state.lhs_base, w);
  for (int i = 0; i < s.n_dofs; ++i) r[i] -= 2.0 * sigma * load[i] + state.rhs_fixed[i];
  for (int d : s.boundary_dofs) r[d] = w[d] - spec.boundary(s.dof_coords[d], t1);
  return r;
}

SparseMatrix jacobian(StepState& state, const CoefVec& w, const ProblemSpec& spec,
                      const SchemeConfig& config) {
  const FESpace& s = *state.space;
  check_full_newton_derivatives(spec, config);
  update_step_cache(state, spec, config);
  const double t1 = (state.n + 1) * config.sigma;
  const double sigma = config.sigma;
  const double w_end = delay_trapezoid_weights(config.m, sigma).back();
  const bool full = config.linearization == Linearization::FullNewton;
  const int nq = s.quad.size();

  std::vector<double> w_vals;
  tabulate_fe_values(s, w, config.exec, w_vals);
  SparseMatrix W = assemble_weighted_mass(
      s,
      [&](int c, int q, Pt x) {
        size_t p = static_cast<size_t>(c) * nq + q;
        double wv = w_vals[p];
        double z = state.z_lagged[p] + w_end * spec.g(x, t1, t1, wv);
        double weight = spec.df_dv(x, t1, wv, z);
        if (full) weight += spec.df_dz(x, t1, wv, z) * w_end * spec.dg_dv(x, t1, t1, wv);
        return weight;
      },
      config.exec);

  SparseMatrix J = csr_add(1.0, state.lhs_base, -2.0 * sigma, W);
  apply_dirichlet_rows(J, s.is_boundary_dof, false);
  return J;
}

NewtonResult newton_step_solve(StepState& state, const ProblemSpec& spec,
                               const SchemeConfig& config) {
  const FESpace& s = *state.space;
  check_full_newton_derivatives(spec, config);
  const double t1 = (state.n + 1) * config.sigma;

  CoefVec w0 = state.v_curr;
  for (size_t i = 0; i < w0.size(); ++i) w0[i] = 2.0 * state.v_curr[i] - state.v_prev[i];
  set_boundary_values(s, spec.boundary, t1, w0);

  NewtonCallbacks cb{
      [&](const CoefVec& w) { return residual(state, w, spec, config); },
      [&](const CoefVec& w) { return jacobian(state, w, spec, config); },
  };
  return damped_newton(cb, std::move(w0), s.is_boundary_dof, config.newton_tol,
                       config.newton_max_iters, config.linear, state.n + 1);
}

DelayHistory init_history(const FESpace& space, const ProblemSpec& spec,
                          const SchemeConfig& config) {
  DelayHistory history(config.m, config.sigma, space.n_dofs);
  for (int k = -config.m; k <= 0; ++k)
    history.set_step(k, interpolate(space, spec.history, k * config.sigma));
  return history;
}

CoefVec startup_first_step(StepState& state, const ProblemSpec& spec,
                           const SchemeConfig& config) {
  const FESpace& s = *state.space;
  if (config.startup == StartupMode::ExactSeed) {
    if (!spec.exact)
      throw std::invalid_argument("startup: exact-seed requires an exact solution");
    return interpolate(s, spec.exact, config.sigma);
  }

  // Crank-Nicolson sub-steps on [0, sigma]. The delay integral at a
  // sub-step time t is the sigma-spaced trapezoid over [t - tau, t]; all
  // interior nodes fall in [-tau, 0] where the history is analytic, so
  // only the endpoint couples to the evolving state.
  const int n_sub = static_cast<int>(std::ceil(1.0 / config.sigma));
  const double delta = config.sigma / n_sub;
  const double alpha = spec.alpha;
  const auto weights = delay_trapezoid_weights(config.m, config.sigma);
  const double w_end = weights.back();
  const int nq = s.quad.size();
  const int nc = s.mesh.n_cells();

  SparseMatrix cn_lhs = csr_add(1.0, state.A, 0.5 * alpha * delta, state.K);
  SparseMatrix cn_rhs_op = csr_add(1.0, state.A, -0.5 * alpha * delta, state.K);

  // Lagged delay part at an arbitrary time t in [0, sigma].
  std::vector<double> z_lag(static_cast<size_t>(nc) * nq);
  auto fill_z_lagged = [&](double t) {
    parallel_cells(config.exec, nc, [&](int c) {
      for (int q = 0; q < nq; ++q) {
        size_t p = static_cast<size_t>(c) * nq + q;
        Pt x = state.quad_x[p];
        double z = 0.0;
        for (int j = 0; j < config.m; ++j) {
          double sj = t - spec.tau + j * config.sigma;
          z += weights[j] * spec.g(x, t, sj, spec.history(x, sj));
        }
        z_lag[p] = z;
      }
    });
  };

  CoefVec u = interpolate(s, spec.history, 0.0);
  std::vector<double> u_vals, w_vals;
  for (int k = 0; k < n_sub; ++k) {
    const double tk = k * delta;
    const double tk1 = (k + 1) * delta;

    // Explicit half of the trapezoidal rule, frozen at u^k.
    fill_z_lagged(tk);
    tabulate_fe_values(s, u, config.exec, u_vals);
    CoefVec load_k = assemble_load(
        s,
        [&](int c, int q, Pt x) {
          size_t p = static_cast<size_t>(c) * nq + q;
          double uv = u_vals[p];
          double z = z_lag[p] + w_end * spec.g(x, tk, tk, uv);
          return spec.f(x, tk, uv, z);
        },
        config.exec);
    CoefVec rhs = matvec(cn_rhs_op, u);
    axpy(rhs, 0.5 * delta, load_k);

    fill_z_lagged(tk1);
    NewtonCallbacks cb{
        [&](const CoefVec& w) {
          tabulate_fe_values(s, w, config.exec, w_vals);
          CoefVec load = assemble_load(
              s,
              [&](int c, int q, Pt x) {
                size_t p = static_cast<size_t>(c) * nq + q;
                double wv = w_vals[p];
                double z = z_lag[p] + w_end * spec.g(x, tk1, tk1, wv);
                return spec.f(x, tk1, wv, z);
              },
              config.exec);
          CoefVec r = matvec(cn_lhs, w);
          for (int i = 0; i < s.n_dofs; ++i) r[i] -= 0.5 * delta * load[i] + rhs[i];
          for (int d : s.boundary_dofs) r[d] = w[d] - spec.boundary(s.dof_coords[d], tk1);
          return r;
        },
        [&](const CoefVec& w) {
          check_full_newton_derivatives(spec, config);
          tabulate_fe_values(s, w, config.exec, w_vals);
          const bool full = config.linearization == Linearization::FullNewton;
          SparseMatrix W = assemble_weighted_mass(
              s,
              [&](int c, int q, Pt x) {
                size_t p = static_cast<size_t>(c) * nq + q;
                double wv = w_vals[p];
                double z = z_lag[p] + w_end * spec.g(x, tk1, tk1, wv);
                double weight = spec.df_dv(x, tk1, wv, z);
                if (full)
                  weight += spec.df_dz(x, tk1, wv, z) * w_end * spec.dg_dv(x, tk1, tk1, wv);
                return weight;
              },
              config.exec);
          SparseMatrix J = csr_add(1.0, cn_lhs, -0.5 * delta, W);
          apply_dirichlet_rows(J, s.is_boundary_dof, false);
          return J;
        },
    };

    CoefVec w0 = u;
    set_boundary_values(s, spec.boundary, tk1, w0);
    NewtonResult result = damped_newton(cb, std::move(w0), s.is_boundary_dof, config.newton_tol,
                                        config.newton_max_iters, config.linear, 1);
    u = std::move(result.solution);
  }
  return u;
}

double beta_norm(const SparseMatrix& A, const CoefVec& v) {
  return std::sqrt(std::max(0.0, dot(v, matvec(A, v))));
}

RunResult run(const FESpace& space, const ProblemSpec& spec, const SchemeConfig& config,
              const StepObserver& observer) {
  StepState state = make_step_state(space, spec, config);
  std::vector<StepRecord> records;
  records.reserve(config.n_steps + 1);
  records.push_back({0, 0.0, beta_norm(state.A, state.v_curr), 0});

  auto advance = [&](CoefVec v_next, int iters) {
    state.history.push(v_next);
    state.v_prev = std::move(state.v_curr);
    state.v_curr = std::move(v_next);
    state.n += 1;
    state.t = state.n * config.sigma;
    records.push_back({state.n, state.t, beta_norm(state.A, state.v_curr), iters});
    if (observer) observer(state.n, state.t, state.v_curr, iters);
  };

  try {
    CoefVec v1 = startup_first_step(state, spec, config);
    advance(std::move(v1), 0);
    for (int n = 1; n < config.n_steps; ++n) {
      NewtonResult result = newton_step_solve(state, spec, config);
      advance(std::move(result.solution), result.iters);
    }
  } catch (const NonlinearFailure&) {
    throw;
  } catch (const std::exception& e) {
    std::ostringstream msg;
    msg << "run: failure at step " << state.n + 1 << ": " << e.what();
    throw std::runtime_error(msg.str());
  }
  return {std::move(state), std::move(records)};
}

}  // namespace dsfem
