#include "dsfem/verify.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>

#include "dsfem/analysis.hpp"
#include "dsfem/assembly.hpp"
#include "dsfem/problem.hpp"
#include "dsfem/scheme.hpp"
#include "dsfem/solve.hpp"

namespace dsfem {

namespace {

constexpr double kPi = std::numbers::pi;

struct Check {
  bool ok = true;
  std::ostringstream detail;
  void expect(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      if (detail.tellp() > 0) detail << "; ";
      detail << what;
    }
  }
};

CoefVec random_vector(int n, std::mt19937& rng) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  CoefVec v(n);
  for (auto& x : v) x = dist(rng);
  return v;
}

// || u_h ||_0^2 + beta || grad u_h ||_0^2 by direct quadrature, the
// matrix-free route of the norm identity.
double beta_norm_sq_by_quadrature(const FESpace& s, const CoefVec& u, double beta) {
  double val_sq = 0.0, grad_sq = 0.0;
  const int ndl = s.ndof_local;
  const int nq = s.quad.size();
  for (int c = 0; c < s.mesh.n_cells(); ++c) {
    CellGeometry geom = cell_geometry(s.mesh, c);
    double scale = std::abs(geom.det_jacobian);
    for (int q = 0; q < nq; ++q) {
      double v = 0.0;
      Pt rg{0.0, 0.0};
      for (int i = 0; i < ndl; ++i) {
        double coef = u[s.cell_dof(c, i)];
        v += coef * s.phi[q * ndl + i];
        rg.x += coef * s.dphi_x[q * ndl + i];
        rg.y += coef * s.dphi_y[q * ndl + i];
      }
      Pt g = geom.grad_to_physical(rg);
      double wq = s.quad.weights[q] * scale;
      val_sq += wq * v * v;
      grad_sq += wq * (g.x * g.x + g.y * g.y);
    }
  }
  return val_sq + beta * grad_sq;
}

bool matrix_symmetric(const SparseMatrix& M) {
  auto offsets = M.row_offsets();
  auto cols = M.col_indices();
  auto vals = M.values();
  for (int r = 0; r < M.rows(); ++r)
    for (int k = offsets[r]; k < offsets[r + 1]; ++k)
      if (vals[k] != M.at(cols[k], r)) return false;
  return true;
}

double smallest_eigenvalue_estimate(const SparseMatrix& A, int iters, std::mt19937& rng) {
  CoefVec x = random_vector(A.rows(), rng);
  SolveConfig cfg;
  for (int it = 0; it < iters; ++it) {
    x = solve(A, x, cfg);
    double nx = norm2(x);
    for (auto& v : x) v /= nx;
  }
  return dot(x, matvec(A, x)) / dot(x, x);
}

SuiteResult suite_matrix() {
  Check check;
  std::mt19937 rng(7001);
  const double beta = 0.7;
  for (int dim = 1; dim <= 2; ++dim) {
    FESpace space = dim == 1 ? build_space(build_interval_mesh(0.0, 1.0, 8), 2)
                             : build_space(build_unit_square_tri_mesh(3), 2);
    SparseMatrix M = assemble_mass(space);
    SparseMatrix K = assemble_stiffness(space);
    SparseMatrix A = assemble_combined(space, beta);
    check.expect(matrix_symmetric(M) && matrix_symmetric(K) && matrix_symmetric(A),
                 "matrix symmetry violated");
    for (int trial = 0; trial < 20; ++trial) {
      CoefVec u = random_vector(space.n_dofs, rng);
      CoefVec w = random_vector(space.n_dofs, rng);
      double lhs = dot(u, matvec(A, w));
      double rhs = dot(u, matvec(M, w)) + beta * dot(u, matvec(K, w));
      check.expect(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(rhs)),
                   "A != M + beta K on a random pair");
      double norm_matrix = dot(u, matvec(A, u));
      double norm_quad = beta_norm_sq_by_quadrature(space, u, beta);
      check.expect(std::abs(norm_matrix - norm_quad) <= 1e-12 * std::max(1.0, norm_quad),
                   "beta-norm identity violated");
    }
    double lambda_min = smallest_eigenvalue_estimate(A, 25, rng);
    check.expect(lambda_min > 0.0, "combined operator not positive definite");
  }
  return {"matrix", check.ok, check.detail.str(), 0.0};
}

SuiteResult suite_sqrt2_bound() {
  Check check;
  std::mt19937 rng(7002);
  FESpace space = build_space(build_interval_mesh(0.0, 1.0, 16), 2);
  SparseMatrix A = assemble_combined(space, 1.0);
  int failures = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    CoefVec u = random_vector(space.n_dofs, rng);
    CoefVec w = random_vector(space.n_dofs, rng);
    double auw = std::abs(dot(u, matvec(A, w)));
    double bound = std::sqrt(2.0) * std::sqrt(dot(u, matvec(A, u))) *
                   std::sqrt(dot(w, matvec(A, w)));
    if (auw > bound * (1.0 + 1e-12)) ++failures;
  }
  check.expect(failures == 0, "sqrt(2) Cauchy-Schwarz bound failed");
  return {"sqrt2-bound", check.ok, check.detail.str(), 0.0};
}

SuiteResult suite_green() {
  Check check;
  {
    FESpace space = build_space(build_interval_mesh(0.0, 1.0, 8), 2);
    CoefVec u = interpolate(space, [](Pt p, double) { return p.x * p.x; }, 0.0);
    CoefVec w = interpolate(space, [](Pt p, double) { return p.x; }, 0.0);
    double r = green_identity_residual(space, u, w, [](Pt) { return 2.0; });
    check.expect(r < 1e-10, "1D quadratic case residual too large");

    CoefVec uc = interpolate(space, [](Pt, double) { return 3.5; }, 0.0);
    double rc = green_identity_residual(space, uc, w, [](Pt) { return 0.0; });
    check.expect(rc < 1e-10, "constant case residual too large");
  }
  {
    FESpace space = build_space(build_unit_square_tri_mesh(4), 2);
    CoefVec u = interpolate(space, [](Pt p, double) { return p.x * p.x + p.y * p.y; }, 0.0);
    CoefVec w = interpolate(space, [](Pt, double) { return 1.0; }, 0.0);
    double r = green_identity_residual(space, u, w, [](Pt) { return 4.0; });
    check.expect(r < 1e-10, "2D divergence case residual too large");
  }
  return {"green", check.ok, check.detail.str(), 0.0};
}

SuiteResult suite_exactness() {
  Check check;
  // BDF2 combination reproduces the derivative of a quadratic exactly.
  const double sigma = 0.25;
  for (double t : {0.5, 1.0, 2.75}) {
    CoefVec next(3, t * t), curr(3, (t - sigma) * (t - sigma)),
        prev(3, (t - 2 * sigma) * (t - 2 * sigma));
    CoefVec combo = bdf2_combination(next, curr, prev);
    for (double c : combo)
      check.expect(std::abs(c / (2.0 * sigma) - 2.0 * t) <= 1e-12, "BDF2 not exact on quadratic");
  }
  // Trapezoid weights integrate a linear function of time exactly:
  // int_1^2 s ds = 3/2 over the window of step n = 7 (m = 4).
  {
    DelayHistory history(4, sigma, 1);
    for (int k = -4; k <= 0; ++k) history.set_step(k, CoefVec{k * sigma});
    for (int k = 1; k <= 7; ++k) history.push(CoefVec{k * sigma});
    CoefVec candidate{8 * sigma};
    auto terms = delay_quadrature_terms(history, candidate, 7);
    double by_time = 0.0, by_state = 0.0;
    for (const auto& term : terms) {
      by_time += term.weight * term.t;
      by_state += term.weight * (*term.state)[0];
    }
    check.expect(std::abs(by_time - 1.5) <= 1e-12, "trapezoid not exact on linear integrand");
    check.expect(std::abs(by_state - 1.5) <= 1e-12, "trapezoid through states not exact");
  }
  return {"exactness", check.ok, check.detail.str(), 0.0};
}

SuiteResult suite_jacobian() {
  Check check;
  ProblemSpec spec = example1();
  FESpace space = build_space(build_interval_mesh(spec.xa, spec.xb, 9), 1);  // 10 DOFs
  SchemeConfig config = make_scheme_config(spec, 0.25);
  config.exec = ExecPolicy::Serial;
  StepState state = make_step_state(space, spec, config);

  CoefVec w = state.v_curr;
  for (size_t i = 0; i < w.size(); ++i) w[i] = 2.0 * state.v_curr[i] - state.v_prev[i];
  // Perturb off the extrapolation so the nonlinear terms are exercised.
  std::mt19937 rng(7003);
  std::uniform_real_distribution<double> dist(-0.05, 0.05);
  for (auto& x : w) x += dist(rng);

  SparseMatrix J = jacobian(state, w, spec, config);
  for (int j = 0; j < space.n_dofs; ++j) {
    double eps = 1e-6 * std::max(1.0, std::abs(w[j]));
    CoefVec wp = w, wm = w;
    wp[j] += eps;
    wm[j] -= eps;
    CoefVec rp = residual(state, wp, spec, config);
    CoefVec rm = residual(state, wm, spec, config);
    double col_norm_sq = 0.0, diff_norm_sq = 0.0;
    for (int i = 0; i < space.n_dofs; ++i) {
      double fd = (rp[i] - rm[i]) / (2.0 * eps);
      double an = J.at(i, j);
      col_norm_sq += an * an;
      diff_norm_sq += (an - fd) * (an - fd);
    }
    check.expect(std::sqrt(diff_norm_sq) <= 1e-5 * std::max(1.0, std::sqrt(col_norm_sq)),
                 "Jacobian column disagrees with finite differences");
  }
  return {"jacobian", check.ok, check.detail.str(), 0.0};
}

double high_res_delay_integral(const ProblemSpec& spec, Pt x, double t) {
  // 32-panel composite 8-point Gauss over [t - tau, t]; integrand values
  // come from the exact solution.
  QuadratureRule gl = gauss_legendre_01(8);
  double total = 0.0;
  const int panels = 32;
  double a = t - spec.tau;
  double len = spec.tau / panels;
  for (int p = 0; p < panels; ++p) {
    double left = a + p * len;
    for (int k = 0; k < gl.size(); ++k) {
      double s = left + gl.points[k].x * len;
      total += gl.weights[k] * len * spec.g(x, t, s, spec.exact(x, s));
    }
  }
  return total;
}

SuiteResult suite_manufactured() {
  Check check;
  std::mt19937 rng(7004);
  std::uniform_real_distribution<double> unit(0.05, 0.95);
  {
    ProblemSpec spec = example1();
    std::uniform_real_distribution<double> time(0.0, spec.t_final);
    for (int k = 0; k < 50; ++k) {
      Pt x{unit(rng), 0.0};
      double t = time(rng);
      double v = spec.exact(x, t);
      double z = high_res_delay_integral(spec, x, t);
      // (I - Lap) v_t vanishes for this solution profile, so the strong
      // form reduces to -Lap v = f, with Lap v = v.
      double lhs = -std::exp(-x.x) * std::cos(kPi * t);
      double res = std::abs(lhs - spec.f(x, t, v, z));
      check.expect(res <= 1e-8, "example1 PDE residual above 1e-8");
    }
  }
  {
    ProblemSpec spec = example2();
    std::uniform_real_distribution<double> time(0.0, spec.t_final);
    for (int k = 0; k < 50; ++k) {
      Pt x{unit(rng), unit(rng)};
      double t = time(rng);
      double v = spec.exact(x, t);
      double z = high_res_delay_integral(spec, x, t);
      // v_t = -v/2 and Lap v = -2 pi^2 v give (I - Lap) v_t - Lap v =
      // (pi^2 - 1/2) v.
      double lhs = (kPi * kPi - 0.5) * v;
      double res = std::abs(lhs - spec.f(x, t, v, z));
      check.expect(res <= 1e-8, "example2 PDE residual above 1e-8");
    }
  }
  return {"manufactured", check.ok, check.detail.str(), 0.0};
}

SuiteResult suite_delay_weights() {
  Check check;
  const double tau = 1.0;
  for (int m : {1, 2, 4, 10}) {
    double sigma = tau / m;
    auto weights = delay_trapezoid_weights(m, sigma);
    double sum = 0.0;
    for (double w : weights) sum += w;
    std::ostringstream what;
    what << "weights for m = " << m << " sum to " << sum << " instead of tau";
    check.expect(std::abs(sum - tau) <= 1e-13, what.str());
  }
  // m = 2 layout: sigma/2, sigma, sigma/2.
  auto w2 = delay_trapezoid_weights(2, 0.5);
  check.expect(w2.size() == 3 && std::abs(w2[0] - 0.25) <= 1e-15 &&
                   std::abs(w2[1] - 0.5) <= 1e-15 && std::abs(w2[2] - 0.25) <= 1e-15,
               "m = 2 weight layout wrong");
  return {"delay-weights", check.ok, check.detail.str(), 0.0};
}

}  // namespace

std::vector<std::string> verify_suite_names() {
  return {"matrix", "sqrt2-bound", "green", "exactness", "jacobian", "manufactured", "delay-weights"};
}

std::vector<SuiteResult> run_verify_suites(const std::string& filter,
                                           bool inject_trapezoid_fault) {
  double saved_scale = testhooks::delay_endpoint_weight_scale();
  if (inject_trapezoid_fault) testhooks::delay_endpoint_weight_scale() = 1.5;

  std::vector<std::pair<std::string, std::function<SuiteResult()>>> suites = {
      {"matrix", suite_matrix},
      {"sqrt2-bound", suite_sqrt2_bound},
      {"green", suite_green},
      {"exactness", suite_exactness},
      {"jacobian", suite_jacobian},
      {"manufactured", suite_manufactured},
      {"delay-weights", suite_delay_weights},
  };

  std::vector<SuiteResult> results;
  for (auto& [name, fn] : suites) {
    if (!filter.empty() && filter != name) continue;
    auto start = std::chrono::steady_clock::now();
    SuiteResult result;
    try {
      result = fn();
    } catch (const std::exception& e) {
      result.name = name;
      result.passed = false;
      result.detail = std::string("exception: ") + e.what();
    }
    result.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    results.push_back(std::move(result));
  }

  testhooks::delay_endpoint_weight_scale() = saved_scale;
  return results;
}

}  // namespace dsfem
