#pragma once

#include <climits>
#include <functional>
#include <stdexcept>
#include <vector>

#include "dsfem/assembly.hpp"
#include "dsfem/fe_space.hpp"
#include "dsfem/problem.hpp"
#include "dsfem/solve.hpp"
#include "dsfem/sparse.hpp"

namespace dsfem {

enum class StartupMode { CrankNicolsonSubstepped, ExactSeed };
enum class Linearization { FullNewton, PicardLaggedZ };

struct SchemeConfig {
  double sigma = 0.0;
  int m = 0;        // delay window steps, tau = m * sigma
  int n_steps = 0;  // N, t_final = N * sigma
  double newton_tol = 1e-12;
  int newton_max_iters = 25;
  StartupMode startup = StartupMode::CrankNicolsonSubstepped;
  Linearization linearization = Linearization::FullNewton;
  SolveConfig linear;
  ExecPolicy exec = ExecPolicy::Parallel;
};

/// Validates that sigma divides both the delay tau and the horizon
/// t_final to integer step counts and fills in the defaults. The
/// nonlinear tolerance max(1e-12, 1e-3 sigma^3) keeps the Newton error
/// below the local truncation budget of the scheme.
SchemeConfig make_scheme_config(const ProblemSpec& spec, double sigma);

/// 3 v_next - 4 v_curr + v_prev, the unscaled second-order backward
/// combination approximating 2 sigma v_t.
CoefVec bdf2_combination(const CoefVec& v_next, const CoefVec& v_curr, const CoefVec& v_prev);

/// Ring buffer of the m+1 most recent states v^{newest-m} .. v^{newest}.
class DelayHistory {
public:
  DelayHistory() = default;
  DelayHistory(int m, double sigma, int n_dofs);

  int window() const { return m_; }
  double sigma() const { return sigma_; }
  int newest() const { return newest_; }
  const CoefVec& at_step(int step) const;
  /// Overwrite a state inside the current window (used when seeding).
  void set_step(int step, CoefVec v);
  /// Append the state for step newest()+1, dropping the oldest.
  void push(CoefVec v);

private:
  int slot(int step) const { return ((step % (m_ + 1)) + m_ + 1) % (m_ + 1); }
  int m_ = 0;
  double sigma_ = 0.0;
  int newest_ = 0;
  std::vector<CoefVec> ring_;
};

struct DelayTerm {
  double t;
  const CoefVec* state;
  double weight;
};

/// Composite trapezoid weights over the delay window: m+1 entries,
/// sigma/2 at both ends and sigma inside; they sum to tau = m sigma.
std::vector<double> delay_trapezoid_weights(int m, double sigma);

/// States and weights entering the delay integral for the step from n to
/// n+1: v^{n+1-m} .. v^n from the history plus the candidate for v^{n+1}.
std::vector<DelayTerm> delay_quadrature_terms(const DelayHistory& history,
                                              const CoefVec& candidate, int n);

namespace testhooks {
/// Scales the oldest-endpoint trapezoid weight. 1.0 in normal operation;
/// the verify CLI uses it as a fault-injection negative control.
double& delay_endpoint_weight_scale();
}  // namespace testhooks

struct NonlinearFailure : std::runtime_error {
  NonlinearFailure(const std::string& what, int step_, std::vector<double> history_)
      : std::runtime_error(what), step(step_), residual_history(std::move(history_)) {}
  int step;
  std::vector<double> residual_history;
};

/// Everything the marching loop carries between steps: the two trailing
/// states, the delay history, and the assembled operators. Single-owner
/// mutable; matrices are assembled once.
struct StepState {
  const FESpace* space = nullptr;
  DelayHistory history;
  CoefVec v_prev, v_curr;
  int n = 0;       // v_curr = v^n
  double t = 0.0;  // n * sigma

  SparseMatrix M, K, A;   // A = M + beta K
  SparseMatrix lhs_base;  // 3 A + 2 alpha sigma K
  std::vector<Pt> quad_x;  // physical quadrature points [cell * nq + q]

  // Per-step cache: lagged part of the delay integral at the quadrature
  // points and the right-hand side A (4 v^n - v^{n-1}).
  int cache_step = INT_MIN;
  std::vector<double> z_lagged;
  CoefVec rhs_fixed;
};

StepState make_step_state(const FESpace& space, const ProblemSpec& spec,
                          const SchemeConfig& config);

/// Residual of the implicit three-level equation at candidate w for
/// v^{n+1}; boundary rows hold w_i - rho(x_i, t_{n+1}).
CoefVec residual(StepState& state, const CoefVec& w, const ProblemSpec& spec,
                 const SchemeConfig& config);

/// Derivative of the residual with respect to w. Boundary rows are
/// identity. PicardLaggedZ drops the delay-endpoint coupling term.
SparseMatrix jacobian(StepState& state, const CoefVec& w, const ProblemSpec& spec,
                      const SchemeConfig& config);

struct NewtonResult {
  CoefVec solution;
  int iters = 0;
  double residual_norm = 0.0;
};

/// Damped Newton solve for v^{n+1}, starting from the linear
/// extrapolation 2 v^n - v^{n-1}.
NewtonResult newton_step_solve(StepState& state, const ProblemSpec& spec,
                               const SchemeConfig& config);

/// History states for t = -m sigma .. 0 as nodal interpolants of u0.
DelayHistory init_history(const FESpace& space, const ProblemSpec& spec,
                          const SchemeConfig& config);

/// First step v^1. ExactSeed interpolates the exact solution at t = sigma
/// (convergence studies); CrankNicolsonSubstepped integrates [0, sigma]
/// with ceil(1/sigma) trapezoidal sub-steps, evaluating the delay
/// integral by the same sigma-spaced trapezoid over the analytic history.
CoefVec startup_first_step(StepState& state, const ProblemSpec& spec,
                           const SchemeConfig& config);

using StepObserver = std::function<void(int n, double t, const CoefVec& v, int newton_iters)>;

struct StepRecord {
  int n;
  double t;
  double beta_norm;
  int newton_iters;
};

struct RunResult {
  StepState state;
  std::vector<StepRecord> records;  // n = 0 .. N
};

/// Full march: history init, startup, then N-1 three-level steps. The
/// observer receives each accepted state for n = 1 .. N. Deterministic
/// for a fixed configuration.
RunResult run(const FESpace& space, const ProblemSpec& spec, const SchemeConfig& config,
              const StepObserver& observer = {});

/// sqrt(v' A v): discrete norm induced by the combined operator.
double beta_norm(const SparseMatrix& A, const CoefVec& v);

}  // namespace dsfem
