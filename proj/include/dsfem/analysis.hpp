#pragma once

#include <limits>
#include <span>
#include <string>
#include <vector>

#include "dsfem/fe_space.hpp"
#include "dsfem/problem.hpp"
#include "dsfem/scheme.hpp"

namespace dsfem {

struct ErrorPair {
  double h1 = 0.0;
  double l2 = 0.0;
};

/// L2 and H1 errors of the FE function against the exact solution at
/// time t, by quadrature of exactness 2p+2. If exact_grad is missing the
/// gradient is approximated by central differences with step 1e-6 h.
ErrorPair error_norms(const FESpace& space, const CoefVec& coeffs, const DataFn& exact,
                      const GradFn& exact_grad, double t);

/// max over the per-step errors (steps n = 1..N).
double sup_over_steps(std::span<const double> per_step_errors);

/// log2(e_coarse / e_fine); both must be positive.
double convergence_rate(double e_coarse, double e_fine);

enum class StudyAxis { Space, Time };

struct StudyRow {
  double resolution = 0.0;  // h (1/n in 2D) or sigma
  double err_h1_sup = 0.0;
  double err_l2_sup = 0.0;
  double rate_h1 = std::numeric_limits<double>::quiet_NaN();
  double rate_l2 = std::numeric_limits<double>::quiet_NaN();
  double wall_s = 0.0;
  bool failed = false;
  std::string note;
};

struct ConvergenceReport {
  StudyAxis axis = StudyAxis::Space;
  std::vector<StudyRow> rows;
  std::string config_summary;

  std::string to_csv() const;
  static ConvergenceReport from_csv(const std::string& text);
  std::string to_json() const;
  /// Fixed-width text table in the style of the error/rate tables.
  std::string to_table() const;
};

struct StudyOptions {
  StartupMode startup = StartupMode::ExactSeed;
  Linearization linearization = Linearization::FullNewton;
  SolveConfig linear;
  ExecPolicy exec = ExecPolicy::Parallel;
  int jobs = 1;
  double t_final_override = 0.0;  // 0 keeps the problem's horizon
};

/// One run per mesh resolution at fixed sigma; errors are sup over steps.
ConvergenceReport run_spatial_study(const ProblemSpec& spec, int degree,
                                    std::span<const int> cells_per_side, double sigma,
                                    const StudyOptions& options = {});

/// One run per sigma at a fixed mesh.
ConvergenceReport run_temporal_study(const ProblemSpec& spec, int degree, int cells_per_side,
                                     std::span<const double> sigmas,
                                     const StudyOptions& options = {});

enum class ProbeScheme { ThreeLevel, ExplicitEuler };

struct StabilityRow {
  double sigma = 0.0;
  double max_beta_norm = 0.0;
  double exact_max_beta_norm = 0.0;
  bool finite = false;
  bool bounded = false;  // finite and within 10x the exact norm scale
  std::string note;
};

struct StabilityProbeOptions {
  StartupMode startup = StartupMode::CrankNicolsonSubstepped;
  ProbeScheme scheme = ProbeScheme::ThreeLevel;  // ExplicitEuler is a test hook
  double beta_override = 0.0;                    // test hook, 0 keeps spec.beta
  ExecPolicy exec = ExecPolicy::Parallel;
};

/// Runs the full horizon for each sigma and reports max_n ||v_h^n||_beta
/// against 10x the exact solution's norm scale.
std::vector<StabilityRow> run_stability_probe(const ProblemSpec& spec, int degree,
                                              int cells_per_side, std::span<const double> sigmas,
                                              const StabilityProbeOptions& options = {});

}  // namespace dsfem
