#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dsfem/mesh.hpp"

namespace dsfem {

/// Right-hand side f(x, t, v, z), where z is the distributed delay
/// integral of g over [t - tau, t].
using ReactionFn = std::function<double(Pt x, double t, double v, double z)>;
/// Delay kernel g(x, t, s, v(s)).
using DelayKernelFn = std::function<double(Pt x, double t, double s, double v)>;
using DataFn = std::function<double(Pt x, double t)>;
using GradFn = std::function<Pt(Pt x, double t)>;

/// One instance of the delay Sobolev model
///   (I - beta Lap) v_t - alpha Lap v = f(x, t, v, int_{t-tau}^t g ds)
/// on an interval or the unit square, with Dirichlet data rho, history
/// u0 on [-tau, 0], and an optional exact solution for error studies.
/// All callbacks must be pure; they are invoked from parallel assembly.
struct ProblemSpec {
  std::string name;
  int dim = 1;
  double xa = 0.0, xb = 1.0;  // interval bounds; unit square when dim == 2

  double alpha = 1.0;
  double beta = 1.0;
  double tau = 1.0;
  double t_final = 1.0;

  ReactionFn f, df_dv, df_dz;
  DelayKernelFn g, dg_dv;
  DataFn history;   // u0(x, t) for t in [-tau, 0]
  DataFn boundary;  // rho(x, t) on the boundary
  DataFn exact;     // optional
  GradFn exact_grad;  // optional
};

/// 1D benchmark: exact solution e^{-x} cos(pi t) on [0, 1] x [0, 3],
/// tau = 1, f = v^2 - 2 z + forcing, g = v.
ProblemSpec example1();

/// 2D benchmark: exact solution e^{-t/2} sin(pi x) sin(pi y) on the unit
/// square, T_f = 1, tau = 1, f = v^2/2 + sin(v) + z + forcing, g = v.
ProblemSpec example2();

struct ValidationIssue {
  std::string check;
  Pt x;
  double t = 0.0;
  double got = 0.0;
  double want = 0.0;
};

struct ValidationReport {
  bool ok = true;
  std::vector<ValidationIssue> issues;
  std::string summary() const;
};

/// Checks history/boundary compatibility at t = 0 and the consistency of
/// the supplied derivatives df_dv, df_dz, dg_dv against central finite
/// differences at sample_count random points.
ValidationReport validate(const ProblemSpec& spec, int sample_count, unsigned seed = 20240801);

}  // namespace dsfem
