// Benchmark of the cell-parallel kernels against their serial reference.
// Both paths must agree exactly; speedup depends on OMP_NUM_THREADS.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "dsfem/analysis.hpp"
#include "dsfem/assembly.hpp"
#include "dsfem/scheme.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace dsfem;

namespace {

double seconds_of(const std::function<void()>& fn, int reps) {
  auto start = std::chrono::steady_clock::now();
  for (int r = 0; r < reps; ++r) fn();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() / reps;
}

double max_abs_diff(const SparseMatrix& a, const SparseMatrix& b) {
  double worst = 0.0;
  auto va = a.values(), vb = b.values();
  for (int k = 0; k < a.nnz(); ++k) worst = std::max(worst, std::abs(va[k] - vb[k]));
  return worst;
}

double max_abs_diff(const CoefVec& a, const CoefVec& b) {
  double worst = 0.0;
  for (size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

void report(const std::string& name, double serial_s, double parallel_s, double diff) {
  std::printf("%-28s %10.4f ms %10.4f ms %7.2fx   max|diff| = %g\n", name.c_str(),
              1e3 * serial_s, 1e3 * parallel_s, serial_s / parallel_s, diff);
}

}  // namespace

int main(int argc, char** argv) {
  int n2d = argc > 1 ? std::atoi(argv[1]) : 32;
  int reps = argc > 2 ? std::atoi(argv[2]) : 3;
#ifdef _OPENMP
  std::printf("OpenMP enabled, max threads = %d\n", omp_get_max_threads());
#else
  std::printf("OpenMP not available; parallel policy falls back to serial\n");
#endif
  std::printf("2D mesh n = %d, degree 3, reps = %d\n\n", n2d, reps);
  std::printf("%-28s %13s %13s %9s\n", "kernel", "serial", "parallel", "speedup");

  FESpace space = build_space(build_unit_square_tri_mesh(n2d), 3);
  PointFn weight = [](Pt p) { return 1.0 + p.x * p.y + std::sin(3.0 * p.x); };
  PointFn source = [](Pt p) { return std::sin(2.0 * p.x) * std::cos(p.y); };

  {
    SparseMatrix ms = assemble_mass(space, ExecPolicy::Serial);
    SparseMatrix mp = assemble_mass(space, ExecPolicy::Parallel);
    report("assemble_mass",
           seconds_of([&] { assemble_mass(space, ExecPolicy::Serial); }, reps),
           seconds_of([&] { assemble_mass(space, ExecPolicy::Parallel); }, reps),
           max_abs_diff(ms, mp));
  }
  {
    SparseMatrix ks = assemble_stiffness(space, ExecPolicy::Serial);
    SparseMatrix kp = assemble_stiffness(space, ExecPolicy::Parallel);
    report("assemble_stiffness",
           seconds_of([&] { assemble_stiffness(space, ExecPolicy::Serial); }, reps),
           seconds_of([&] { assemble_stiffness(space, ExecPolicy::Parallel); }, reps),
           max_abs_diff(ks, kp));
  }
  {
    SparseMatrix ws = assemble_weighted_mass(space, weight, ExecPolicy::Serial);
    SparseMatrix wp = assemble_weighted_mass(space, weight, ExecPolicy::Parallel);
    report("assemble_weighted_mass",
           seconds_of([&] { assemble_weighted_mass(space, weight, ExecPolicy::Serial); }, reps),
           seconds_of([&] { assemble_weighted_mass(space, weight, ExecPolicy::Parallel); }, reps),
           max_abs_diff(ws, wp));
  }
  {
    CoefVec bs = assemble_load(space, source, ExecPolicy::Serial);
    CoefVec bp = assemble_load(space, source, ExecPolicy::Parallel);
    report("assemble_load",
           seconds_of([&] { assemble_load(space, source, ExecPolicy::Serial); }, reps),
           seconds_of([&] { assemble_load(space, source, ExecPolicy::Parallel); }, reps),
           max_abs_diff(bs, bp));
  }
  {
    // One implicit step of the delay scheme on the 2D benchmark problem:
    // covers history tabulation, weighted Jacobian assembly and the solve.
    ProblemSpec spec = example2();
    SchemeConfig cs = make_scheme_config(spec, 1.0 / 16);
    cs.startup = StartupMode::ExactSeed;
    SchemeConfig cp = cs;
    cs.exec = ExecPolicy::Serial;
    cp.exec = ExecPolicy::Parallel;
    StepState ss = make_step_state(space, spec, cs);
    StepState sp = make_step_state(space, spec, cp);
    NewtonResult rs, rp;
    double ts = seconds_of([&] { rs = newton_step_solve(ss, spec, cs); }, std::max(1, reps / 2));
    double tp = seconds_of([&] { rp = newton_step_solve(sp, spec, cp); }, std::max(1, reps / 2));
    report("newton_step (example2)", ts, tp, max_abs_diff(rs.solution, rp.solution));
  }
  return 0;
}
