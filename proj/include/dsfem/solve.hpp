#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "dsfem/sparse.hpp"

namespace dsfem {

enum class SolveMethod { Direct, ConjugateGradient };

struct SolveConfig {
  SolveMethod method = SolveMethod::Direct;
  double rel_tol = 1e-12;
  int max_iters = 0;  // 0 means 10 * n
};

struct SolveFailure : std::runtime_error {
  SolveFailure(const std::string& what, double residual_, int iters_)
      : std::runtime_error(what), residual(residual_), iters(iters_) {}
  double residual;
  int iters;
};

/// Solve A x = b to || A x - b || <= rel_tol * || b ||.
///
/// Direct: reverse Cuthill-McKee reordering followed by banded LU with
/// partial pivoting and iterative refinement. Works for any nonsingular
/// matrix whose reordered band is moderate (true for FE matrices on the
/// structured meshes built here). ConjugateGradient: Jacobi-preconditioned
/// CG, requires symmetric positive definite A.
CoefVec solve(const SparseMatrix& A, const CoefVec& b, const SolveConfig& config = {});

/// Reverse Cuthill-McKee ordering of the matrix graph (new order of rows).
std::vector<int> rcm_ordering(const SparseMatrix& A);

}  // namespace dsfem
