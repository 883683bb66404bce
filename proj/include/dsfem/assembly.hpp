#pragma once

#include <functional>

#include "dsfem/fe_space.hpp"
#include "dsfem/sparse.hpp"

namespace dsfem {

/// Execution policy for cell-parallel kernels. Serial is the reference
/// implementation; Parallel uses OpenMP when available. Both produce
/// bit-identical results: per-cell contributions are staged and reduced
/// in cell order regardless of the thread count.
enum class ExecPolicy { Serial, Parallel };

/// Pointwise callback with quadrature context: (cell, local point index,
/// physical point) -> value.
using CellQuadFn = std::function<double(int cell, int q, Pt x)>;
using PointFn = std::function<double(Pt)>;

/// Mass matrix M_ij = int phi_i phi_j.
SparseMatrix assemble_mass(const FESpace& space, ExecPolicy policy = ExecPolicy::Parallel);

/// Stiffness matrix K_ij = int grad phi_i . grad phi_j.
SparseMatrix assemble_stiffness(const FESpace& space, ExecPolicy policy = ExecPolicy::Parallel);

/// Combined operator M + beta * K; symmetric positive definite for beta > 0.
SparseMatrix assemble_combined(const FESpace& space, double beta,
                               ExecPolicy policy = ExecPolicy::Parallel);

/// Weighted mass matrix int w(x) phi_i phi_j with the weight evaluated at
/// quadrature points. Non-finite weights abort with the offending cell.
SparseMatrix assemble_weighted_mass(const FESpace& space, const CellQuadFn& weight,
                                    ExecPolicy policy = ExecPolicy::Parallel);
SparseMatrix assemble_weighted_mass(const FESpace& space, const PointFn& weight,
                                    ExecPolicy policy = ExecPolicy::Parallel);

/// Load vector b_i = int s(x) phi_i.
CoefVec assemble_load(const FESpace& space, const CellQuadFn& source,
                      ExecPolicy policy = ExecPolicy::Parallel);
CoefVec assemble_load(const FESpace& space, const PointFn& source,
                      ExecPolicy policy = ExecPolicy::Parallel);

/// | (laplacian_u, w)_0 - [ int_G (grad u . n) w dG - (grad u, grad w)_0 ] |
/// for FE functions u, w, with the Laplacian of u supplied analytically.
/// Vanishes (to quadrature accuracy) by the Green identity.
double green_identity_residual(const FESpace& space, const CoefVec& u, const CoefVec& w,
                               const PointFn& laplacian_u);

}  // namespace dsfem
