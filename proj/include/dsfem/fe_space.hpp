#pragma once

#include <functional>
#include <vector>

#include "dsfem/basis.hpp"
#include "dsfem/mesh.hpp"
#include "dsfem/quadrature.hpp"
#include "dsfem/sparse.hpp"

namespace dsfem {

using SpaceTimeFn = std::function<double(Pt, double)>;

/// Conforming Lagrange space of degree 1..5 on a simplicial mesh.
/// DOFs are numbered lexicographically by coordinate, which keeps the
/// matrix bandwidth small on structured meshes. Immutable once built.
struct FESpace {
  Mesh mesh;
  int degree = 1;
  int n_dofs = 0;
  int ndof_local = 0;
  std::vector<Pt> dof_coords;
  std::vector<int> cell_dofs;  // flattened [cell * ndof_local + i]
  std::vector<int> boundary_dofs;
  std::vector<char> is_boundary_dof;

  // Default volume rule (exactness 2p+2) with tabulated basis values and
  // reference gradients at its points: phi[q * ndof_local + i].
  QuadratureRule quad;
  std::vector<double> phi;
  std::vector<double> dphi_x;
  std::vector<double> dphi_y;

  // Shared CSR pattern of all matrices assembled on this space, plus the
  // value slot of each (cell, i, j) local contribution.
  std::vector<int> pattern_row_offsets;
  std::vector<int> pattern_cols;
  std::vector<int> scatter_map;  // [cell * ndl^2 + i * ndl + j] -> CSR slot

  ElementKind element_kind() const {
    return mesh.dim == 1 ? ElementKind::Segment : ElementKind::Triangle;
  }
  int cell_dof(int cell, int i) const { return cell_dofs[cell * ndof_local + i]; }
};

FESpace build_space(Mesh mesh, int degree);

/// Nodal interpolation: coefficient i = f(dof_coords[i], t).
CoefVec interpolate(const FESpace& space, const SpaceTimeFn& f, double t);

struct FEValue {
  double value;
  Pt gradient;
};

/// Value and physical gradient of the FE function at a reference point
/// of the given cell.
FEValue evaluate_fe(const FESpace& space, const CoefVec& coeffs, int cell, Pt ref_point);

}  // namespace dsfem
