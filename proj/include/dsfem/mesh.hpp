#pragma once

#include <array>
#include <iosfwd>
#include <vector>

namespace dsfem {

struct Pt {
  double x = 0.0;
  double y = 0.0;
};

struct BoundaryFacet {
  int cell;
  int local_facet;
  Pt normal;  // outward unit normal
};

/// Simplicial mesh of an interval (dim 1) or a plane domain (dim 2).
/// Immutable after construction; safe to share across threads.
struct Mesh {
  int dim = 0;
  std::vector<Pt> vertices;
  // Vertex indices per cell; segments use the first two slots.
  std::vector<std::array<int, 3>> cells;
  std::vector<BoundaryFacet> boundary_facets;
  double h = 0.0;  // max cell diameter

  int n_cells() const { return static_cast<int>(cells.size()); }
  int n_vertices() const { return static_cast<int>(vertices.size()); }
  int vertices_per_cell() const { return dim + 1; }
  int facets_per_cell() const { return dim == 1 ? 2 : 3; }

  double cell_measure(int cell) const;
  double cell_diameter(int cell) const;
  Pt cell_centroid(int cell) const;
  /// Vertex indices of a local facet, ordered along the facet.
  std::array<int, 2> facet_vertices(int cell, int local_facet) const;
};

/// Uniform partition of [a, b] into n_cells segments.
Mesh build_interval_mesh(double a, double b, int n_cells);

/// Structured triangulation of the unit square: n x n grid of squares,
/// each split into two right triangles along the same diagonal.
Mesh build_unit_square_tri_mesh(int n);

/// Affine map from the reference simplex ([0,1] or the unit right
/// triangle) to a physical cell.
struct CellGeometry {
  Pt origin;              // image of the reference origin
  double J[2][2];         // Jacobian columns = edge vectors
  double det_jacobian;    // signed in 2D, positive for CCW cells
  double Jinv[2][2];      // inverse Jacobian
  int dim;

  Pt map(Pt ref) const;
  /// Push a reference gradient to the physical cell: J^{-T} grad.
  Pt grad_to_physical(Pt ref_grad) const;
};

CellGeometry cell_geometry(const Mesh& mesh, int cell);

/// Plain-text dump: `dim n_vertices n_cells`, vertex coordinates, then
/// 0-based cell connectivity.
void dump_mesh(const Mesh& mesh, std::ostream& os);

}  // namespace dsfem
