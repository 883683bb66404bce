#include "dsfem/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <stdexcept>
#include <utility>

namespace dsfem {

namespace {

double dist(Pt a, Pt b) { return std::hypot(a.x - b.x, a.y - b.y); }

void check_cell_index(const Mesh& mesh, int cell) {
  if (cell < 0 || cell >= mesh.n_cells()) throw std::invalid_argument("mesh: cell index out of range");
}

}  // namespace

double Mesh::cell_measure(int cell) const {
  check_cell_index(*this, cell);
  const auto& c = cells[cell];
  if (dim == 1) return vertices[c[1]].x - vertices[c[0]].x;
  Pt a = vertices[c[0]], b = vertices[c[1]], d = vertices[c[2]];
  return 0.5 * ((b.x - a.x) * (d.y - a.y) - (b.y - a.y) * (d.x - a.x));
}

double Mesh::cell_diameter(int cell) const {
  check_cell_index(*this, cell);
  const auto& c = cells[cell];
  if (dim == 1) return vertices[c[1]].x - vertices[c[0]].x;
  double d01 = dist(vertices[c[0]], vertices[c[1]]);
  double d12 = dist(vertices[c[1]], vertices[c[2]]);
  double d20 = dist(vertices[c[2]], vertices[c[0]]);
  return std::max({d01, d12, d20});
}

Pt Mesh::cell_centroid(int cell) const {
  check_cell_index(*this, cell);
  const auto& c = cells[cell];
  int nv = vertices_per_cell();
  Pt g;
  for (int i = 0; i < nv; ++i) {
    g.x += vertices[c[i]].x / nv;
    g.y += vertices[c[i]].y / nv;
  }
  return g;
}

std::array<int, 2> Mesh::facet_vertices(int cell, int local_facet) const {
  check_cell_index(*this, cell);
  const auto& c = cells[cell];
  if (dim == 1) {
    if (local_facet == 0) return {c[0], c[0]};
    if (local_facet == 1) return {c[1], c[1]};
  } else {
    if (local_facet == 0) return {c[0], c[1]};
    if (local_facet == 1) return {c[1], c[2]};
    if (local_facet == 2) return {c[2], c[0]};
  }
  throw std::invalid_argument("mesh: local facet index out of range");
}

Mesh build_interval_mesh(double a, double b, int n_cells) {
  if (n_cells < 1) throw std::invalid_argument("build_interval_mesh: n_cells must be positive");
  if (!(a < b)) throw std::invalid_argument("build_interval_mesh: requires a < b");
  Mesh mesh;
  mesh.dim = 1;
  mesh.vertices.resize(n_cells + 1);
  for (int i = 0; i <= n_cells; ++i) {
    double s = static_cast<double>(i) / n_cells;
    mesh.vertices[i] = {a + s * (b - a), 0.0};
  }
  mesh.vertices[n_cells] = {b, 0.0};
  mesh.cells.resize(n_cells);
  for (int i = 0; i < n_cells; ++i) mesh.cells[i] = {i, i + 1, -1};
  mesh.boundary_facets = {{0, 0, {-1.0, 0.0}}, {n_cells - 1, 1, {1.0, 0.0}}};
  mesh.h = 0.0;
  for (int i = 0; i < n_cells; ++i) {
    double len = mesh.cell_measure(i);
    if (!(len > 0.0)) throw std::invalid_argument("build_interval_mesh: degenerate cell");
    mesh.h = std::max(mesh.h, len);
  }
  return mesh;
}

Mesh build_unit_square_tri_mesh(int n) {
  if (n < 1) throw std::invalid_argument("build_unit_square_tri_mesh: n must be positive");
  Mesh mesh;
  mesh.dim = 2;
  mesh.vertices.resize((n + 1) * (n + 1));
  auto vid = [n](int i, int j) { return j * (n + 1) + i; };
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i)
      mesh.vertices[vid(i, j)] = {static_cast<double>(i) / n, static_cast<double>(j) / n};

  mesh.cells.reserve(2 * n * n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      int v00 = vid(i, j), v10 = vid(i + 1, j), v01 = vid(i, j + 1), v11 = vid(i + 1, j + 1);
      // Both triangles CCW, diagonal v00 -> v11 everywhere.
      mesh.cells.push_back({v00, v10, v11});
      mesh.cells.push_back({v00, v11, v01});
    }
  }

  // A facet is a boundary facet iff it occurs in exactly one cell.
  std::map<std::pair<int, int>, std::vector<std::pair<int, int>>> facet_cells;
  for (int c = 0; c < mesh.n_cells(); ++c) {
    for (int lf = 0; lf < 3; ++lf) {
      auto fv = mesh.facet_vertices(c, lf);
      auto key = std::minmax(fv[0], fv[1]);
      facet_cells[{key.first, key.second}].push_back({c, lf});
    }
  }
  for (int c = 0; c < mesh.n_cells(); ++c) {
    for (int lf = 0; lf < 3; ++lf) {
      auto fv = mesh.facet_vertices(c, lf);
      auto key = std::minmax(fv[0], fv[1]);
      if (facet_cells[{key.first, key.second}].size() != 1) continue;
      Pt a = mesh.vertices[fv[0]], b = mesh.vertices[fv[1]];
      double len = dist(a, b);
      // CCW cells: rotating the facet tangent by -90 degrees points outward.
      Pt normal = {(b.y - a.y) / len, -(b.x - a.x) / len};
      mesh.boundary_facets.push_back({c, lf, normal});
    }
  }

  mesh.h = 0.0;
  for (int c = 0; c < mesh.n_cells(); ++c) {
    if (!(mesh.cell_measure(c) > 0.0))
      throw std::invalid_argument("build_unit_square_tri_mesh: degenerate cell");
    mesh.h = std::max(mesh.h, mesh.cell_diameter(c));
  }
  return mesh;
}

Pt CellGeometry::map(Pt ref) const {
  if (dim == 1) return {origin.x + J[0][0] * ref.x, 0.0};
  return {origin.x + J[0][0] * ref.x + J[0][1] * ref.y,
          origin.y + J[1][0] * ref.x + J[1][1] * ref.y};
}

Pt CellGeometry::grad_to_physical(Pt ref_grad) const {
  if (dim == 1) return {ref_grad.x * Jinv[0][0], 0.0};
  // J^{-T} * ref_grad
  return {Jinv[0][0] * ref_grad.x + Jinv[1][0] * ref_grad.y,
          Jinv[0][1] * ref_grad.x + Jinv[1][1] * ref_grad.y};
}

CellGeometry cell_geometry(const Mesh& mesh, int cell) {
  check_cell_index(mesh, cell);
  const auto& c = mesh.cells[cell];
  CellGeometry g{};
  g.dim = mesh.dim;
  g.origin = mesh.vertices[c[0]];
  if (mesh.dim == 1) {
    g.J[0][0] = mesh.vertices[c[1]].x - mesh.vertices[c[0]].x;
    g.det_jacobian = g.J[0][0];
    if (!(g.det_jacobian > 0.0)) throw std::invalid_argument("cell_geometry: degenerate cell");
    g.Jinv[0][0] = 1.0 / g.J[0][0];
  } else {
    Pt a = mesh.vertices[c[0]], b = mesh.vertices[c[1]], d = mesh.vertices[c[2]];
    g.J[0][0] = b.x - a.x;
    g.J[1][0] = b.y - a.y;
    g.J[0][1] = d.x - a.x;
    g.J[1][1] = d.y - a.y;
    g.det_jacobian = g.J[0][0] * g.J[1][1] - g.J[0][1] * g.J[1][0];
    if (!(std::abs(g.det_jacobian) > 0.0))
      throw std::invalid_argument("cell_geometry: degenerate cell");
    g.Jinv[0][0] = g.J[1][1] / g.det_jacobian;
    g.Jinv[0][1] = -g.J[0][1] / g.det_jacobian;
    g.Jinv[1][0] = -g.J[1][0] / g.det_jacobian;
    g.Jinv[1][1] = g.J[0][0] / g.det_jacobian;
  }
  return g;
}

void dump_mesh(const Mesh& mesh, std::ostream& os) {
  os << mesh.dim << ' ' << mesh.n_vertices() << ' ' << mesh.n_cells() << '\n';
  for (const auto& v : mesh.vertices) {
    os << v.x;
    if (mesh.dim == 2) os << ' ' << v.y;
    os << '\n';
  }
  for (const auto& c : mesh.cells) {
    os << c[0] << ' ' << c[1];
    if (mesh.dim == 2) os << ' ' << c[2];
    os << '\n';
  }
}

}  // namespace dsfem
