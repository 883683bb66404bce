#include "dsfem/fe_space.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

namespace dsfem {

namespace {

// Local node indices lying on a facet, ordered from the facet's first
// vertex to its second. Matches the reference_nodes enumeration.
std::vector<int> facet_local_nodes(ElementKind kind, int p, int local_facet) {
  std::vector<int> nodes;
  if (kind == ElementKind::Segment) {
    nodes.push_back(local_facet == 0 ? 0 : p);
    return nodes;
  }
  auto idx = [p](int i, int j) {
    // Lexicographic (j, i) enumeration offset.
    int off = 0;
    for (int jj = 0; jj < j; ++jj) off += p + 1 - jj;
    return off + i;
  };
  switch (local_facet) {
    case 0:  // v0 -> v1: j = 0
      for (int i = 0; i <= p; ++i) nodes.push_back(idx(i, 0));
      break;
    case 1:  // v1 -> v2: i + j = p
      for (int j = 0; j <= p; ++j) nodes.push_back(idx(p - j, j));
      break;
    case 2:  // v2 -> v0: i = 0
      for (int j = p; j >= 0; --j) nodes.push_back(idx(0, j));
      break;
    default:
      throw std::invalid_argument("facet_local_nodes: bad facet");
  }
  return nodes;
}

void renumber_lexicographic(FESpace& s) {
  std::vector<int> order(s.n_dofs);
  std::iota(order.begin(), order.end(), 0);
  const double tol = 1e-12;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const Pt& pa = s.dof_coords[a];
    const Pt& pb = s.dof_coords[b];
    if (std::abs(pa.y - pb.y) > tol) return pa.y < pb.y;
    return pa.x < pb.x;
  });
  std::vector<int> perm(s.n_dofs);  // old -> new
  for (int k = 0; k < s.n_dofs; ++k) perm[order[k]] = k;
  std::vector<Pt> coords(s.n_dofs);
  for (int old = 0; old < s.n_dofs; ++old) coords[perm[old]] = s.dof_coords[old];
  s.dof_coords = std::move(coords);
  for (auto& d : s.cell_dofs) d = perm[d];
}

void build_tabulation(FESpace& s) {
  const ElementKind kind = s.element_kind();
  s.quad = quadrature_rule(kind, 2 * s.degree + 2);
  const int nq = s.quad.size();
  const int ndl = s.ndof_local;
  s.phi.resize(nq * ndl);
  s.dphi_x.resize(nq * ndl);
  s.dphi_y.resize(nq * ndl);
  for (int q = 0; q < nq; ++q) {
    reference_basis(kind, s.degree, s.quad.points[q],
                    std::span(s.phi.data() + q * ndl, ndl),
                    std::span(s.dphi_x.data() + q * ndl, ndl),
                    std::span(s.dphi_y.data() + q * ndl, ndl));
  }
}

void build_pattern(FESpace& s) {
  const int ndl = s.ndof_local;
  const int nc = s.mesh.n_cells();
  std::vector<std::set<int>> row_cols(s.n_dofs);
  for (int c = 0; c < nc; ++c)
    for (int i = 0; i < ndl; ++i)
      for (int j = 0; j < ndl; ++j) row_cols[s.cell_dof(c, i)].insert(s.cell_dof(c, j));
  s.pattern_row_offsets.assign(s.n_dofs + 1, 0);
  for (int r = 0; r < s.n_dofs; ++r)
    s.pattern_row_offsets[r + 1] = s.pattern_row_offsets[r] + static_cast<int>(row_cols[r].size());
  s.pattern_cols.clear();
  s.pattern_cols.reserve(s.pattern_row_offsets.back());
  for (int r = 0; r < s.n_dofs; ++r)
    s.pattern_cols.insert(s.pattern_cols.end(), row_cols[r].begin(), row_cols[r].end());

  s.scatter_map.resize(static_cast<size_t>(nc) * ndl * ndl);
  for (int c = 0; c < nc; ++c) {
    for (int i = 0; i < ndl; ++i) {
      int r = s.cell_dof(c, i);
      const int* begin = s.pattern_cols.data() + s.pattern_row_offsets[r];
      const int* end = s.pattern_cols.data() + s.pattern_row_offsets[r + 1];
      for (int j = 0; j < ndl; ++j) {
        const int* it = std::lower_bound(begin, end, s.cell_dof(c, j));
        s.scatter_map[(static_cast<size_t>(c) * ndl + i) * ndl + j] =
            static_cast<int>(it - s.pattern_cols.data());
      }
    }
  }
}

}  // namespace

FESpace build_space(Mesh mesh, int degree) {
  if (degree < 1 || degree > kMaxDegree)
    throw std::invalid_argument("build_space: unsupported degree");
  FESpace s;
  s.mesh = std::move(mesh);
  s.degree = degree;
  const ElementKind kind = s.element_kind();
  const int p = degree;
  s.ndof_local = basis_count(kind, p);
  const int nc = s.mesh.n_cells();
  s.cell_dofs.assign(static_cast<size_t>(nc) * s.ndof_local, -1);

  const auto ref_nodes = reference_nodes(kind, p);
  auto node_coord = [&](int cell, int local) {
    return cell_geometry(s.mesh, cell).map(ref_nodes[local]);
  };

  if (s.mesh.dim == 1) {
    // Vertex DOFs first, then p-1 interior DOFs per cell.
    int next = s.mesh.n_vertices();
    s.dof_coords.resize(next);
    for (int v = 0; v < s.mesh.n_vertices(); ++v) s.dof_coords[v] = s.mesh.vertices[v];
    for (int c = 0; c < nc; ++c) {
      s.cell_dofs[c * s.ndof_local + 0] = s.mesh.cells[c][0];
      s.cell_dofs[c * s.ndof_local + p] = s.mesh.cells[c][1];
      for (int i = 1; i < p; ++i) {
        s.cell_dofs[c * s.ndof_local + i] = next++;
        s.dof_coords.push_back(node_coord(c, i));
      }
    }
    s.n_dofs = next;
  } else {
    // Entity-based numbering: vertices, then edges (oriented low vertex to
    // high vertex), then cell interiors. Shared edge DOFs coincide, which
    // gives C0 conformity.
    int next = s.mesh.n_vertices();
    s.dof_coords.resize(next);
    for (int v = 0; v < s.mesh.n_vertices(); ++v) s.dof_coords[v] = s.mesh.vertices[v];
    std::map<std::pair<int, int>, int> edge_offset;
    for (int c = 0; c < nc; ++c) {
      // Vertex nodes: local indices of barycentric corners.
      auto locals0 = facet_local_nodes(kind, p, 0);
      s.cell_dofs[c * s.ndof_local + locals0.front()] = s.mesh.cells[c][0];
      s.cell_dofs[c * s.ndof_local + locals0.back()] = s.mesh.cells[c][1];
      auto locals1 = facet_local_nodes(kind, p, 1);
      s.cell_dofs[c * s.ndof_local + locals1.back()] = s.mesh.cells[c][2];
      // Edge nodes.
      for (int lf = 0; lf < 3; ++lf) {
        auto fv = s.mesh.facet_vertices(c, lf);
        auto key = std::minmax(fv[0], fv[1]);
        auto [it, inserted] = edge_offset.try_emplace({key.first, key.second}, next);
        if (inserted) {
          next += p - 1;
          s.dof_coords.resize(next);
        }
        auto locals = facet_local_nodes(kind, p, lf);
        for (int k = 1; k < p; ++k) {
          // Edge interior nodes are stored from the lower to the higher
          // global vertex; flip when this cell walks the edge backwards.
          int slot = fv[0] < fv[1] ? k - 1 : p - 1 - k;
          int g = it->second + slot;
          s.cell_dofs[c * s.ndof_local + locals[k]] = g;
          s.dof_coords[g] = node_coord(c, locals[k]);
        }
      }
      // Interior nodes.
      for (int l = 0; l < s.ndof_local; ++l) {
        if (s.cell_dofs[c * s.ndof_local + l] >= 0) continue;
        s.cell_dofs[c * s.ndof_local + l] = next++;
        s.dof_coords.push_back(node_coord(c, l));
      }
    }
    s.n_dofs = next;
  }

  renumber_lexicographic(s);

  // Boundary DOFs: union of the facet nodes of all boundary facets.
  s.is_boundary_dof.assign(s.n_dofs, 0);
  for (const auto& bf : s.mesh.boundary_facets) {
    for (int l : facet_local_nodes(kind, p, bf.local_facet))
      s.is_boundary_dof[s.cell_dof(bf.cell, l)] = 1;
  }
  for (int d = 0; d < s.n_dofs; ++d)
    if (s.is_boundary_dof[d]) s.boundary_dofs.push_back(d);

  build_tabulation(s);
  build_pattern(s);
  return s;
}

CoefVec interpolate(const FESpace& space, const SpaceTimeFn& f, double t) {
  CoefVec u(space.n_dofs);
  for (int d = 0; d < space.n_dofs; ++d) {
    u[d] = f(space.dof_coords[d], t);
    if (!std::isfinite(u[d])) {
      std::ostringstream msg;
      msg << "interpolate: non-finite value at node (" << space.dof_coords[d].x << ", "
          << space.dof_coords[d].y << "), t = " << t;
      throw std::runtime_error(msg.str());
    }
  }
  return u;
}

FEValue evaluate_fe(const FESpace& space, const CoefVec& coeffs, int cell, Pt ref_point) {
  if (cell < 0 || cell >= space.mesh.n_cells())
    throw std::invalid_argument("evaluate_fe: cell index out of range");
  if (static_cast<int>(coeffs.size()) != space.n_dofs)
    throw std::invalid_argument("evaluate_fe: coefficient size mismatch");
  const int ndl = space.ndof_local;
  std::vector<double> vals(ndl), gx(ndl), gy(ndl);
  reference_basis(space.element_kind(), space.degree, ref_point, vals, gx, gy);
  CellGeometry geom = cell_geometry(space.mesh, cell);
  FEValue out{0.0, {0.0, 0.0}};
  Pt ref_grad{0.0, 0.0};
  for (int i = 0; i < ndl; ++i) {
    double c = coeffs[space.cell_dof(cell, i)];
    out.value += c * vals[i];
    ref_grad.x += c * gx[i];
    if (space.mesh.dim == 2) ref_grad.y += c * gy[i];
  }
  out.gradient = geom.grad_to_physical(ref_grad);
  return out;
}

}  // namespace dsfem
