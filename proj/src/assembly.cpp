#include "dsfem/assembly.hpp"

#include <cmath>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace dsfem {

namespace {

// Runs fn(cell) over all cells. Exceptions thrown inside the parallel
// region are captured and rethrown after the loop joins.
template <class Fn>
void for_each_cell(ExecPolicy policy, int n_cells, const Fn& fn) {
#ifdef _OPENMP
  if (policy == ExecPolicy::Parallel) {
    std::exception_ptr err;
    std::mutex err_mutex;
#pragma omp parallel for schedule(static)
    for (int c = 0; c < n_cells; ++c) {
      try {
        fn(c);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!err) err = std::current_exception();
      }
    }
    if (err) std::rethrow_exception(err);
    return;
  }
#else
  (void)policy;
#endif
  for (int c = 0; c < n_cells; ++c) fn(c);
}

// Local cell matrices are staged per cell and scattered sequentially in
// cell order, so the accumulation order does not depend on threading.
SparseMatrix scatter_matrix(const FESpace& s, const std::vector<double>& local) {
  const int ndl = s.ndof_local;
  std::vector<double> values(s.pattern_cols.size(), 0.0);
  const size_t per_cell = static_cast<size_t>(ndl) * ndl;
  for (int c = 0; c < s.mesh.n_cells(); ++c) {
    const double* loc = local.data() + c * per_cell;
    const int* map = s.scatter_map.data() + c * per_cell;
    for (size_t k = 0; k < per_cell; ++k) values[map[k]] += loc[k];
  }
  return SparseMatrix(s.n_dofs, s.n_dofs, s.pattern_row_offsets, s.pattern_cols,
                      std::move(values));
}

CoefVec scatter_vector(const FESpace& s, const std::vector<double>& local) {
  const int ndl = s.ndof_local;
  CoefVec b(s.n_dofs, 0.0);
  for (int c = 0; c < s.mesh.n_cells(); ++c)
    for (int i = 0; i < ndl; ++i) b[s.cell_dof(c, i)] += local[c * ndl + i];
  return b;
}

[[noreturn]] void throw_assembly_error(const char* what, int cell, Pt x) {
  std::ostringstream msg;
  msg << what << " on cell " << cell << " at (" << x.x << ", " << x.y << ")";
  throw std::runtime_error(msg.str());
}

}  // namespace

SparseMatrix assemble_mass(const FESpace& space, ExecPolicy policy) {
  const int ndl = space.ndof_local;
  const int nq = space.quad.size();
  std::vector<double> local(static_cast<size_t>(space.mesh.n_cells()) * ndl * ndl, 0.0);
  for_each_cell(policy, space.mesh.n_cells(), [&](int c) {
    CellGeometry geom = cell_geometry(space.mesh, c);
    double scale = std::abs(geom.det_jacobian);
    double* loc = local.data() + static_cast<size_t>(c) * ndl * ndl;
    for (int q = 0; q < nq; ++q) {
      const double* phi = space.phi.data() + q * ndl;
      double wq = space.quad.weights[q] * scale;
      // Mirror the upper triangle so symmetry is exact in floating point.
      for (int i = 0; i < ndl; ++i) {
        for (int j = i; j < ndl; ++j) {
          double v = wq * (phi[i] * phi[j]);
          loc[i * ndl + j] += v;
          if (i != j) loc[j * ndl + i] += v;
        }
      }
    }
  });
  return scatter_matrix(space, local);
}

SparseMatrix assemble_stiffness(const FESpace& space, ExecPolicy policy) {
  const int ndl = space.ndof_local;
  const int nq = space.quad.size();
  const int dim = space.mesh.dim;
  std::vector<double> local(static_cast<size_t>(space.mesh.n_cells()) * ndl * ndl, 0.0);
  for_each_cell(policy, space.mesh.n_cells(), [&](int c) {
    CellGeometry geom = cell_geometry(space.mesh, c);
    double scale = std::abs(geom.det_jacobian);
    double* loc = local.data() + static_cast<size_t>(c) * ndl * ndl;
    std::vector<double> gx(ndl), gy(ndl);
    for (int q = 0; q < nq; ++q) {
      for (int i = 0; i < ndl; ++i) {
        Pt g = geom.grad_to_physical({space.dphi_x[q * ndl + i], space.dphi_y[q * ndl + i]});
        gx[i] = g.x;
        gy[i] = g.y;
      }
      double wq = space.quad.weights[q] * scale;
      for (int i = 0; i < ndl; ++i) {
        for (int j = i; j < ndl; ++j) {
          double v = gx[i] * gx[j];
          if (dim == 2) v += gy[i] * gy[j];
          v *= wq;
          loc[i * ndl + j] += v;
          if (i != j) loc[j * ndl + i] += v;
        }
      }
    }
  });
  return scatter_matrix(space, local);
}

SparseMatrix assemble_combined(const FESpace& space, double beta, ExecPolicy policy) {
  if (!(beta > 0.0)) throw std::invalid_argument("assemble_combined: beta must be positive");
  return csr_add(1.0, assemble_mass(space, policy), beta, assemble_stiffness(space, policy));
}

SparseMatrix assemble_weighted_mass(const FESpace& space, const CellQuadFn& weight,
                                    ExecPolicy policy) {
  const int ndl = space.ndof_local;
  const int nq = space.quad.size();
  std::vector<double> local(static_cast<size_t>(space.mesh.n_cells()) * ndl * ndl, 0.0);
  for_each_cell(policy, space.mesh.n_cells(), [&](int c) {
    CellGeometry geom = cell_geometry(space.mesh, c);
    double scale = std::abs(geom.det_jacobian);
    double* loc = local.data() + static_cast<size_t>(c) * ndl * ndl;
    for (int q = 0; q < nq; ++q) {
      Pt x = geom.map(space.quad.points[q]);
      double w = weight(c, q, x);
      if (!std::isfinite(w)) throw_assembly_error("assemble_weighted_mass: non-finite weight", c, x);
      const double* phi = space.phi.data() + q * ndl;
      double wq = space.quad.weights[q] * scale * w;
      for (int i = 0; i < ndl; ++i) {
        for (int j = i; j < ndl; ++j) {
          double v = wq * (phi[i] * phi[j]);
          loc[i * ndl + j] += v;
          if (i != j) loc[j * ndl + i] += v;
        }
      }
    }
  });
  return scatter_matrix(space, local);
}

SparseMatrix assemble_weighted_mass(const FESpace& space, const PointFn& weight,
                                    ExecPolicy policy) {
  return assemble_weighted_mass(
      space, [&weight](int, int, Pt x) { return weight(x); }, policy);
}

CoefVec assemble_load(const FESpace& space, const CellQuadFn& source, ExecPolicy policy) {
  const int ndl = space.ndof_local;
  const int nq = space.quad.size();
  std::vector<double> local(static_cast<size_t>(space.mesh.n_cells()) * ndl, 0.0);
  for_each_cell(policy, space.mesh.n_cells(), [&](int c) {
    CellGeometry geom = cell_geometry(space.mesh, c);
    double scale = std::abs(geom.det_jacobian);
    double* loc = local.data() + static_cast<size_t>(c) * ndl;
    for (int q = 0; q < nq; ++q) {
      Pt x = geom.map(space.quad.points[q]);
      double sv = source(c, q, x);
      if (!std::isfinite(sv)) throw_assembly_error("assemble_load: non-finite source", c, x);
      const double* phi = space.phi.data() + q * ndl;
      double wq = space.quad.weights[q] * scale * sv;
      for (int i = 0; i < ndl; ++i) loc[i] += wq * phi[i];
    }
  });
  return scatter_vector(space, local);
}

CoefVec assemble_load(const FESpace& space, const PointFn& source, ExecPolicy policy) {
  return assemble_load(
      space, [&source](int, int, Pt x) { return source(x); }, policy);
}

double green_identity_residual(const FESpace& space, const CoefVec& u, const CoefVec& w,
                               const PointFn& laplacian_u) {
  const int ndl = space.ndof_local;
  const int nq = space.quad.size();

  // Volume terms (laplacian_u, w)_0 and a(u, w), one quadrature pass.
  double volume_lap = 0.0;
  double volume_grad = 0.0;
  for (int c = 0; c < space.mesh.n_cells(); ++c) {
    CellGeometry geom = cell_geometry(space.mesh, c);
    double scale = std::abs(geom.det_jacobian);
    for (int q = 0; q < nq; ++q) {
      double w_val = 0.0;
      Pt gu{0.0, 0.0}, gw{0.0, 0.0};
      for (int i = 0; i < ndl; ++i) {
        int d = space.cell_dof(c, i);
        w_val += w[d] * space.phi[q * ndl + i];
        gu.x += u[d] * space.dphi_x[q * ndl + i];
        gw.x += w[d] * space.dphi_x[q * ndl + i];
        gu.y += u[d] * space.dphi_y[q * ndl + i];
        gw.y += w[d] * space.dphi_y[q * ndl + i];
      }
      Pt pgu = geom.grad_to_physical(gu);
      Pt pgw = geom.grad_to_physical(gw);
      Pt x = geom.map(space.quad.points[q]);
      double wq = space.quad.weights[q] * scale;
      volume_lap += wq * laplacian_u(x) * w_val;
      volume_grad += wq * (pgu.x * pgw.x + pgu.y * pgw.y);
    }
  }

  // Boundary term int_G (grad u . n) w dG. In 1D the facet integral is a
  // point evaluation.
  double boundary = 0.0;
  if (space.mesh.dim == 1) {
    for (const auto& bf : space.mesh.boundary_facets) {
      Pt ref = bf.local_facet == 0 ? Pt{0.0, 0.0} : Pt{1.0, 0.0};
      FEValue fu = evaluate_fe(space, u, bf.cell, ref);
      FEValue fw = evaluate_fe(space, w, bf.cell, ref);
      boundary += fu.gradient.x * bf.normal.x * fw.value;
    }
  } else {
    QuadratureRule line = gauss_legendre_01(space.degree + 1);
    // Reference edge endpoints per local facet.
    const Pt ref_ends[3][2] = {{{0, 0}, {1, 0}}, {{1, 0}, {0, 1}}, {{0, 1}, {0, 0}}};
    for (const auto& bf : space.mesh.boundary_facets) {
      auto fv = space.mesh.facet_vertices(bf.cell, bf.local_facet);
      Pt a = space.mesh.vertices[fv[0]], b = space.mesh.vertices[fv[1]];
      double len = std::hypot(b.x - a.x, b.y - a.y);
      Pt r0 = ref_ends[bf.local_facet][0], r1 = ref_ends[bf.local_facet][1];
      for (int k = 0; k < line.size(); ++k) {
        double s = line.points[k].x;
        Pt ref{r0.x + s * (r1.x - r0.x), r0.y + s * (r1.y - r0.y)};
        FEValue fu = evaluate_fe(space, u, bf.cell, ref);
        FEValue fw = evaluate_fe(space, w, bf.cell, ref);
        double flux = fu.gradient.x * bf.normal.x + fu.gradient.y * bf.normal.y;
        boundary += line.weights[k] * len * flux * fw.value;
      }
    }
  }
  return std::abs(volume_lap - (boundary - volume_grad));
}

}  // namespace dsfem
