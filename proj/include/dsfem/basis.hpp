#pragma once

#include <span>
#include <vector>

#include "dsfem/mesh.hpp"

namespace dsfem {

enum class ElementKind { Segment, Triangle };

constexpr int kMaxDegree = 5;

/// Number of Lagrange basis functions: p+1 on segments,
/// (p+1)(p+2)/2 on triangles.
int basis_count(ElementKind kind, int degree);

/// Equispaced interpolation nodes on the reference simplex, in the
/// ordering used by reference_basis and FESpace::cell_dofs.
std::vector<Pt> reference_nodes(ElementKind kind, int degree);

/// Values and reference gradients of all Lagrange basis functions at a
/// point of the reference simplex. Output spans must hold basis_count
/// entries; grad_y is ignored for segments (may be empty).
void reference_basis(ElementKind kind, int degree, Pt point, std::span<double> values,
                     std::span<double> grad_x, std::span<double> grad_y);

}  // namespace dsfem
