#pragma once

#include <vector>

#include "dsfem/basis.hpp"
#include "dsfem/mesh.hpp"

namespace dsfem {

struct QuadratureRule {
  std::vector<Pt> points;
  std::vector<double> weights;
  int size() const { return static_cast<int>(points.size()); }
};

/// Gauss-Legendre nodes and weights on [0, 1].
QuadratureRule gauss_legendre_01(int n_points);

/// Rule exact for all polynomials of total degree <= exactness_degree on
/// the reference simplex. Segments use Gauss-Legendre; triangles use the
/// conical product of two Gauss rules, so all weights are positive.
QuadratureRule quadrature_rule(ElementKind kind, int exactness_degree);

}  // namespace dsfem
