#include "dsfem/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace dsfem {

namespace {

constexpr int kMaxGaussPoints = 64;

// Legendre P_n(x) and P_n'(x) by the three-term recurrence.
void legendre(int n, double x, double& value, double& deriv) {
  double p0 = 1.0, p1 = x;
  for (int k = 2; k <= n; ++k) {
    double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  value = n == 0 ? 1.0 : p1;
  deriv = n == 0 ? 0.0 : n * (x * p1 - p0) / (x * x - 1.0);
}

}  // namespace

QuadratureRule gauss_legendre_01(int n_points) {
  if (n_points < 1 || n_points > kMaxGaussPoints)
    throw std::invalid_argument("gauss_legendre_01: unsupported point count");
  QuadratureRule rule;
  rule.points.resize(n_points);
  rule.weights.resize(n_points);
  for (int i = 0; i < n_points; ++i) {
    // Newton iteration from the Chebyshev-like initial guess.
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n_points + 0.5));
    double v = 0.0, d = 1.0;
    for (int it = 0; it < 100; ++it) {
      legendre(n_points, x, v, d);
      double dx = v / d;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    legendre(n_points, x, v, d);
    double w = 2.0 / ((1.0 - x * x) * d * d);
    // Map [-1, 1] -> [0, 1]; fill from the right so points come out increasing.
    rule.points[n_points - 1 - i] = {0.5 * (x + 1.0), 0.0};
    rule.weights[n_points - 1 - i] = 0.5 * w;
  }
  return rule;
}

QuadratureRule quadrature_rule(ElementKind kind, int exactness_degree) {
  if (exactness_degree < 1) throw std::invalid_argument("quadrature_rule: exactness must be >= 1");
  if (kind == ElementKind::Segment) {
    int n = (exactness_degree + 2) / 2;  // 2n-1 >= exactness
    if (n > kMaxGaussPoints) throw std::invalid_argument("quadrature_rule: exactness unsupported");
    return gauss_legendre_01(n);
  }

  // Conical product for the reference triangle {x,y >= 0, x+y <= 1}:
  //   int_T f = int_0^1 int_0^1 f(u, v(1-u)) (1-u) dv du.
  // The u-integrand has degree exactness+1, the v-integrand degree exactness.
  int nu = (exactness_degree + 3) / 2;
  int nv = (exactness_degree + 2) / 2;
  if (nu > kMaxGaussPoints) throw std::invalid_argument("quadrature_rule: exactness unsupported");
  QuadratureRule gu = gauss_legendre_01(nu);
  QuadratureRule gv = gauss_legendre_01(nv);
  QuadratureRule rule;
  rule.points.reserve(nu * nv);
  rule.weights.reserve(nu * nv);
  for (int i = 0; i < nu; ++i) {
    double u = gu.points[i].x;
    for (int j = 0; j < nv; ++j) {
      double v = gv.points[j].x;
      rule.points.push_back({u, v * (1.0 - u)});
      rule.weights.push_back(gu.weights[i] * gv.weights[j] * (1.0 - u));
    }
  }
  return rule;
}

}  // namespace dsfem
