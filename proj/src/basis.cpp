#include "dsfem/basis.hpp"

#include <stdexcept>

namespace dsfem {

namespace {

constexpr double kInsideTol = 1e-12;

void check_degree(int degree) {
  if (degree < 1 || degree > kMaxDegree)
    throw std::invalid_argument("reference_basis: unsupported degree");
}

// One factor of the equispaced simplex Lagrange basis:
//   P_k(t) = prod_{r=0}^{k-1} (p*t - r) / (k - r),
// which is 1 at t = k/p and 0 at t = r/p for r < k.
double bary_factor(int p, int k, double t) {
  double v = 1.0;
  for (int r = 0; r < k; ++r) v *= (p * t - r) / (k - r);
  return v;
}

double bary_factor_deriv(int p, int k, double t) {
  double sum = 0.0;
  for (int s = 0; s < k; ++s) {
    double term = static_cast<double>(p) / (k - s);
    for (int r = 0; r < k; ++r) {
      if (r == s) continue;
      term *= (p * t - r) / (k - r);
    }
    sum += term;
  }
  return sum;
}

}  // namespace

int basis_count(ElementKind kind, int degree) {
  check_degree(degree);
  return kind == ElementKind::Segment ? degree + 1 : (degree + 1) * (degree + 2) / 2;
}

std::vector<Pt> reference_nodes(ElementKind kind, int degree) {
  check_degree(degree);
  std::vector<Pt> nodes;
  if (kind == ElementKind::Segment) {
    for (int i = 0; i <= degree; ++i) nodes.push_back({static_cast<double>(i) / degree, 0.0});
  } else {
    for (int j = 0; j <= degree; ++j)
      for (int i = 0; i <= degree - j; ++i)
        nodes.push_back({static_cast<double>(i) / degree, static_cast<double>(j) / degree});
  }
  return nodes;
}

void reference_basis(ElementKind kind, int degree, Pt point, std::span<double> values,
                     std::span<double> grad_x, std::span<double> grad_y) {
  check_degree(degree);
  const int n = basis_count(kind, degree);
  if (static_cast<int>(values.size()) < n || static_cast<int>(grad_x.size()) < n)
    throw std::invalid_argument("reference_basis: output spans too small");
  const int p = degree;

  if (kind == ElementKind::Segment) {
    if (point.x < -kInsideTol || point.x > 1.0 + kInsideTol)
      throw std::invalid_argument("reference_basis: point outside reference segment");
    // Barycentric coordinates (1-x, x); node i has indices (p-i, i).
    double l0 = 1.0 - point.x, l1 = point.x;
    for (int i = 0; i <= p; ++i) {
      double a = bary_factor(p, p - i, l0);
      double b = bary_factor(p, i, l1);
      double da = bary_factor_deriv(p, p - i, l0);
      double db = bary_factor_deriv(p, i, l1);
      values[i] = a * b;
      grad_x[i] = -da * b + a * db;
    }
    return;
  }

  if (point.x < -kInsideTol || point.y < -kInsideTol || point.x + point.y > 1.0 + kInsideTol)
    throw std::invalid_argument("reference_basis: point outside reference triangle");
  if (static_cast<int>(grad_y.size()) < n)
    throw std::invalid_argument("reference_basis: output spans too small");
  // Barycentric coordinates (1-x-y, x, y); node (i, j) has indices
  // (p-i-j, i, j). grad l0 = (-1,-1), grad l1 = (1,0), grad l2 = (0,1).
  double l0 = 1.0 - point.x - point.y, l1 = point.x, l2 = point.y;
  int idx = 0;
  for (int j = 0; j <= p; ++j) {
    for (int i = 0; i <= p - j; ++i, ++idx) {
      int a = p - i - j;
      double f0 = bary_factor(p, a, l0);
      double f1 = bary_factor(p, i, l1);
      double f2 = bary_factor(p, j, l2);
      double d0 = bary_factor_deriv(p, a, l0);
      double d1 = bary_factor_deriv(p, i, l1);
      double d2 = bary_factor_deriv(p, j, l2);
      values[idx] = f0 * f1 * f2;
      grad_x[idx] = -d0 * f1 * f2 + f0 * d1 * f2;
      grad_y[idx] = -d0 * f1 * f2 + f0 * f1 * d2;
    }
  }
}

}  // namespace dsfem
