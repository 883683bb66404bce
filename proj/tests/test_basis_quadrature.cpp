#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <random>
#include <vector>

#include "dsfem/basis.hpp"
#include "dsfem/quadrature.hpp"

using namespace dsfem;

namespace {

// int_T x^a y^b over the reference triangle = a! b! / (a + b + 2)!.
double triangle_monomial_integral(int a, int b) {
  auto factorial = [](int n) {
    double f = 1.0;
    for (int k = 2; k <= n; ++k) f *= k;
    return f;
  };
  return factorial(a) * factorial(b) / factorial(a + b + 2);
}

double integrate(const QuadratureRule& rule, int a, int b) {
  double total = 0.0;
  for (int q = 0; q < rule.size(); ++q)
    total += rule.weights[q] * std::pow(rule.points[q].x, a) * std::pow(rule.points[q].y, b);
  return total;
}

}  // namespace

TEST_SUITE_BEGIN("basis_quadrature");

TEST_CASE("segment nodal property") {
  std::vector<double> vals(2), gx(2), gy;
  reference_basis(ElementKind::Segment, 1, {0.0, 0.0}, vals, gx, gy);
  CHECK(vals[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(vals[1] == doctest::Approx(0.0).epsilon(1e-15));

  std::vector<double> v2(3), g2(3);
  reference_basis(ElementKind::Segment, 2, {0.5, 0.0}, v2, g2, gy);
  CHECK(v2[0] == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(v2[1] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(v2[2] == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("nodal property at all nodes, all degrees, both elements") {
  for (ElementKind kind : {ElementKind::Segment, ElementKind::Triangle}) {
    for (int p = 1; p <= 5; ++p) {
      auto nodes = reference_nodes(kind, p);
      int n = basis_count(kind, p);
      REQUIRE(static_cast<int>(nodes.size()) == n);
      std::vector<double> vals(n), gx(n), gy(n);
      for (int j = 0; j < n; ++j) {
        reference_basis(kind, p, nodes[j], vals, gx, gy);
        for (int i = 0; i < n; ++i)
          CHECK(vals[i] == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-11));
      }
    }
  }
}

TEST_CASE("partition of unity and gradient sum") {
  std::mt19937 rng(99);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int p = 1; p <= 5; ++p) {
    int n = basis_count(ElementKind::Triangle, p);
    std::vector<double> vals(n), gx(n), gy(n);
    for (int trial = 0; trial < 30; ++trial) {
      double x = unit(rng), y = unit(rng) * (1.0 - x);
      reference_basis(ElementKind::Triangle, p, {x, y}, vals, gx, gy);
      double sum = 0.0, sgx = 0.0, sgy = 0.0;
      for (int i = 0; i < n; ++i) {
        sum += vals[i];
        sgx += gx[i];
        sgy += gy[i];
      }
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-13));
      CHECK(std::abs(sgx) < 1e-11);
      CHECK(std::abs(sgy) < 1e-11);
    }
  }
}

TEST_CASE("basis rejects bad input") {
  std::vector<double> vals(8), gx(8), gy(8);
  CHECK_THROWS_AS(reference_basis(ElementKind::Segment, 0, {0.5, 0}, vals, gx, gy),
                  std::invalid_argument);
  CHECK_THROWS_AS(reference_basis(ElementKind::Segment, 6, {0.5, 0}, vals, gx, gy),
                  std::invalid_argument);
  CHECK_THROWS_AS(reference_basis(ElementKind::Segment, 2, {1.5, 0}, vals, gx, gy),
                  std::invalid_argument);
  CHECK_THROWS_AS(reference_basis(ElementKind::Triangle, 2, {0.7, 0.7}, vals, gx, gy),
                  std::invalid_argument);
}

TEST_CASE("gauss segment rules") {
  // 2-point Gauss integrates x^3 exactly.
  QuadratureRule rule = quadrature_rule(ElementKind::Segment, 3);
  CHECK(rule.size() == 2);
  double integral = 0.0;
  for (int q = 0; q < rule.size(); ++q)
    integral += rule.weights[q] * std::pow(rule.points[q].x, 3);
  CHECK(integral == doctest::Approx(0.25).epsilon(1e-15));

  for (int exactness = 1; exactness <= 23; ++exactness) {
    QuadratureRule r = quadrature_rule(ElementKind::Segment, exactness);
    double wsum = 0.0;
    for (double w : r.weights) {
      CHECK(w > 0.0);
      wsum += w;
    }
    CHECK(wsum == doctest::Approx(1.0).epsilon(1e-14));
    for (int k = 0; k <= exactness; ++k) {
      double value = 0.0;
      for (int q = 0; q < r.size(); ++q) value += r.weights[q] * std::pow(r.points[q].x, k);
      CHECK(value == doctest::Approx(1.0 / (k + 1)).epsilon(1e-13));
    }
  }
}

TEST_CASE("triangle rules integrate monomials exactly") {
  QuadratureRule low = quadrature_rule(ElementKind::Triangle, 2);
  double wsum = 0.0;
  for (double w : low.weights) wsum += w;
  CHECK(wsum == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(integrate(low, 1, 0) + integrate(low, 0, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));

  for (int exactness : {2, 4, 6, 8, 10, 12}) {
    QuadratureRule rule = quadrature_rule(ElementKind::Triangle, exactness);
    for (double w : rule.weights) CHECK(w > 0.0);
    for (int a = 0; a <= exactness; ++a)
      for (int b = 0; a + b <= exactness; ++b)
        CHECK(integrate(rule, a, b) ==
              doctest::Approx(triangle_monomial_integral(a, b)).epsilon(1e-12));
  }
}

TEST_CASE("quadrature rejects unsupported requests") {
  CHECK_THROWS_AS(quadrature_rule(ElementKind::Segment, 0), std::invalid_argument);
  CHECK_THROWS_AS(quadrature_rule(ElementKind::Segment, 1000), std::invalid_argument);
  CHECK_THROWS_AS(quadrature_rule(ElementKind::Triangle, 1000), std::invalid_argument);
}

TEST_SUITE_END();
