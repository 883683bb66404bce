#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "dsfem/problem.hpp"
#include "dsfem/quadrature.hpp"

using namespace dsfem;

namespace {

constexpr double kPi = std::numbers::pi;

// High-resolution quadrature of the delay integral of g along the exact
// solution: 32-panel composite 8-point Gauss, test-side oracle.
double delay_integral_oracle(const ProblemSpec& spec, Pt x, double t) {
  QuadratureRule gl = gauss_legendre_01(8);
  const int panels = 32;
  double len = spec.tau / panels;
  double total = 0.0;
  for (int p = 0; p < panels; ++p) {
    double left = t - spec.tau + p * len;
    for (int k = 0; k < gl.size(); ++k) {
      double s = left + gl.points[k].x * len;
      total += gl.weights[k] * len * spec.g(x, t, s, spec.exact(x, s));
    }
  }
  return total;
}

}  // namespace

TEST_SUITE_BEGIN("problems");

TEST_CASE("example1 printed values") {
  ProblemSpec spec = example1();
  CHECK(spec.dim == 1);
  CHECK(spec.tau == 1.0);
  CHECK(spec.t_final == 3.0);
  CHECK(spec.alpha == 1.0);
  CHECK(spec.beta == 1.0);

  CHECK(spec.exact({0.0, 0.0}, 0.0) == doctest::Approx(1.0).epsilon(1e-15));
  // cos(pi/2) = 0 kills the solution at t = 1/2 for every x.
  for (double x : {0.0, 0.3, 1.0})
    CHECK(std::abs(spec.exact({x, 0.0}, 0.5)) < 1e-15);

  // Forcing value at (0, 0): f(x,t,v,z) - (v^2 - 2z) = -2 there.
  double v = spec.exact({0.0, 0.0}, 0.0);
  double z = 0.7;  // arbitrary; the forcing term does not depend on z
  double forcing = spec.f({0.0, 0.0}, 0.0, v, z) - (v * v - 2.0 * z);
  CHECK(forcing == doctest::Approx(-2.0).epsilon(1e-14));

  // Derivatives as printed.
  CHECK(spec.df_dv({0.2, 0.0}, 0.1, 0.7, 0.3) == doctest::Approx(1.4).epsilon(1e-15));
  CHECK(spec.df_dz({0.2, 0.0}, 0.1, 0.7, 0.3) == -2.0);
  CHECK(spec.dg_dv({0.2, 0.0}, 0.1, 0.05, 0.7) == 1.0);
}

TEST_CASE("example2 printed values") {
  ProblemSpec spec = example2();
  CHECK(spec.dim == 2);
  CHECK(spec.t_final == 1.0);

  CHECK(spec.exact({0.5, 0.5}, 0.0) == doctest::Approx(1.0).epsilon(1e-14));
  for (double t : {0.0, 0.4, 1.0}) {
    CHECK(std::abs(spec.exact({0.0, 0.3}, t)) < 1e-14);
    CHECK(std::abs(spec.exact({1.0, 0.7}, t)) < 1e-13);
    CHECK(std::abs(spec.exact({0.6, 0.0}, t)) < 1e-14);
    CHECK(std::abs(spec.exact({0.2, 1.0}, t)) < 1e-13);
  }

  // Forcing at the center at t = 0, against the closed-form value
  // 3/2 - 2 sqrt(e) + pi^2 - 1/2 - sin(1).
  double v = spec.exact({0.5, 0.5}, 0.0);
  double z = -0.4;
  double forcing = spec.f({0.5, 0.5}, 0.0, v, z) - (0.5 * v * v + std::sin(v) + z);
  double expected = 1.5 - 2.0 * std::exp(0.5) + kPi * kPi - 0.5 - std::sin(1.0);
  CHECK(forcing == doctest::Approx(expected).epsilon(1e-13));
  CHECK(forcing == doctest::Approx(6.73069).epsilon(1e-4));
}

TEST_CASE("validate passes for both examples") {
  CHECK(validate(example1(), 200).ok);
  CHECK(validate(example2(), 200).ok);
}

TEST_CASE("validate flags a wrong derivative") {
  ProblemSpec spec = example1();
  spec.df_dv = [](Pt, double, double v, double) { return 4.0 * v; };  // factor 2 off
  ValidationReport report = validate(spec, 100);
  CHECK(!report.ok);
  CHECK(!report.issues.empty());
  bool found = false;
  for (const auto& issue : report.issues)
    if (issue.check.find("df_dv") != std::string::npos) found = true;
  CHECK(found);
}

TEST_CASE("validate flags incompatible history and boundary data") {
  ProblemSpec spec = example1();
  spec.boundary = [old = spec.boundary](Pt p, double t) { return old(p, t) + 1e-6; };
  CHECK(!validate(spec, 50).ok);
}

TEST_CASE("manufactured-solution PDE residual for example1") {
  ProblemSpec spec = example1();
  std::mt19937 rng(101);
  std::uniform_real_distribution<double> xs(0.02, 0.98), ts(0.0, spec.t_final);
  for (int k = 0; k < 50; ++k) {
    Pt x{xs(rng), 0.0};
    double t = ts(rng);
    double v = spec.exact(x, t);
    double z = delay_integral_oracle(spec, x, t);
    // Analytic strong form: (I - Lap)v_t = 0 for e^{-x} profiles with
    // beta = 1, and Lap v = v, so the left side is -e^{-x} cos(pi t).
    double lhs = -std::exp(-x.x) * std::cos(kPi * t);
    CHECK(std::abs(lhs - spec.f(x, t, v, z)) <= 1e-8);
  }
}

TEST_CASE("manufactured-solution PDE residual for example2") {
  ProblemSpec spec = example2();
  std::mt19937 rng(102);
  std::uniform_real_distribution<double> xs(0.02, 0.98), ts(0.0, spec.t_final);
  for (int k = 0; k < 50; ++k) {
    Pt x{xs(rng), xs(rng)};
    double t = ts(rng);
    double v = spec.exact(x, t);
    double z = delay_integral_oracle(spec, x, t);
    // v_t = -v/2, Lap v = -2 pi^2 v: (I - Lap)v_t - Lap v = (pi^2 - 1/2) v.
    double lhs = (kPi * kPi - 0.5) * v;
    CHECK(std::abs(lhs - spec.f(x, t, v, z)) <= 1e-8);
  }
}

TEST_CASE("exact gradients agree with finite differences") {
  std::mt19937 rng(103);
  std::uniform_real_distribution<double> xs(0.05, 0.95);
  for (const ProblemSpec& spec : {example1(), example2()}) {
    std::uniform_real_distribution<double> ts(0.0, spec.t_final);
    for (int k = 0; k < 25; ++k) {
      Pt x{xs(rng), spec.dim == 2 ? xs(rng) : 0.0};
      double t = ts(rng);
      const double h = 1e-6;
      Pt grad = spec.exact_grad(x, t);
      double fdx = (spec.exact({x.x + h, x.y}, t) - spec.exact({x.x - h, x.y}, t)) / (2 * h);
      CHECK(grad.x == doctest::Approx(fdx).epsilon(1e-7));
      if (spec.dim == 2) {
        double fdy = (spec.exact({x.x, x.y + h}, t) - spec.exact({x.x, x.y - h}, t)) / (2 * h);
        CHECK(grad.y == doctest::Approx(fdy).epsilon(1e-7));
      }
    }
  }
}

TEST_SUITE_END();
