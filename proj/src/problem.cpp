#include "dsfem/problem.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

namespace dsfem {

namespace {

constexpr double kPi = std::numbers::pi;

}  // namespace

ProblemSpec example1() {
  ProblemSpec spec;
  spec.name = "example1";
  spec.dim = 1;
  spec.xa = 0.0;
  spec.xb = 1.0;
  spec.alpha = 1.0;
  spec.beta = 1.0;
  spec.tau = 1.0;
  spec.t_final = 3.0;

  auto forcing = [](Pt p, double t) {
    return ((4.0 / kPi) * std::sin(kPi * t) -
            (1.0 + std::exp(-p.x) * std::cos(kPi * t)) * std::cos(kPi * t)) *
           std::exp(-p.x);
  };
  spec.f = [forcing](Pt p, double t, double v, double z) {
    return v * v - 2.0 * z + forcing(p, t);
  };
  spec.df_dv = [](Pt, double, double v, double) { return 2.0 * v; };
  spec.df_dz = [](Pt, double, double, double) { return -2.0; };
  spec.g = [](Pt, double, double, double v) { return v; };
  spec.dg_dv = [](Pt, double, double, double) { return 1.0; };

  auto exact = [](Pt p, double t) { return std::exp(-p.x) * std::cos(kPi * t); };
  spec.exact = exact;
  spec.history = exact;
  spec.boundary = exact;
  spec.exact_grad = [](Pt p, double t) {
    return Pt{-std::exp(-p.x) * std::cos(kPi * t), 0.0};
  };
  return spec;
}

ProblemSpec example2() {
  ProblemSpec spec;
  spec.name = "example2";
  spec.dim = 2;
  spec.xa = 0.0;
  spec.xb = 1.0;
  spec.alpha = 1.0;
  spec.beta = 1.0;
  spec.tau = 1.0;
  spec.t_final = 1.0;

  auto exact = [](Pt p, double t) {
    return std::exp(-0.5 * t) * std::sin(kPi * p.x) * std::sin(kPi * p.y);
  };
  auto forcing = [exact](Pt p, double t) {
    double v = exact(p, t);
    return (1.5 - 2.0 * std::exp(0.5) + kPi * kPi - 0.5 * v) * v - std::sin(v);
  };
  spec.f = [forcing](Pt p, double t, double v, double z) {
    return 0.5 * v * v + std::sin(v) + z + forcing(p, t);
  };
  spec.df_dv = [](Pt, double, double v, double) { return v + std::cos(v); };
  spec.df_dz = [](Pt, double, double, double) { return 1.0; };
  spec.g = [](Pt, double, double, double v) { return v; };
  spec.dg_dv = [](Pt, double, double, double) { return 1.0; };

  spec.exact = exact;
  spec.history = exact;
  spec.boundary = [](Pt, double) { return 0.0; };
  spec.exact_grad = [](Pt p, double t) {
    double e = std::exp(-0.5 * t);
    return Pt{kPi * e * std::cos(kPi * p.x) * std::sin(kPi * p.y),
              kPi * e * std::sin(kPi * p.x) * std::cos(kPi * p.y)};
  };
  return spec;
}

std::string ValidationReport::summary() const {
  std::ostringstream os;
  if (ok) {
    os << "validation passed";
    return os.str();
  }
  os << "validation failed with " << issues.size() << " issue(s):\n";
  for (const auto& issue : issues)
    os << "  " << issue.check << " at (" << issue.x.x << ", " << issue.x.y << "), t = " << issue.t
       << ": got " << issue.got << ", want " << issue.want << "\n";
  return os.str();
}

ValidationReport validate(const ProblemSpec& spec, int sample_count, unsigned seed) {
  ValidationReport report;
  auto fail = [&report](const std::string& check, Pt x, double t, double got, double want) {
    report.ok = false;
    report.issues.push_back({check, x, t, got, want});
  };

  if (!(spec.alpha > 0.0)) fail("alpha must be positive", {}, 0.0, spec.alpha, 0.0);
  if (!(spec.beta > 0.0)) fail("beta must be positive", {}, 0.0, spec.beta, 0.0);
  if (!(spec.tau > 0.0)) fail("tau must be positive", {}, 0.0, spec.tau, 0.0);
  if (!(spec.t_final > 0.0)) fail("t_final must be positive", {}, 0.0, spec.t_final, 0.0);

  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> vz(-2.0, 2.0);
  auto sample_point = [&](bool on_boundary) {
    Pt p{spec.xa + unit(rng) * (spec.xb - spec.xa), 0.0};
    if (spec.dim == 2) {
      p.y = unit(rng);
      if (on_boundary) {
        // Snap to one of the four sides.
        switch (rng() % 4) {
          case 0: p.x = 0.0; break;
          case 1: p.x = 1.0; break;
          case 2: p.y = 0.0; break;
          default: p.y = 1.0; break;
        }
      }
    } else if (on_boundary) {
      p.x = (rng() % 2) ? spec.xa : spec.xb;
    }
    return p;
  };

  // Compatibility u0(x, 0) = rho(x, 0) on the boundary.
  for (int k = 0; k < std::max(4, sample_count / 4); ++k) {
    Pt p = sample_point(true);
    double u0 = spec.history(p, 0.0);
    double rho = spec.boundary(p, 0.0);
    if (std::abs(u0 - rho) > 1e-10) fail("history/boundary compatibility", p, 0.0, u0, rho);
  }

  if (spec.exact) {
    for (int k = 0; k < std::max(4, sample_count / 4); ++k) {
      Pt pb = sample_point(true);
      double t = unit(rng) * spec.t_final;
      double ex = spec.exact(pb, t);
      double rho = spec.boundary(pb, t);
      if (std::abs(ex - rho) > 1e-10) fail("exact/boundary agreement", pb, t, ex, rho);
      Pt pi = sample_point(false);
      double th = -spec.tau * unit(rng);
      double exh = spec.exact(pi, th);
      double u0 = spec.history(pi, th);
      if (std::abs(exh - u0) > 1e-10) fail("exact/history agreement", pi, th, exh, u0);
    }
  }

  // Derivative consistency against central differences.
  for (int k = 0; k < sample_count; ++k) {
    Pt p = sample_point(false);
    double t = unit(rng) * spec.t_final;
    double s = t - unit(rng) * spec.tau;
    double v = vz(rng);
    double z = vz(rng);
    double hv = 1e-6 * std::max(1.0, std::abs(v));
    double hz = 1e-6 * std::max(1.0, std::abs(z));

    double fd_v = (spec.f(p, t, v + hv, z) - spec.f(p, t, v - hv, z)) / (2.0 * hv);
    double an_v = spec.df_dv(p, t, v, z);
    if (std::abs(fd_v - an_v) > 1e-6 * std::max(1.0, std::abs(an_v)))
      fail("df_dv finite-difference consistency", p, t, an_v, fd_v);

    double fd_z = (spec.f(p, t, v, z + hz) - spec.f(p, t, v, z - hz)) / (2.0 * hz);
    double an_z = spec.df_dz(p, t, v, z);
    if (std::abs(fd_z - an_z) > 1e-6 * std::max(1.0, std::abs(an_z)))
      fail("df_dz finite-difference consistency", p, t, an_z, fd_z);

    double fd_g = (spec.g(p, t, s, v + hv) - spec.g(p, t, s, v - hv)) / (2.0 * hv);
    double an_g = spec.dg_dv(p, t, s, v);
    if (std::abs(fd_g - an_g) > 1e-6 * std::max(1.0, std::abs(an_g)))
      fail("dg_dv finite-difference consistency", p, t, an_g, fd_g);
  }
  return report;
}

}  // namespace dsfem
