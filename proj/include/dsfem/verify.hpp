#pragma once

#include <string>
#include <vector>

namespace dsfem {

struct SuiteResult {
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

/// Property suites: matrix identities, the sqrt(2)-Cauchy-Schwarz bound,
/// the Green identity, BDF2/trapezoid exactness, Jacobian versus finite
/// differences, manufactured-solution residuals, and delay weight sums.
/// filter selects suites by exact name; empty runs all.
/// inject_trapezoid_fault flips a delay weight (negative control).
std::vector<SuiteResult> run_verify_suites(const std::string& filter = "",
                                           bool inject_trapezoid_fault = false);

std::vector<std::string> verify_suite_names();

}  // namespace dsfem
