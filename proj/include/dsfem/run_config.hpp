#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace dsfem {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// CLI run configuration. Values come from a flat key = value file with
/// optional [sections] and from command-line flags, flags winning.
/// Rational literals like 1/128 are accepted wherever a real number is,
/// so exact grid parameters survive parsing.
struct RunConfig {
  std::string problem = "example1";
  int degree = 1;
  int n_cells = 0;
  double sigma = 0.0;
  double t_final = 0.0;  // 0 keeps the problem's horizon
  std::string startup = "crank-nicolson";
  std::string linearization = "full-newton";
  std::string solver = "direct";
  std::string out_dir;
  std::vector<double> sigmas;
  std::vector<int> n_list;
  int jobs = 1;

  bool operator==(const RunConfig&) const = default;
};

/// Parse "p/q" or a plain decimal.
double parse_rational(const std::string& text);

/// Parse config-file text; errors cite the line and key.
RunConfig parse_config_text(const std::string& text);

/// Canonical serialization; parse_config_text(serialize_config(c)) == c.
std::string serialize_config(const RunConfig& config);

}  // namespace dsfem
