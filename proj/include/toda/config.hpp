#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "toda/mesh.hpp"

namespace toda {

// Everything a run needs, read from a TOML file. Unknown keys are errors.
struct ExperimentConfig {
  // [domain]
  std::string domain_kind = "disk";  // disk / rectangle / polygon
  double width = 1, height = 1;
  std::vector<Point> vertices;

  // [problem]
  int k = 1;
  double rho2 = 0.5;
  bool xi_auto = true;
  std::vector<Point> xi;

  // [mesh]
  double h = 0.05;
  int levels = 2;  // green-check refinements

  // [lambda]
  double lambda_start = 1e-2;
  double lambda_min = 1e-5;
  double lambda_shrink = 0.5;
  std::vector<double> residual_lambdas;  // empty: the ladder

  // [tolerances]
  double newton_tol = 1e-9;
  double critical_tol = 0;  // 0: solver default
  double meanfield_tol = 1e-10;

  // [ansatz]
  double h_far = 0.05;
  double core_radius = 10;
  double core_h = 0.25;
  double grading = 0.3;

  // [search]
  int multistart = 8;

  // [green]
  int green_pairs = 50;
  double green_radius = 0.6;

  // [scan]
  int scan_n = 11;
  double scan_radius = 0.8;

  // [branch]
  bool singular_value = true;
  bool refine_check = false;
  bool dump_fields = false;

  // top level
  std::string out = "out";
  std::uint64_t seed = 1;

  DomainSpec domain() const;
  // Throws ConfigError on violated invariants.
  void validate() const;
  std::vector<double> ladder() const;
  std::vector<double> residual_ladder() const;
};

ExperimentConfig parse_config(const std::string& toml_text, const std::string& source = "<string>");
ExperimentConfig load_config(const std::string& path);
// Canonical TOML, every key present, reals with 17 significant digits.
std::string serialize_config(const ExperimentConfig& c);
// SHA-256 of the canonical form.
std::string config_hash(const ExperimentConfig& c);

}  // namespace toda
