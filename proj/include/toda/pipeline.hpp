#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "toda/config.hpp"
#include "toda/reduced_energy.hpp"
#include "toda/toda.hpp"

namespace toda {

struct GreenCheckLevel {
  double h = 0;
  int nodes = 0;
  double max_error = 0;    // against the closed form (disk) or the finest level
  double symmetry = 0;     // max |H(x,y) - H(y,x)|
  double harmonicity = 0;  // max discrete harmonicity residual over the sources
};

struct GreenCheckReport {
  bool analytic_reference = false;
  std::vector<std::pair<Point, Point>> pairs;
  std::vector<GreenCheckLevel> levels;
  std::vector<double> orders;  // between consecutive levels with a reference
};

// Interior points whose distance to the boundary is at least (1 - radius)
// times the largest such distance (|x| <= radius on the unit disk).
std::vector<std::pair<Point, Point>> random_pairs(const DomainSpec& domain, int n, double radius,
                                                  std::uint64_t seed);

GreenCheckReport green_check(const DomainSpec& domain, const std::vector<double>& hs, int pairs,
                             double radius, std::uint64_t seed, int threads = 1);

// Random k-point configurations with boundary margin and pairwise separation.
std::vector<ConfigPoints> random_configs(const DomainSpec& domain, int k, int n, std::uint64_t seed,
                                         double margin, double separation);

// Regular k-gon around the domain's center (the center itself for k = 1).
ConfigPoints auto_xi(const DomainSpec& domain, int k);

// Analytic Green function on the disk, numeric on the mesh of size h
// otherwise; a mean field mesh whenever rho2 > 0.
ReducedEnergyContext make_context(const ExperimentConfig& cfg, double h);

AnsatzOptions ansatz_options(const ExperimentConfig& cfg);

// Best entry of a multistart: the lowest Lambda among converged runs, ties to
// the lower seed index. Returns -1 if none converged.
int best_start(const std::vector<MultistartEntry>& e);

struct RunOptions {
  int threads = 1;
  int verbosity = 1;
  std::ostream* log = nullptr;
};

// Runs one subcommand into `out`. Returns 0 on success, 3 if a stage failed
// or was cut short; the failing stage is named on the log and in the
// manifest. Config errors propagate as ConfigError.
int run_command(const std::string& command, const ExperimentConfig& cfg, const std::filesystem::path& out,
                const RunOptions& opts);

const std::vector<std::string>& subcommands();

}  // namespace toda
