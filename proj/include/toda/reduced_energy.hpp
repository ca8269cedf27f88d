#pragma once

#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "toda/meanfield.hpp"

namespace toda {

// What Lambda needs besides xi: the Green function, the mean field mesh and
// rho2. `op` may be null when rho2 = 0 (z = 0, no solve).
struct ReducedEnergyContext {
  GreenEvaluator green = GreenEvaluator::analytic_disk();
  std::shared_ptr<const DirichletOperator> op;
  double rho2 = 0;
  bool allow_supercritical = false;
  MeanFieldOptions meanfield;

  const DomainSpec& domain() const { return green.domain(); }
  // h_max of the mean field mesh (or the Green mesh); 0 if there is none.
  double mesh_scale() const;
  // Closed form everywhere: analytic disk Green function and rho2 = 0.
  bool closed_form() const;
};

struct LambdaEvaluation {
  ConfigPoints xi;
  double value = 0;
  double half_I = 0;       // 1/2 I(z)
  double robin_part = 0;   // -16 pi^2 sum_i H(xi_i, xi_i)
  double interaction_part = 0;  // -16 pi^2 sum_{i != j} G(xi_i, xi_j)
  std::vector<Point> gradient;
  bool gradient_warning = false;  // a recovery patch touches the boundary
  // mean field diagnostics
  ScalarField z;
  int meanfield_iterations = 0;
  double meanfield_gradient_norm = 0;
};

// Lambda(xi) and its gradient; `warm` seeds the mean field Newton.
LambdaEvaluation lambda_value(const ConfigPoints& xi, const ReducedEnergyContext& ctx,
                              const ScalarField* warm = nullptr);

// Gradient formula; requires every xi_j at least 3 h_max from the boundary
// when a mesh is involved.
std::vector<Point> lambda_grad(const ConfigPoints& xi, const ReducedEnergyContext& ctx);

// Central differences of lambda_value, step in [1e-4, 1e-2].
std::vector<Point> lambda_grad_fd(const ConfigPoints& xi, const ReducedEnergyContext& ctx,
                                  double step = 1e-3);

struct CriticalOptions {
  double tol = 0;  // 0: 1e-5 in the closed-form regime, 1e-3 otherwise
  int max_iterations = 500;
  double polish_threshold = 1e-2;
  int max_polish = 40;
  double barrier_h = 0;  // 0: mesh scale (1e-3 without a mesh)
  bool saddle_mode = false;  // Newton on the gradient, no descent requirement
  std::ostream* trace = nullptr;  // CSV: iteration,phase,Lambda,gradient_norm,step
};

struct CriticalPoint {
  ConfigPoints xi;
  double value = 0;
  double gradient_norm = 0;
  double tol = 0;
  std::vector<double> hessian_eigenvalues;  // ascending
  std::string classification;  // minimum / saddle / unresolved
  int iterations = 0;
  int polish_steps = 0;
  std::vector<double> value_trace;  // Lambda at every accepted iterate
};

CriticalPoint find_critical(const ConfigPoints& xi0, const ReducedEnergyContext& ctx,
                            const CriticalOptions& opts = {});

// Independent runs from several seeds, merged by seed index.
struct MultistartEntry {
  std::optional<CriticalPoint> result;
  std::string error_kind;
  std::string error;
};
std::vector<MultistartEntry> find_critical_multistart(const std::vector<ConfigPoints>& seeds,
                                                      const ReducedEnergyContext& ctx,
                                                      const CriticalOptions& opts, int threads);

// Symmetrized central-difference Hessian of the gradient formula.
Eigen::MatrixXd lambda_hessian_fd(const ConfigPoints& xi, const ReducedEnergyContext& ctx,
                                  double step);

}  // namespace toda
