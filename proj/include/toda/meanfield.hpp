#pragma once

#include <iosfwd>
#include <memory>
#include <vector>

#include "toda/green.hpp"

namespace toda {

// -Delta z = 2 rho2 h e^z / int h e^z in Omega, z = 0 on the boundary,
// with h = h(., xi) the vortex weight.
class MeanFieldProblem {
 public:
  // Numeric Green evaluators must live on `op`'s mesh. rho2 >= 4 pi needs
  // allow_supercritical (coercivity of I is lost there).
  MeanFieldProblem(std::shared_ptr<const DirichletOperator> op, const GreenEvaluator& green,
                   ConfigPoints xi, double rho2, bool allow_supercritical = false);

  double rho2() const { return rho2_; }
  const ConfigPoints& xi() const { return xi_; }
  const DirichletOperator& op() const { return *op_; }
  const std::shared_ptr<const DirichletOperator>& op_ptr() const { return op_; }
  const MeshPtr& mesh() const { return op_->mesh_ptr(); }
  const GreenEvaluator& green() const { return green_; }
  const Vec& h_at_quad() const { return h_quad_; }
  const ScalarField& h_nodal() const { return h_nodal_; }
  bool supercritical() const { return rho2_ >= 4 * kPi; }

 private:
  std::shared_ptr<const DirichletOperator> op_;
  GreenEvaluator green_;
  ConfigPoints xi_;
  double rho2_;
  Vec h_quad_;
  ScalarField h_nodal_;
};

struct MeanFieldSolution {
  ScalarField z;
  double energy = 0;
  int newton_iterations = 0;
  double gradient_norm = 0;  // dual (H^{-1}) norm of the discrete gradient
  double mass_normalizer = 0;  // int h e^z
  std::vector<double> energy_trace;  // I at the initial and every accepted iterate
};

struct MeanFieldOptions {
  double tol = 1e-10;
  int max_iterations = 100;
  int max_halvings = 60;
  std::ostream* trace = nullptr;  // CSV: iteration,energy,gradient_norm,step
};

// I(z) = 1/2 |grad z|^2 - 2 rho2 log int h e^z
double energy_I(const ScalarField& z, const MeanFieldProblem& problem);

MeanFieldSolution solve_meanfield(const MeanFieldProblem& problem, const ScalarField* init = nullptr,
                                  const MeanFieldOptions& opts = {});

// Discrete linearized operator of the mean field equation: L = K - 2 rho2
// (M_w / S - b b^T / S^2), with w = h e^z. The value reported is the smallest
// |sigma| of L v = sigma M v (mass-normalized, so rho2 = 0 gives the first
// Dirichlet eigenvalue).
struct NondegeneracyReport {
  double sigma_min = 0;
  double sigma_laplace = 0;  // same probe for K alone
  bool nondegenerate = false;  // sigma_min > 1e-3 sigma_laplace
  bool inconclusive = false;  // inverse iteration did not settle
  int iterations = 0;
};
NondegeneracyReport nondegeneracy_check(const MeanFieldSolution& sol, const MeanFieldProblem& problem);

// 4 pi grad z(xi_j) per point; sets *warning if a recovery patch touches the
// boundary.
std::vector<Point> grad_Itilde(const MeanFieldProblem& problem, const MeanFieldSolution& sol,
                               bool* warning = nullptr);

}  // namespace toda
