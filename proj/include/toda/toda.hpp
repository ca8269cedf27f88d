#pragma once

#include <iosfwd>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "toda/ansatz.hpp"

namespace toda {

// State of the Toda system
//   Delta u1 + 2 lambda e^{u1} - rho2 e^{u2} / int e^{u2} = 0,
//   Delta u2 + 2 rho2 e^{u2} / int e^{u2} - lambda e^{u1} = 0,
// u = 0 on the boundary. With an ansatz, u = W + phi and only phi is P1;
// without one, u = phi.
struct TodaState {
  std::shared_ptr<const DirichletOperator> op;
  std::shared_ptr<const Ansatz> ansatz;  // may be null
  double lambda = 0, rho2 = 0;
  Vec phi1, phi2;  // full nodal, zero on the boundary

  double residual_norm = std::numeric_limits<double>::infinity();
  bool converged = false;
  int iterations = 0;

  static TodaState from_ansatz(std::shared_ptr<const Ansatz> a);
  static TodaState plain(std::shared_ptr<const DirichletOperator> op, double lambda, double rho2);

  const Mesh& mesh() const { return op->mesh(); }
  ScalarField u1() const;  // nodal values of W1 + phi1
  ScalarField u2() const;
  // ||phi|| in the discrete H^1_0 norm (distance to the ansatz).
  double distance_to_ansatz() const;
  // sqrt(||u1||^2 + ||u2||^2), H^1_0, composite gradients.
  double h1_norm() const;
};

struct TodaResidual {
  ScalarField r1, r2;  // mass-lumped-free L2 representatives of the weak residuals
  double norm1 = 0, norm2 = 0;  // dual (H^{-1}) norms over interior test functions
  double norm() const { return std::sqrt(norm1 * norm1 + norm2 * norm2); }
};

// Throws RangeError if e^{u1} would overflow.
TodaResidual toda_residual(const TodaState& u);

struct NewtonOptions {
  double tol = 1e-9;  // on residual / (1 + ||u||)
  int max_iterations = 40;
  int max_halvings = 30;
  std::ostream* trace = nullptr;  // CSV: iteration,residual,step
};

// Damped Newton on both fields. Throws BasinEscapeError when it does not
// converge within max_iterations (or the line search stalls).
TodaState toda_newton(TodaState init, const NewtonOptions& opts = {});

// Smallest singular value of the Jacobian at u, measured in the H^1_0 /
// H^{-1} pair (so lambda = rho2 = 0 gives 1).
double jacobian_min_singular_value(const TodaState& u, int iterations = 60);

// J = Q/3 - lambda int e^{u1} - rho2 log int e^{u2},
// Q = int |grad u1|^2 + |grad u2|^2 + grad u1 . grad u2.
double energy_J(const TodaState& u);

// rho1 = lambda int e^{u1}
double mass_rho1(const TodaState& u);

struct BranchOptions {
  double lambda_start = 1e-2;
  double lambda_min = 1e-5;
  double shrink = 0.5;
  AnsatzOptions ansatz;
  NewtonOptions newton;
  bool singular_value = true;
  std::ostream* trace = nullptr;  // one line per sample
};

struct BranchSample {
  double lambda = 0;
  double rho1 = 0;
  double J = 0;
  double distance = 0;  // ||u - W||
  double residual = 0;
  double sigma_min = 0;
  double delta_min = 0;
  int iterations = 0;
  int nodes = 0;
  bool converged = false;
  double u2_norm = 0;        // max |u2|
  double u2_half_u1 = 0;     // max |u2 + u1/2|
};

struct BranchRecord {
  ConfigPoints xi;
  double rho2 = 0;
  std::vector<BranchSample> samples;  // lambda strictly decreasing
  bool truncated = false;
  std::string diagnostics;
  std::shared_ptr<const TodaState> last;  // final converged state
};

// lambda_start, lambda_start * shrink, ... down to lambda_min (always the
// last sample).
std::vector<double> lambda_ladder(double start, double min, double shrink);

BranchRecord continuation(const DomainSpec& domain, const ConfigPoints& xi, double rho2,
                          const BranchOptions& opts = {});

// defect(lambda) = J + 4 pi k log lambda - Lambda(xi*) + 8 pi (1 - log 2)
std::vector<double> expansion_check(const BranchRecord& branch, double lambda_star);

// Lambda(xi) on the mesh and Green function of the branch's last ansatz, so
// that it shares its discretization with J.
double branch_lambda_star(const BranchRecord& branch);

// Defects of two branches on meshes h and h/2 (same lambda ladder), combined
// as (4 d_fine - d_coarse) / 3 to remove the O(h^2) floor.
std::vector<double> richardson_defects(const std::vector<double>& coarse, const std::vector<double>& fine);

// Scalar Liouville problem -Delta u = 2 lambda e^u, u = 0 on the boundary,
// solved around the single-bubble projection of `a` (rho2 must be 0).
// Symmetric Newton, independent of the coupled solver. Returns nodal u.
ScalarField liouville_newton(const Ansatz& a, double tol = 1e-11, int max_iterations = 40);

}  // namespace toda
