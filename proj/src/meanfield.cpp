#include "toda/meanfield.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include "toda/kernels.hpp"

namespace toda {

MeanFieldProblem::MeanFieldProblem(std::shared_ptr<const DirichletOperator> op,
                                   const GreenEvaluator& green, ConfigPoints xi, double rho2,
                                   bool allow_supercritical)
    : op_(std::move(op)), green_(green), xi_(std::move(xi)), rho2_(rho2) {
  if (!(rho2 >= 0)) throw ArgumentError("rho2 must be nonnegative");
  if (rho2 >= 4 * kPi && !allow_supercritical) {
    std::ostringstream os;
    os << "rho2 = " << rho2 << " >= 4 pi: I_xi loses coercivity (Moser-Trudinger); "
       << "pass the supercritical override to proceed without uniqueness guarantees";
    throw RegimeError(os.str());
  }
  xi_.validate(green_.domain());
  const Mesh& m = op_->mesh();
  h_quad_ = h_weight_at(green_, xi_, op_->quad(), m);
  h_nodal_ = ScalarField::zeros(op_->mesh_ptr());
  h_nodal_.zero_trace = false;
  for (int i = 0; i < m.num_nodes(); ++i) h_nodal_.values[i] = h_weight(green_, xi_, m.nodes()[i]);
}

namespace {

struct Eval {
  double energy;
  double S;
  Vec e;  // h e^z at quadrature points
};

Eval evaluate(const MeanFieldProblem& pb, const Vec& z_full, double half_kzz) {
  const auto& q = pb.op().quad();
  Vec zq = interpolate_at(q, pb.op().mesh(), z_full);
  Eval ev;
  ev.e.resize(q.size());
  kernels::vexp(zq.data(), ev.e.data(), q.size());
  kernels::mul_inplace(ev.e.data(), pb.h_at_quad().data(), q.size());
  ev.S = quad_sum(q, ev.e);
  if (!(ev.S > 0) || !std::isfinite(ev.S))
    throw DegenerateWeightError("int h e^z is not a positive finite number");
  ev.energy = half_kzz - (pb.rho2() > 0 ? 2.0 * pb.rho2() * std::log(ev.S) : 0.0);
  return ev;
}

}  // namespace

double energy_I(const ScalarField& z, const MeanFieldProblem& problem) {
  if (z.mesh.get() != &problem.op().mesh()) throw DimensionError("z is not on the problem mesh");
  z.check(1e-12);
  return evaluate(problem, z.values, 0.5 * problem.op().energy(z.values)).energy;
}

MeanFieldSolution solve_meanfield(const MeanFieldProblem& pb, const ScalarField* init,
                                  const MeanFieldOptions& opts) {
  const DirichletOperator& op = pb.op();
  const Mesh& m = op.mesh();
  const auto& q = op.quad();
  const SpMat& K = op.stiffness_interior();
  const double rho2 = pb.rho2();

  Vec u = Vec::Zero(m.num_interior());
  if (init) {
    if (init->mesh.get() != &m) throw DimensionError("initial z is not on the problem mesh");
    u = restrict_interior(m, init->values);
  }
  Vec z = extend_interior(m, u);
  Eval ev = evaluate(pb, z, 0.5 * u.dot(K * u));

  MeanFieldSolution sol;
  sol.energy_trace.push_back(ev.energy);
  Eigen::SimplicialLDLT<SpMat> ldlt;
  bool analyzed = false;

  for (int it = 0;; ++it) {
    const Vec bI = restrict_interior(m, assemble_load(q, m, ev.e));
    const Vec g = K * u - (2.0 * rho2 / ev.S) * bI;
    const double gnorm = std::sqrt(std::max(0.0, g.dot(op.solve_interior(g))));
    if (opts.trace)
      *opts.trace << it << "," << ev.energy << "," << gnorm << "," << (it ? 1.0 : 0.0) << "\n";
    if (gnorm < opts.tol * (1.0 + std::abs(ev.energy))) {
      sol.gradient_norm = gnorm;
      break;
    }
    if (it >= opts.max_iterations) {
      std::ostringstream os;
      os << "mean field Newton did not converge in " << it << " iterations; gradient norm "
         << gnorm;
      throw NonconvergenceError(os.str());
    }

    // Hessian = A + alpha b b^T with A = K - (2 rho2 / S) M_e.
    const SpMat MeI = restrict_interior(m, assemble_weighted_mass(q, m, ev.e));
    const SpMat A = K - (2.0 * rho2 / ev.S) * MeI;
    if (!analyzed) {
      ldlt.analyzePattern(A);
      analyzed = true;
    }
    ldlt.factorize(A);
    Vec d;
    bool ok = ldlt.info() == Eigen::Success;
    if (ok) {
      const double alpha = 2.0 * rho2 / (ev.S * ev.S);
      const Vec Ag = ldlt.solve(g);
      const Vec Ab = ldlt.solve(bI);
      d = -(Ag - alpha * Ab * (bI.dot(Ag) / (1.0 + alpha * bI.dot(Ab))));
      ok = d.allFinite() && g.dot(d) < 0;
    }
    if (!ok) d = -op.solve_interior(g);  // preconditioned gradient step

    const double slope = g.dot(d);
    double t = 1.0;
    int halvings = 0;
    Vec u_new;
    Eval ev_new;
    for (;;) {
      u_new = u + t * d;
      const Vec z_new = extend_interior(m, u_new);
      bool finite = true;
      try {
        ev_new = evaluate(pb, z_new, 0.5 * u_new.dot(K * u_new));
      } catch (const DegenerateWeightError&) {
        finite = false;
      }
      if (finite && std::isfinite(ev_new.energy)) {
        if (ev_new.energy <= ev.energy + 1e-4 * t * slope) break;
        // Predicted decrease below rounding: accept a full step that does not
        // raise the energy beyond rounding.
        if (t == 1.0 && -slope < 1e-13 * (1.0 + std::abs(ev.energy)) &&
            ev_new.energy <= ev.energy + 1e-14 * (1.0 + std::abs(ev.energy)))
          break;
      }
      if (++halvings > opts.max_halvings) {
        std::ostringstream os;
        os << "mean field line search stalled after " << opts.max_halvings
           << " halvings at iteration " << it << "; energy trace:";
        for (double e : sol.energy_trace) os << " " << e;
        throw NonconvergenceError(os.str());
      }
      t *= 0.5;
    }
    u = std::move(u_new);
    ev = std::move(ev_new);
    sol.energy_trace.push_back(ev.energy);
    sol.newton_iterations = it + 1;
  }

  sol.z.mesh = op.mesh_ptr();
  sol.z.values = extend_interior(m, u);
  sol.z.zero_trace = true;
  sol.energy = ev.energy;
  sol.mass_normalizer = ev.S;
  return sol;
}

namespace {

// Smallest |sigma| of A v = sigma M v with A = A0 + alpha b b^T, by inverse
// iteration with Rayleigh quotients.
template <class Solve, class Apply>
void inverse_iteration(int n, const SpMat& M, const Solve& solve, const Apply& apply,
                       double& sigma, int& iters, bool& settled) {
  Vec v = Vec::Ones(n);
  // deterministic, not symmetric: avoid starting orthogonal to the target
  for (int i = 0; i < n; ++i) v[i] += 0.1 * std::sin(1.0 + i);
  v /= std::sqrt(v.dot(M * v));
  sigma = 0;
  settled = false;
  for (iters = 1; iters <= 500; ++iters) {
    Vec w = solve(M * v);
    w /= std::sqrt(w.dot(M * w));
    const double s = w.dot(apply(w));
    const bool close = std::abs(s - sigma) <= 1e-10 * std::abs(s);
    sigma = s;
    v = std::move(w);
    if (close) {
      settled = true;
      break;
    }
  }
  sigma = std::abs(sigma);
}

}  // namespace

NondegeneracyReport nondegeneracy_check(const MeanFieldSolution& sol, const MeanFieldProblem& pb) {
  const DirichletOperator& op = pb.op();
  const Mesh& m = op.mesh();
  const auto& q = op.quad();
  const SpMat& K = op.stiffness_interior();
  const int n = m.num_interior();

  const SpMat MI = restrict_interior(m, op.mass());

  NondegeneracyReport rep;
  {
    double s;
    int it;
    bool settled;
    inverse_iteration(
        n, MI, [&](const Vec& r) { return op.solve_interior(r); },
        [&](const Vec& v) { return Vec(K * v); }, s, it, settled);
    rep.sigma_laplace = s;
  }

  const Vec zq = interpolate_at(q, m, sol.z.values);
  Vec e(q.size());
  kernels::vexp(zq.data(), e.data(), q.size());
  kernels::mul_inplace(e.data(), pb.h_at_quad().data(), q.size());
  const double S = quad_sum(q, e);
  const Vec b = restrict_interior(m, assemble_load(q, m, e));
  const double rho2 = pb.rho2();
  const SpMat A = K - (2.0 * rho2 / S) * restrict_interior(m, assemble_weighted_mass(q, m, e));
  const double alpha = 2.0 * rho2 / (S * S);
  Eigen::SimplicialLDLT<SpMat> ldlt(A);
  if (ldlt.info() != Eigen::Success) {
    rep.inconclusive = true;
    return rep;
  }
  const Vec Ab = ldlt.solve(b);
  const double denom = 1.0 + alpha * b.dot(Ab);
  auto solve = [&](const Vec& r) {
    const Vec Ar = ldlt.solve(r);
    return Vec(Ar - alpha * Ab * (b.dot(Ar) / denom));
  };
  auto apply = [&](const Vec& v) { return Vec(A * v + alpha * b * b.dot(v)); };
  bool settled = false;
  inverse_iteration(n, MI, solve, apply, rep.sigma_min, rep.iterations, settled);
  rep.inconclusive = !settled;
  rep.nondegenerate = settled && rep.sigma_min > 1e-3 * rep.sigma_laplace;
  return rep;
}

std::vector<Point> grad_Itilde(const MeanFieldProblem& pb, const MeanFieldSolution& sol,
                               bool* warning) {
  std::vector<Point> out;
  bool warn = false;
  for (const auto& p : pb.xi().points) {
    const auto g = gradient_at(sol.z, p);
    warn = warn || g.accuracy_warning;
    out.push_back(4.0 * kPi * g.value);
  }
  if (warning) *warning = warn;
  return out;
}

}  // namespace toda
