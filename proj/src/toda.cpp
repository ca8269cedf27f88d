#include "toda/toda.hpp"

#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include "toda/kernels.hpp"
#include "toda/reduced_energy.hpp"

namespace toda {

TodaState TodaState::from_ansatz(std::shared_ptr<const Ansatz> a) {
  TodaState s;
  s.op = a->op;
  s.lambda = a->lambda;
  s.rho2 = a->rho2;
  s.phi1 = Vec::Zero(a->mesh().num_nodes());
  s.phi2 = s.phi1;
  s.ansatz = std::move(a);
  return s;
}

TodaState TodaState::plain(std::shared_ptr<const DirichletOperator> op, double lambda, double rho2) {
  if (!(lambda >= 0) || !(rho2 >= 0)) throw ArgumentError("lambda and rho2 must be nonnegative");
  TodaState s;
  s.op = std::move(op);
  s.lambda = lambda;
  s.rho2 = rho2;
  s.phi1 = Vec::Zero(s.op->mesh().num_nodes());
  s.phi2 = s.phi1;
  return s;
}

ScalarField TodaState::u1() const {
  ScalarField f{op->mesh_ptr(), phi1, true};
  if (ansatz) f.values += ansatz->W1.values;
  return f;
}

ScalarField TodaState::u2() const {
  ScalarField f{op->mesh_ptr(), phi2, true};
  if (ansatz) f.values += ansatz->W2.values;
  return f;
}

double TodaState::distance_to_ansatz() const {
  return std::sqrt(std::max(0.0, op->energy(phi1) + op->energy(phi2)));
}

namespace {

// Everything the residual and the Jacobian need at the quadrature points.
struct Sampled {
  Vec u1, u2;
  Vec le1;  // lambda e^{u1}
  Vec g;    // e^{u2} / int e^{u2}
  double shift = 0;  // max u2
  double S = 0;      // int e^{u2 - shift}
  double log_int_e2 = 0;
};

Sampled sample(const TodaState& s) {
  const auto& q = s.op->quad();
  const Mesh& m = s.mesh();
  const std::size_t nq = q.size();
  Sampled o;
  o.u1 = interpolate_at(q, m, s.phi1);
  o.u2 = interpolate_at(q, m, s.phi2);
  if (s.ansatz) {
    o.u1 += s.ansatz->W1_q;
    o.u2 += s.ansatz->W2_q;
  }
  o.le1 = Vec::Zero(nq);
  if (s.lambda > 0) {
    // lambda e^{u1} = e^{u1 + log lambda}; u1 peaks near |log lambda|
    Vec t = o.u1.array() + std::log(s.lambda);
    const double top = t.maxCoeff();
    if (!(top < 700)) {
      std::ostringstream os;
      os << "lambda e^{u1} overflows (max exponent " << top << "); use a smaller lambda step";
      throw RangeError(os.str());
    }
    kernels::vexp(t.data(), o.le1.data(), nq);
  }
  const double mx = o.u2.maxCoeff();
  if (!std::isfinite(mx)) throw RangeError("u2 is not finite");
  Vec t = o.u2.array() - mx;
  o.g.resize(nq);
  kernels::vexp(t.data(), o.g.data(), nq);
  const double S = quad_sum(q, o.g);
  if (!(S > 0)) throw DegenerateWeightError("int e^{u2} vanished");
  o.g /= S;
  o.shift = mx;
  o.S = S;
  o.log_int_e2 = mx + std::log(S);
  return o;
}

// Weak -Delta W on all nodes.
struct AnsatzLoads {
  Vec b1, b2;
};

AnsatzLoads ansatz_loads(const TodaState& s) {
  const Mesh& m = s.mesh();
  AnsatzLoads l{Vec::Zero(m.num_nodes()), Vec::Zero(m.num_nodes())};
  if (!s.ansatz) return l;
  const auto& a = *s.ansatz;
  Vec bw = Vec::Zero(m.num_nodes());
  for (const auto& ew : a.ew) bw += assemble_load(s.op->quad(), m, ew);
  const Vec Kz = s.op->stiffness() * a.z.values;
  l.b1 = bw - 0.5 * Kz;
  l.b2 = -0.5 * bw + Kz;
  return l;
}

// Weak residuals of -(Delta u + F) on all nodes.
void weak_residual(const TodaState& s, const Sampled& f, const AnsatzLoads& l, Vec& F1, Vec& F2) {
  const auto& q = s.op->quad();
  const Mesh& m = s.mesh();
  const Vec L1 = assemble_load(q, m, f.le1);
  const Vec Lg = assemble_load(q, m, f.g);
  F1 = s.op->stiffness() * s.phi1 + l.b1 - 2.0 * L1 + s.rho2 * Lg;
  F2 = s.op->stiffness() * s.phi2 + l.b2 - 2.0 * s.rho2 * Lg + L1;
}

double dual_norm(const DirichletOperator& op, const Vec& FI) {
  return std::sqrt(std::max(0.0, FI.dot(op.solve_interior(FI))));
}

double merit(const TodaState& s, const AnsatzLoads& l, double* n1 = nullptr, double* n2 = nullptr) {
  const Sampled f = sample(s);
  Vec F1, F2;
  weak_residual(s, f, l, F1, F2);
  const double a = dual_norm(*s.op, restrict_interior(s.mesh(), F1));
  const double b = dual_norm(*s.op, restrict_interior(s.mesh(), F2));
  if (n1) *n1 = a;
  if (n2) *n2 = b;
  return std::sqrt(a * a + b * b);
}

// Jacobian = A + c r^T, A sparse (2n x 2n), c r^T the rank-one part of the
// normalized nonlocal term.
struct Jacobian {
  SpMat A;
  Vec c, r;
  mutable Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu;  // transpose() is non-const
  Vec Ac, Atr;  // A^{-1} c and A^{-T} r
  double denom = 1, denom_t = 1;

  Vec solve(const Vec& b) const {
    const Vec Ab = lu.solve(b);
    return Ab - Ac * (r.dot(Ab) / denom);
  }
  Vec solve_transpose(const Vec& b) const {
    const Vec Ab = lu.transpose().solve(b);
    return Ab - Atr * (c.dot(Ab) / denom_t);
  }
};

void build_jacobian(const TodaState& s, const Sampled& f, Jacobian& J) {
  const auto& q = s.op->quad();
  const Mesh& m = s.mesh();
  const int n = m.num_interior();
  const SpMat& K = s.op->stiffness_interior();
  const SpMat M1 = restrict_interior(m, assemble_weighted_mass(q, m, f.le1));
  const SpMat Mg = restrict_interior(m, assemble_weighted_mass(q, m, f.g));
  const Vec mg = restrict_interior(m, assemble_load(q, m, f.g));
  const double rho2 = s.rho2;

  std::vector<Eigen::Triplet<double>> t;
  t.reserve(4 * (K.nonZeros() + M1.nonZeros()));
  auto add = [&](const SpMat& B, int r0, int c0, double a) {
    if (a == 0) return;
    for (int col = 0; col < B.outerSize(); ++col)
      for (SpMat::InnerIterator e(B, col); e; ++e) t.emplace_back(r0 + e.row(), c0 + e.col(), a * e.value());
  };
  add(K, 0, 0, 1.0);
  add(M1, 0, 0, -2.0);
  add(Mg, 0, n, rho2);
  add(M1, n, 0, 1.0);
  add(K, n, n, 1.0);
  add(Mg, n, n, -2.0 * rho2);
  J.A.resize(2 * n, 2 * n);
  J.A.setFromTriplets(t.begin(), t.end());
  J.A.makeCompressed();
  J.c = Vec::Zero(2 * n);
  J.r = Vec::Zero(2 * n);
  J.c.head(n) = -rho2 * mg;
  J.c.tail(n) = 2.0 * rho2 * mg;
  J.r.tail(n) = mg;

  J.lu.compute(J.A);
  if (J.lu.info() != Eigen::Success) throw AssemblyError("Toda Jacobian factorization failed");
  J.Ac = J.lu.solve(J.c);
  J.denom = 1.0 + J.r.dot(J.Ac);
  J.Atr = J.lu.transpose().solve(J.r);
  J.denom_t = 1.0 + J.c.dot(J.Atr);
  if (std::abs(J.denom) < 1e-14 || std::abs(J.denom_t) < 1e-14)
    throw AssemblyError("rank-one update of the Toda Jacobian is singular");
}

Vec stack(const Vec& a, const Vec& b) {
  Vec v(a.size() + b.size());
  v << a, b;
  return v;
}

}  // namespace

namespace {

// Mesh parts of u1, u2 (nodal); the bubble profiles are added analytically.
void mesh_parts(const TodaState& s, Vec& n1, Vec& n2) {
  n1 = s.phi1;
  n2 = s.phi2;
  if (!s.ansatz) return;
  Vec sc = Vec::Zero(s.mesh().num_nodes());
  for (const auto& p : s.ansatz->Pw) sc += p.correction().values;
  n1 += sc - 0.5 * s.ansatz->z.values;
  n2 += -0.5 * sc + s.ansatz->z.values;
}

void triangle_gradients(const Mesh& m, int t, const Vec& n1, const Vec& n2, Point& g1, Point& g2) {
  const auto g = hat_gradients(m, t);
  const auto& tri = m.triangles()[t];
  g1 = g2 = Point::Zero();
  for (int a = 0; a < 3; ++a) {
    g1 += n1[tri[a]] * g[a];
    g2 += n2[tri[a]] * g[a];
  }
}

Point bubbles_grad(const TodaState& s, const Point& x) {
  Point g = Point::Zero();
  if (s.ansatz)
    for (int i = 0; i < s.ansatz->xi.k(); ++i) g += bubble_grad_w(s.ansatz->params.delta[i], s.ansatz->xi[i], x);
  return g;
}

double bubbles(const TodaState& s, const Point& x) {
  double v = 0;
  if (s.ansatz)
    for (int i = 0; i < s.ansatz->xi.k(); ++i) v += bubble_w(s.ansatz->params.delta[i], s.ansatz->xi[i], x);
  return v;
}

// Integrals over the part of a curved domain the polygonal mesh misses. The
// bubble energy density is O(1) at the boundary, so dropping these leaves an
// O(h^2) bias in J that does not shrink with lambda.
struct SliverTerms {
  double Q = 0, mass1 = 0, e2 = 0;  // e2 = int e^{u2 - shift}
};

SliverTerms sliver_terms(const TodaState& s, double shift) {
  SliverTerms o;
  if (!s.ansatz) return o;
  const Mesh& m = s.mesh();
  const QuadPoints q = boundary_sliver_quadrature(m, s.ansatz->domain);
  if (q.size() == 0) return o;
  Vec n1, n2;
  mesh_parts(s, n1, n2);
  const double loglam = s.lambda > 0 ? std::log(s.lambda) : 0;
  for (std::size_t k = 0; k < q.size(); ++k) {
    const int t = q.tri[k];
    const auto& tri = m.triangles()[t];
    const Point x(q.x[k], q.y[k]);
    Point g1, g2;
    triangle_gradients(m, t, n1, n2, g1, g2);
    const Point gw = bubbles_grad(s, x);
    const Point a1 = g1 + gw, a2 = g2 - 0.5 * gw;
    const double w = bubbles(s, x);
    const double v1 = w + q.l0[k] * n1[tri[0]] + q.l1[k] * n1[tri[1]] + q.l2[k] * n1[tri[2]];
    const double v2 = -0.5 * w + q.l0[k] * n2[tri[0]] + q.l1[k] * n2[tri[1]] + q.l2[k] * n2[tri[2]];
    o.Q += q.w[k] * (a1.squaredNorm() + a2.squaredNorm() + a1.dot(a2));
    if (s.lambda > 0) o.mass1 += q.w[k] * std::exp(v1 + loglam);
    o.e2 += q.w[k] * std::exp(v2 - shift);
  }
  return o;
}

}  // namespace

double TodaState::h1_norm() const {
  const Mesh& m = mesh();
  const auto& q = op->quad();
  Vec n1, n2;
  mesh_parts(*this, n1, n2);
  double s = 0;
  for (int t = 0; t < m.num_triangles(); ++t) {
    Point g1, g2;
    triangle_gradients(m, t, n1, n2, g1, g2);
    for (int k = q.offset[t]; k < q.offset[t + 1]; ++k) {
      const Point gw = bubbles_grad(*this, Point(q.x[k], q.y[k]));
      s += q.w[k] * ((g1 + gw).squaredNorm() + (g2 - 0.5 * gw).squaredNorm());
    }
  }
  return std::sqrt(s);
}

TodaResidual toda_residual(const TodaState& s) {
  const Mesh& m = s.mesh();
  const Sampled f = sample(s);
  const AnsatzLoads l = ansatz_loads(s);
  Vec F1, F2;
  weak_residual(s, f, l, F1, F2);
  TodaResidual r;
  r.norm1 = dual_norm(*s.op, restrict_interior(m, F1));
  r.norm2 = dual_norm(*s.op, restrict_interior(m, F2));
  // residual of Delta u + F, as an L2 field
  Eigen::SimplicialLDLT<SpMat> M(s.op->mass());
  r.r1 = ScalarField{s.op->mesh_ptr(), M.solve(Vec(-F1)), false};
  r.r2 = ScalarField{s.op->mesh_ptr(), M.solve(Vec(-F2)), false};
  return r;
}

TodaState toda_newton(TodaState s, const NewtonOptions& opts) {
  const Mesh& m = s.mesh();
  const int n = m.num_interior();
  const AnsatzLoads l = ansatz_loads(s);
  double res = merit(s, l);
  const double init_res = res;
  s.converged = false;
  for (int it = 0;; ++it) {
    const double scale = 1.0 + s.h1_norm();
    if (opts.trace) *opts.trace << it << "," << res << "," << (it ? 1 : 0) << "\n";
    if (res < opts.tol * scale) {
      s.converged = true;
      s.iterations = it;
      s.residual_norm = res;
      return s;
    }
    if (it >= opts.max_iterations || !std::isfinite(res)) break;

    const Sampled f = sample(s);
    Vec F1, F2;
    weak_residual(s, f, l, F1, F2);
    Jacobian J;
    build_jacobian(s, f, J);
    const Vec d = J.solve(-stack(restrict_interior(m, F1), restrict_interior(m, F2)));
    const Vec d1 = extend_interior(m, d.head(n)), d2 = extend_interior(m, d.tail(n));

    double t = 1.0;
    bool ok = false;
    for (int h = 0; h <= opts.max_halvings; ++h, t *= 0.5) {
      TodaState trial = s;
      trial.phi1 += t * d1;
      trial.phi2 += t * d2;
      double r;
      try {
        r = merit(trial, l);
      } catch (const RangeError&) {
        continue;
      } catch (const DegenerateWeightError&) {
        continue;
      }
      if (std::isfinite(r) && r < (1.0 - 1e-4 * t) * res) {
        s = std::move(trial);
        res = r;
        ok = true;
        break;
      }
    }
    if (!ok) {
      // rounding floor: accept the state if it is already within 10x tolerance
      if (res < 10 * opts.tol * scale) {
        s.converged = true;
        s.iterations = it;
        s.residual_norm = res;
        return s;
      }
      std::ostringstream os;
      os << "Toda Newton line search stalled at iteration " << it << ", residual " << res
         << " (initial " << init_res << ")";
      throw BasinEscapeError(os.str(), init_res);
    }
  }
  std::ostringstream os;
  os << "Toda Newton did not converge in " << opts.max_iterations << " damped steps; residual "
     << res << " (initial " << init_res << ")";
  throw BasinEscapeError(os.str(), init_res);
}

double jacobian_min_singular_value(const TodaState& s, int iterations) {
  const Mesh& m = s.mesh();
  const int n = m.num_interior();
  const Sampled f = sample(s);
  Jacobian J;
  build_jacobian(s, f, J);
  const SpMat& K = s.op->stiffness_interior();
  auto Kmul = [&](const Vec& x) { return stack(K * x.head(n), K * x.tail(n)); };
  // power iteration for the largest eigenvalue of J^{-T} K J^{-1} K, which is
  // similar to S^T S with S = K^{1/2} J^{-1} K^{1/2}
  Vec x = Vec::Ones(2 * n);
  for (int i = 0; i < 2 * n; ++i) x[i] += 0.3 * std::sin(0.7 * i);
  double mu = 0;
  for (int it = 0; it < iterations; ++it) {
    const Vec y = J.solve_transpose(Kmul(J.solve(Kmul(x))));
    const double num = x.dot(Kmul(y));
    const double den = x.dot(Kmul(x));
    const double mu_new = num / den;
    x = y / std::sqrt(y.dot(Kmul(y)));
    if (it > 5 && std::abs(mu_new - mu) < 1e-10 * mu_new) {
      mu = mu_new;
      break;
    }
    mu = mu_new;
  }
  return 1.0 / std::sqrt(mu);
}

double mass_rho1(const TodaState& s) {
  const Sampled f = sample(s);
  return quad_sum(s.op->quad(), f.le1) + sliver_terms(s, f.shift).mass1;
}

double energy_J(const TodaState& s) {
  const Sampled f = sample(s);
  const Mesh& m = s.mesh();
  const auto& q = s.op->quad();
  Vec n1, n2;
  mesh_parts(s, n1, n2);
  double Q = 0;
  for (int t = 0; t < m.num_triangles(); ++t) {
    Point g1, g2;
    triangle_gradients(m, t, n1, n2, g1, g2);
    for (int k = q.offset[t]; k < q.offset[t + 1]; ++k) {
      const Point gw = bubbles_grad(s, Point(q.x[k], q.y[k]));
      const Point a1 = g1 + gw, a2 = g2 - 0.5 * gw;
      Q += q.w[k] * (a1.squaredNorm() + a2.squaredNorm() + a1.dot(a2));
    }
  }
  const SliverTerms sl = sliver_terms(s, f.shift);
  return (Q + sl.Q) / 3.0 - (quad_sum(q, f.le1) + sl.mass1) - s.rho2 * (f.shift + std::log(f.S + sl.e2));
}

std::vector<double> lambda_ladder(double start, double min, double shrink) {
  if (!(start > 0) || !(min > 0) || !(min <= start)) throw ArgumentError("lambda ladder needs 0 < lambda_min <= lambda_start");
  if (!(shrink > 0 && shrink < 1)) throw ArgumentError("lambda shrink factor must lie in (0, 1)");
  std::vector<double> v;
  for (double l = start; l > min * (1 + 1e-9); l *= shrink) v.push_back(l);
  v.push_back(min);
  return v;
}

BranchRecord continuation(const DomainSpec& domain, const ConfigPoints& xi, double rho2,
                          const BranchOptions& opts) {
  if (!(opts.lambda_start <= 0.1)) throw ArgumentError("lambda_start must be at most 0.1");
  if (!(opts.shrink > 0.3 && opts.shrink < 0.9)) throw ArgumentError("shrink must lie in (0.3, 0.9)");
  xi.validate(domain);
  BranchRecord rec;
  rec.xi = xi;
  rec.rho2 = rho2;
  std::shared_ptr<const TodaState> prev;
  ScalarField z_prev;
  for (double lam : lambda_ladder(opts.lambda_start, opts.lambda_min, opts.shrink)) {
    auto a = std::make_shared<const Ansatz>(build_ansatz(domain, xi, lam, rho2, opts.ansatz,
                                                         z_prev.mesh ? &z_prev : nullptr));
    z_prev = a->z;
    TodaState seed = TodaState::from_ansatz(a);
    const Mesh& m = seed.mesh();
    if (prev) {
      // carry phi over to the new mesh
      seed.phi1 = transfer(ScalarField{prev->op->mesh_ptr(), prev->phi1, true}, m);
      seed.phi2 = transfer(ScalarField{prev->op->mesh_ptr(), prev->phi2, true}, m);
      for (int i = 0; i < m.num_nodes(); ++i)
        if (m.is_boundary(i)) seed.phi1[i] = seed.phi2[i] = 0.0;
    }
    TodaState sol;
    try {
      try {
        sol = toda_newton(seed, opts.newton);
      } catch (const BasinEscapeError&) {
        if (!prev) throw;
        sol = toda_newton(TodaState::from_ansatz(a), opts.newton);  // plain ansatz seed
      }
    } catch (const Error& e) {
      if (!prev) throw;  // first sample: ansatz or mesh inadequate
      rec.truncated = true;
      std::ostringstream os;
      os << "branch truncated at lambda = " << lam << ": " << e.what();
      rec.diagnostics = os.str();
      break;
    }
    BranchSample bs;
    bs.lambda = lam;
    bs.rho1 = mass_rho1(sol);
    bs.J = energy_J(sol);
    bs.distance = sol.distance_to_ansatz();
    bs.residual = sol.residual_norm;
    bs.sigma_min = opts.singular_value ? jacobian_min_singular_value(sol) : 0.0;
    bs.delta_min = a->delta_min();
    bs.iterations = sol.iterations;
    bs.nodes = m.num_nodes();
    bs.converged = sol.converged;
    const Vec u1 = sol.u1().values, u2 = sol.u2().values;
    bs.u2_norm = u2.cwiseAbs().maxCoeff();
    bs.u2_half_u1 = (u2 + 0.5 * u1).cwiseAbs().maxCoeff();
    rec.samples.push_back(bs);
    if (opts.trace)
      *opts.trace << "lambda " << lam << " rho1 " << bs.rho1 << " J " << bs.J << " |phi| "
                  << bs.distance << " newton " << bs.iterations << " nodes " << bs.nodes << "\n";
    prev = std::make_shared<const TodaState>(std::move(sol));
  }
  rec.last = prev;
  return rec;
}

std::vector<double> expansion_check(const BranchRecord& b, double lambda_star) {
  const int k = b.xi.k();
  std::vector<double> out;
  for (const auto& s : b.samples)
    out.push_back(s.J + 4 * kPi * k * std::log(s.lambda) - lambda_star + 8 * kPi * (1 - std::log(2.0)));
  return out;
}

double branch_lambda_star(const BranchRecord& b) {
  if (!b.last || !b.last->ansatz) throw InsufficientDataError("branch has no converged ansatz state");
  const Ansatz& a = *b.last->ansatz;
  ReducedEnergyContext ctx;
  ctx.green = a.green;
  ctx.op = a.op;
  ctx.rho2 = a.rho2;
  return lambda_value(a.xi, ctx).value;
}

std::vector<double> richardson_defects(const std::vector<double>& coarse, const std::vector<double>& fine) {
  if (coarse.size() != fine.size()) throw ArgumentError("defect ladders differ in length");
  std::vector<double> out(coarse.size());
  for (std::size_t i = 0; i < coarse.size(); ++i) out[i] = (4 * fine[i] - coarse[i]) / 3;
  return out;
}

ScalarField liouville_newton(const Ansatz& a, double tol, int max_iterations) {
  if (a.rho2 != 0) throw ArgumentError("the scalar Liouville solver needs rho2 = 0");
  const Mesh& m = a.mesh();
  const auto& q = a.op->quad();
  const SpMat& K = a.op->stiffness_interior();
  const double loglam = std::log(a.lambda);
  // -Delta (sum Pw) tested against hats
  Vec bw = Vec::Zero(m.num_nodes());
  for (const auto& ew : a.ew) bw += assemble_load(q, m, ew);
  const Vec bwI = restrict_interior(m, bw);
  Vec psi = Vec::Zero(m.num_interior());
  auto residual = [&](const Vec& p, Vec* e_out) {
    Vec u = a.W1_q + interpolate_at(q, m, extend_interior(m, p));
    u.array() += loglam;
    Vec e(u.size());
    kernels::vexp(u.data(), e.data(), u.size());
    Vec G = K * p + bwI - 2.0 * restrict_interior(m, assemble_load(q, m, e));
    if (e_out) *e_out = std::move(e);
    return G;
  };
  Vec e;
  Vec G = residual(psi, &e);
  double res = std::sqrt(G.dot(a.op->solve_interior(G)));
  const double scale = 1.0 + a.Pw[0].dirichlet_norm();
  for (int it = 0; it < max_iterations && res >= tol * scale; ++it) {
    const SpMat Jm = K - 2.0 * restrict_interior(m, assemble_weighted_mass(q, m, e));
    Eigen::SimplicialLDLT<SpMat> ldlt(Jm);
    Vec d;
    if (ldlt.info() == Eigen::Success) {
      d = ldlt.solve(-G);
    } else {
      Eigen::SparseLU<SpMat> lu(Jm);
      d = lu.solve(-G);
    }
    double t = 1;
    for (int h = 0; h < 30; ++h, t *= 0.5) {
      Vec e2;
      const Vec G2 = residual(psi + t * d, &e2);
      const double r2 = std::sqrt(G2.dot(a.op->solve_interior(G2)));
      if (r2 < (1 - 1e-4 * t) * res) {
        psi += t * d;
        G = G2;
        e = std::move(e2);
        res = r2;
        break;
      }
    }
  }
  if (!(res < 10 * tol * scale)) {
    std::ostringstream os;
    os << "scalar Liouville Newton stopped at residual " << res;
    throw NonconvergenceError(os.str());
  }
  return ScalarField{a.op->mesh_ptr(), a.W1.values + extend_interior(m, psi), true};
}

}  // namespace toda
