#include "toda/reduced_energy.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include "toda/parallel.hpp"

namespace toda {

double ReducedEnergyContext::mesh_scale() const {
  if (op) return op->mesh().h_max();
  if (green.mode() == GreenEvaluator::Mode::Numeric) return green.op()->mesh().h_max();
  return 0.0;
}

bool ReducedEnergyContext::closed_form() const {
  return green.mode() == GreenEvaluator::Mode::AnalyticDisk && rho2 == 0.0;
}

LambdaEvaluation lambda_value(const ConfigPoints& xi, const ReducedEnergyContext& ctx,
                              const ScalarField* warm) {
  xi.validate(ctx.domain());
  LambdaEvaluation ev;
  ev.xi = xi;
  const int k = xi.k();
  ev.gradient.assign(k, Point::Zero());

  if (ctx.rho2 > 0) {
    if (!ctx.op) throw ArgumentError("rho2 > 0 needs a mean field mesh");
    MeanFieldProblem pb(ctx.op, ctx.green, xi, ctx.rho2, ctx.allow_supercritical);
    const ScalarField* init = (warm && warm->mesh.get() == &ctx.op->mesh()) ? warm : nullptr;
    MeanFieldSolution sol = solve_meanfield(pb, init, ctx.meanfield);
    ev.half_I = 0.5 * sol.energy;
    const auto gz = grad_Itilde(pb, sol, &ev.gradient_warning);
    for (int j = 0; j < k; ++j) ev.gradient[j] += 0.5 * gz[j];  // 2 pi grad z
    ev.z = std::move(sol.z);
    ev.meanfield_iterations = sol.newton_iterations;
    ev.meanfield_gradient_norm = sol.gradient_norm;
  } else if (ctx.op) {
    ev.z = ScalarField::zeros(ctx.op->mesh_ptr());
  }

  const double c = 16.0 * kPi * kPi;
  double sumH = 0, sumG = 0;
  for (int j = 0; j < k; ++j) {
    sumH += ctx.green.robin_H(xi[j], xi[j]);
    Point g = ctx.green.grad1_H(xi[j], xi[j]);
    for (int i = 0; i < k; ++i) {
      if (i == j) continue;
      sumG += ctx.green.green_G(xi[i], xi[j]);
      g += ctx.green.grad1_G(xi[j], xi[i]);
    }
    ev.gradient[j] -= 2.0 * c * g;
  }
  ev.robin_part = -c * sumH;
  ev.interaction_part = -c * sumG;
  ev.value = ev.half_I + ev.robin_part + ev.interaction_part;
  return ev;
}

std::vector<Point> lambda_grad(const ConfigPoints& xi, const ReducedEnergyContext& ctx) {
  const double h = ctx.mesh_scale();
  if (h > 0 && xi.boundary_margin(ctx.domain()) < 3.0 * h) {
    std::ostringstream os;
    os << "lambda_grad needs every point at least 3 h_max = " << 3.0 * h
       << " from the boundary; margin is " << xi.boundary_margin(ctx.domain());
    throw ArgumentError(os.str());
  }
  return lambda_value(xi, ctx).gradient;
}

std::vector<Point> lambda_grad_fd(const ConfigPoints& xi, const ReducedEnergyContext& ctx,
                                  double step) {
  if (!(step >= 1e-4 && step <= 1e-2)) throw ArgumentError("finite difference step must lie in [1e-4, 1e-2]");
  xi.validate(ctx.domain());
  const LambdaEvaluation base = lambda_value(xi, ctx);
  const ScalarField* warm = base.z.mesh ? &base.z : nullptr;
  std::vector<Point> out(xi.k(), Point::Zero());
  for (int j = 0; j < xi.k(); ++j)
    for (int c = 0; c < 2; ++c) {
      double v[2];
      for (int s = 0; s < 2; ++s) {
        ConfigPoints p = xi;
        p.points[j][c] += s ? -step : step;
        if (!(p.boundary_margin(ctx.domain()) > 0) || !(p.min_separation() > 0)) {
          std::ostringstream os;
          os << "step too large: perturbing point " << j << " by " << step
             << " leaves the configuration space";
          throw ArgumentError(os.str());
        }
        v[s] = lambda_value(p, ctx, warm).value;
      }
      out[j][c] = (v[0] - v[1]) / (2.0 * step);
    }
  return out;
}

namespace {

Vec flatten(const std::vector<Point>& g) {
  Vec v(2 * g.size());
  for (std::size_t i = 0; i < g.size(); ++i) v.segment<2>(2 * i) = g[i];
  return v;
}

double default_hessian_step(const ReducedEnergyContext& ctx) {
  const double h = ctx.mesh_scale();
  return h > 0 ? std::max(1e-5, 1e-2 * h) : 1e-5;
}

}  // namespace

Eigen::MatrixXd lambda_hessian_fd(const ConfigPoints& xi, const ReducedEnergyContext& ctx,
                                  double step) {
  const int n = 2 * xi.k();
  const LambdaEvaluation base = lambda_value(xi, ctx);
  const ScalarField* warm = base.z.mesh ? &base.z : nullptr;
  Eigen::MatrixXd Hs(n, n);
  for (int c = 0; c < n; ++c) {
    Vec x = xi.flat();
    x[c] += step;
    const Vec gp = flatten(lambda_value(ConfigPoints::from_flat(x), ctx, warm).gradient);
    x[c] -= 2 * step;
    const Vec gm = flatten(lambda_value(ConfigPoints::from_flat(x), ctx, warm).gradient);
    Hs.col(c) = (gp - gm) / (2 * step);
  }
  return 0.5 * (Hs + Hs.transpose());
}

namespace {

// Lambda plus the mesh-scale barrier.
struct Objective {
  LambdaEvaluation ev;
  double F = 0;
  Vec grad;        // of F
  Vec grad_lambda;  // of Lambda alone
};

class CriticalSearch {
 public:
  CriticalSearch(const ReducedEnergyContext& ctx, const CriticalOptions& opts) : ctx_(ctx) {
    h_ = opts.barrier_h > 0 ? opts.barrier_h : (ctx.mesh_scale() > 0 ? ctx.mesh_scale() : 1e-3);
    mu_ = h_;
    tol_ = opts.tol > 0 ? opts.tol : (ctx.closed_form() ? 1e-5 : 1e-3);
  }

  double tol() const { return tol_; }
  double barrier_h() const { return h_; }

  // nullopt when xi is outside F_k Omega or the evaluation fails.
  std::optional<Objective> eval(const Vec& x, const ScalarField* warm) const {
    const ConfigPoints xi = ConfigPoints::from_flat(x);
    if (!(xi.boundary_margin(ctx_.domain()) > 0) || !(xi.min_separation() > 0)) return std::nullopt;
    Objective o;
    try {
      o.ev = lambda_value(xi, ctx_, warm);
    } catch (const ArgumentError&) {
      return std::nullopt;
    } catch (const IllPosedSourceError&) {
      return std::nullopt;
    } catch (const NonconvergenceError&) {
      return std::nullopt;
    } catch (const DegenerateWeightError&) {
      return std::nullopt;
    }
    o.grad_lambda = flatten(o.ev.gradient);
    o.grad = o.grad_lambda;
    o.F = o.ev.value + barrier(xi, o.grad);
    return o;
  }

 private:
  // beta(s) = log(s / 2h)^2 below 2h; adds mu * grad beta to g.
  double barrier(const ConfigPoints& xi, Vec& g) const {
    const double s0 = 2.0 * h_;
    double b = 0;
    auto term = [&](double s, double& db) {
      if (s >= s0) {
        db = 0;
        return 0.0;
      }
      const double l = std::log(s / s0);
      db = mu_ * 2.0 * l / s;
      return mu_ * l * l;
    };
    for (int i = 0; i < xi.k(); ++i) {
      const Point& p = xi[i];
      double db;
      b += term(ctx_.domain().distance_to_boundary(p), db);
      if (db != 0) {
        Point n = p - ctx_.domain().project_to_boundary(p);
        if (n.norm() > 0) g.segment<2>(2 * i) += db * n / n.norm();
      }
      for (int j = i + 1; j < xi.k(); ++j) {
        const Point d = p - xi[j];
        b += term(d.norm(), db);
        if (db != 0) {
          g.segment<2>(2 * i) += db * d / d.norm();
          g.segment<2>(2 * j) -= db * d / d.norm();
        }
      }
    }
    return b;
  }

  const ReducedEnergyContext& ctx_;
  double h_, mu_, tol_;
};

bool in_barrier_zone(const ConfigPoints& xi, const DomainSpec& dom, double h) {
  return xi.boundary_margin(dom) < 2 * h || xi.min_separation() < 2 * h;
}

[[noreturn]] void escaped(const ConfigPoints& xi, const DomainSpec& dom, const Vec& dir,
                          const char* why) {
  std::ostringstream os;
  os << why << ": boundary margin " << xi.boundary_margin(dom) << ", separation "
     << xi.min_separation() << ", escape direction (";
  const Vec d = dir.norm() > 0 ? Vec(dir / dir.norm()) : dir;
  for (int i = 0; i < d.size(); ++i) os << (i ? ", " : "") << d[i];
  os << ")";
  throw EscapedConfigError(os.str(), d);
}

}  // namespace

CriticalPoint find_critical(const ConfigPoints& xi0, const ReducedEnergyContext& ctx,
                            const CriticalOptions& opts) {
  xi0.validate(ctx.domain());
  const DomainSpec& dom = ctx.domain();
  CriticalSearch search(ctx, opts);
  const double h = search.barrier_h();

  Vec x = xi0.flat();
  auto cur = search.eval(x, nullptr);
  if (!cur) throw ArgumentError("Lambda cannot be evaluated at the initial configuration");
  CriticalPoint out;
  out.tol = search.tol();
  out.value_trace.push_back(cur->ev.value);
  auto trace = [&](int it, const char* phase, double step) {
    if (opts.trace)
      *opts.trace << it << "," << phase << "," << cur->ev.value << "," << cur->grad.norm() << ","
                  << step << "\n";
  };
  trace(0, "start", 0);

  // Descent on Lambda + barrier.
  const double max_move = 0.1 * dom.diameter();
  double t = std::min(1.0, 0.01 * dom.diameter() / std::max(cur->grad.norm(), 1e-300));
  int it = 0;
  for (; it < opts.max_iterations; ++it) {
    const double gn = cur->grad.norm();
    if (gn < opts.polish_threshold || gn < search.tol()) break;
    const Vec d = -cur->grad;
    t = std::min(2 * t, max_move / gn);
    bool accepted = false;
    for (int half = 0; half < 60; ++half, t *= 0.5) {
      const Vec xn = x + t * d;
      auto trial = search.eval(xn, cur->ev.z.mesh ? &cur->ev.z : nullptr);
      if (trial && trial->F < cur->F - 1e-4 * t * gn * gn) {
        if (trial->ev.value >= cur->ev.value) continue;  // keep Lambda itself decreasing
        x = xn;
        cur = std::move(trial);
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      if (in_barrier_zone(cur->ev.xi, dom, h))
        escaped(cur->ev.xi, dom, -cur->grad_lambda, "descent stalled inside the barrier zone");
      break;
    }
    out.value_trace.push_back(cur->ev.value);
    trace(it + 1, "descent", t);
    if (cur->ev.xi.boundary_margin(dom) < 0.5 * h || cur->ev.xi.min_separation() < 0.5 * h)
      escaped(cur->ev.xi, dom, -cur->grad_lambda, "iterate left the resolvable configuration space");
  }
  out.iterations = it;
  if (it >= opts.max_iterations && cur->grad.norm() >= opts.polish_threshold) {
    std::ostringstream os;
    os << "find_critical: no polish region after " << it << " descent steps, gradient norm "
       << cur->grad.norm();
    throw NonconvergenceError(os.str());
  }

  // Newton polish on the finite-difference Hessian.
  const double hs = default_hessian_step(ctx);
  for (int p = 0; p < opts.max_polish && cur->grad.norm() >= search.tol(); ++p) {
    Eigen::MatrixXd Hs;
    try {
      Hs = lambda_hessian_fd(cur->ev.xi, ctx, hs);
    } catch (const Error&) {
      break;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Hs);
    Vec ev = es.eigenvalues();
    const double scale = std::max(ev.cwiseAbs().maxCoeff(), 1e-300);
    Vec inv(ev.size());
    for (int i = 0; i < ev.size(); ++i) {
      double e = ev[i];
      if (!opts.saddle_mode) e = std::abs(e);  // saddle-free Newton: always a descent direction
      if (std::abs(e) < 1e-10 * scale) e = (e < 0 ? -1e-10 : 1e-10) * scale;
      inv[i] = 1.0 / e;
    }
    const Vec g = cur->grad;
    const Vec d = -es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose() * g;
    bool accepted = false;
    double s = 1.0;
    for (int half = 0; half < 30; ++half, s *= 0.5) {
      auto trial = search.eval(x + s * d, cur->ev.z.mesh ? &cur->ev.z : nullptr);
      if (!trial) continue;
      const bool ok = opts.saddle_mode ? trial->grad.norm() < g.norm()
                                       : trial->F < cur->F && trial->ev.value < cur->ev.value;
      if (ok) {
        x += s * d;
        cur = std::move(trial);
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    ++out.polish_steps;
    out.value_trace.push_back(cur->ev.value);
    trace(it + out.polish_steps, "polish", s);
  }

  out.xi = cur->ev.xi;
  out.value = cur->ev.value;
  out.gradient_norm = cur->grad_lambda.norm();
  if (!(out.gradient_norm < search.tol())) {
    if (in_barrier_zone(out.xi, dom, h))
      escaped(out.xi, dom, -cur->grad_lambda, "no critical point before the barrier zone");
    std::ostringstream os;
    os << "find_critical stopped at gradient norm " << out.gradient_norm << " > tol " << search.tol()
       << " after " << out.iterations << " descent and " << out.polish_steps << " polish steps";
    throw NonconvergenceError(os.str());
  }

  const Eigen::MatrixXd Hs = lambda_hessian_fd(out.xi, ctx, hs);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Hs);
  const Vec ev = es.eigenvalues();
  out.hessian_eigenvalues.assign(ev.data(), ev.data() + ev.size());
  const double scale = std::max(ev.cwiseAbs().maxCoeff(), 1e-300);
  // O(hs) noise floor of the difference quotient, relative to the spectrum
  const double floor = std::max(1e-6 * scale, ctx.closed_form() ? 1e-8 : 1e-3 * scale);
  if (ev.cwiseAbs().minCoeff() < floor)
    out.classification = "unresolved";
  else if (ev.minCoeff() > 0)
    out.classification = "minimum";
  else
    out.classification = "saddle";
  return out;
}

std::vector<MultistartEntry> find_critical_multistart(const std::vector<ConfigPoints>& seeds,
                                                      const ReducedEnergyContext& ctx,
                                                      const CriticalOptions& opts, int threads) {
  std::vector<MultistartEntry> out(seeds.size());
  CriticalOptions local = opts;
  local.trace = nullptr;  // interleaved traces would be useless
  parallel_for(static_cast<int>(seeds.size()), threads, [&](int i) {
    try {
      out[i].result = find_critical(seeds[i], ctx, local);
    } catch (const Error& e) {
      out[i].error_kind = e.kind();
      out[i].error = e.what();
    }
  });
  return out;
}

}  // namespace toda
