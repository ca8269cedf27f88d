#include "toda/ansatz.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "toda/kernels.hpp"
#include "toda/parallel.hpp"

namespace toda {

double bubble_w(double delta, const Point& xi, const Point& x) {
  if (!(delta > 0)) throw ArgumentError("bubble scale delta must be positive");
  const double d2 = delta * delta;
  const double s = d2 + (x - xi).squaredNorm();
  return std::log(8.0 * d2) - 2.0 * std::log(s);
}

Point bubble_grad_w(double delta, const Point& xi, const Point& x) {
  const Point d = x - xi;
  return -4.0 * d / (delta * delta + d.squaredNorm());
}

double bubble_Z(int j, double delta, const Point& xi, const Point& x) {
  const Point d = x - xi;
  const double s = delta * delta + d.squaredNorm();
  switch (j) {
    case 0: return (delta * delta - d.squaredNorm()) / s;
    case 1: return d.x() / s;
    case 2: return d.y() / s;
  }
  throw ArgumentError("Z index must be 0, 1 or 2");
}

Point bubble_grad_Z(int j, double delta, const Point& xi, const Point& x) {
  const Point d = x - xi;
  const double d2 = delta * delta;
  const double s = d2 + d.squaredNorm();
  switch (j) {
    case 0: return -4.0 * d2 * d / (s * s);
    case 1: return Point(1.0 / s, 0.0) - 2.0 * d.x() * d / (s * s);
    case 2: return Point(0.0, 1.0 / s) - 2.0 * d.y() * d / (s * s);
  }
  throw ArgumentError("Z index must be 0, 1 or 2");
}

// --- projections -----------------------------------------------------------

Projection::Projection(std::shared_ptr<const DirichletOperator> op, Fn u, GradFn grad_u)
    : op_(std::move(op)), u_(std::move(u)), grad_u_(std::move(grad_u)) {
  const Mesh& m = op_->mesh();
  Vec g = Vec::Zero(m.num_nodes());
  for (int i = 0; i < m.num_nodes(); ++i)
    if (m.is_boundary(i)) g[i] = -u_(m.nodes()[i]);
  c_.mesh = op_->mesh_ptr();
  c_.values = op_->harmonic_extension(g);
  c_.zero_trace = false;
}

double Projection::at(const Point& x) const { return u_(x) + c_.at(x); }

double Projection::at(const Point& x, const PointLocation& loc) const { return u_(x) + c_.at(loc); }

Vec Projection::nodal() const {
  const Mesh& m = op_->mesh();
  Vec v(m.num_nodes());
  for (int i = 0; i < m.num_nodes(); ++i) v[i] = m.is_boundary(i) ? 0.0 : u_(m.nodes()[i]) + c_.values[i];
  return v;
}

Vec Projection::at_quad() const {
  const auto& q = op_->quad();
  Vec v = interpolate_at(q, op_->mesh(), c_.values);
  for (std::size_t k = 0; k < q.size(); ++k) v[k] += u_(Point(q.x[k], q.y[k]));
  return v;
}

double Projection::inner(const Projection& o) const {
  if (op_ != o.op_) throw DimensionError("projections live on different operators");
  const Mesh& m = op_->mesh();
  const auto& q = op_->quad();
  double s = 0;
  for (int t = 0; t < m.num_triangles(); ++t) {
    const auto g = hat_gradients(m, t);
    const auto& tri = m.triangles()[t];
    Point ca = Point::Zero(), cb = Point::Zero();
    for (int a = 0; a < 3; ++a) {
      ca += c_.values[tri[a]] * g[a];
      cb += o.c_.values[tri[a]] * g[a];
    }
    for (int k = q.offset[t]; k < q.offset[t + 1]; ++k) {
      const Point x(q.x[k], q.y[k]);
      s += q.w[k] * (grad_u_(x) + ca).dot(o.grad_u_(x) + cb);
    }
  }
  return s;
}

Projection project(std::shared_ptr<const DirichletOperator> op, Projection::Fn u,
                   Projection::GradFn grad_u) {
  return Projection(std::move(op), std::move(u), std::move(grad_u));
}

ScalarField project_galerkin(const DirichletOperator& op, const Vec& f_at_quad) {
  if (static_cast<std::size_t>(f_at_quad.size()) != op.quad().size())
    throw DimensionError("right-hand side is not sampled at the operator's quadrature points");
  ScalarField out;
  out.mesh = op.mesh_ptr();
  out.values = op.solve_load(assemble_load(op.quad(), op.mesh(), f_at_quad));
  out.zero_trace = true;
  return out;
}

// --- concentration parameters -----------------------------------------------

namespace {

// H(x, y) with the P1 value of the numeric field (consistent with the
// projections), closed form otherwise.
double robin_p1(const GreenEvaluator& g, const Point& x, const Point& y) {
  if (g.mode() == GreenEvaluator::Mode::AnalyticDisk) return g.robin_H(x, y);
  ScalarField f;
  f.mesh = g.op()->mesh_ptr();
  f.values = *g.robin_field(y);
  return f.at(x);
}

}  // namespace

BubbleParams delta_from_xi(const ConfigPoints& xi, double lambda, const ScalarField& z,
                           const GreenEvaluator& green) {
  if (!(lambda > 0)) throw ArgumentError("lambda must be positive");
  xi.validate(green.domain());
  BubbleParams bp;
  bp.lambda = lambda;
  for (int i = 0; i < xi.k(); ++i) {
    double e = 8 * kPi * robin_p1(green, xi[i], xi[i]);
    for (int j = 0; j < xi.k(); ++j) {
      if (j == i) continue;
      e += 8 * kPi * (-std::log((xi[j] - xi[i]).norm()) / (2 * kPi) + robin_p1(green, xi[j], xi[i]));
    }
    if (z.mesh) e -= 0.5 * z.at(xi[i]);
    bp.d.push_back(std::exp(e));
    bp.delta.push_back(0.5 * std::sqrt(lambda * bp.d.back()));
  }
  return bp;
}

// --- ansatz -------------------------------------------------------------------

double Ansatz::delta_min() const {
  return *std::min_element(params.delta.begin(), params.delta.end());
}

double Ansatz::W1_at(const Point& x) const {
  const auto loc = mesh().locate(x);
  double s = 0;
  for (const auto& p : Pw) s += p.at(x, loc);
  return s - 0.5 * z.at(loc);
}

double Ansatz::W2_at(const Point& x) const {
  const auto loc = mesh().locate(x);
  double s = 0;
  for (const auto& p : Pw) s += p.at(x, loc);
  return -0.5 * s + z.at(loc);
}

Ansatz build_ansatz(const DomainSpec& domain, const ConfigPoints& xi, double lambda, double rho2,
                    const AnsatzOptions& opts) {
  return build_ansatz(domain, xi, lambda, rho2, opts, nullptr);
}

Ansatz build_ansatz(const DomainSpec& domain, const ConfigPoints& xi, double lambda, double rho2,
                    const AnsatzOptions& opts, const ScalarField* z_seed) {
  if (!(lambda > 0)) throw ArgumentError("lambda must be positive");
  xi.validate(domain);
  Ansatz a;
  a.domain = domain;
  a.xi = xi;
  a.lambda = lambda;
  a.rho2 = rho2;

  // Coarse pass for the bubble scales, which fix the refinement.
  auto base = std::make_shared<const Mesh>(build_mesh(domain, opts.h_far));
  ScalarField z0;
  BubbleParams guess;
  {
    auto op0 = std::make_shared<const DirichletOperator>(base);
    const auto g0 = GreenEvaluator::numeric(op0, domain);
    if (rho2 > 0) {
      MeanFieldProblem pb(op0, g0, xi, rho2);
      z0 = solve_meanfield(pb, nullptr, opts.meanfield).z;
    }
    guess = delta_from_xi(xi, lambda, z0, g0);
  }
  std::vector<RefinementBall> balls;
  for (int i = 0; i < xi.k(); ++i)
    balls.push_back({xi[i], opts.core_radius * guess.delta[i], opts.core_h * guess.delta[i]});
  auto mesh = std::make_shared<const Mesh>(
      refine_mesh(*base, domain, graded_size(balls, opts.h_far, opts.grading)));
  a.op = std::make_shared<const DirichletOperator>(mesh);
  a.green = GreenEvaluator::numeric(a.op, domain);
  const Mesh& m = *mesh;
  const auto& q = a.op->quad();
  const std::size_t nq = q.size();

  MeanFieldProblem pb(a.op, a.green, xi, rho2);
  a.h_q = pb.h_at_quad();
  if (rho2 > 0) {
    ScalarField seed;
    const ScalarField* src = z_seed && z_seed->mesh ? z_seed : &z0;
    seed.mesh = mesh;
    seed.values = transfer(*src, m, 0.0);
    for (int i = 0; i < m.num_nodes(); ++i)
      if (m.is_boundary(i)) seed.values[i] = 0.0;
    seed.zero_trace = true;
    auto sol = solve_meanfield(pb, &seed, opts.meanfield);
    a.z = std::move(sol.z);
    a.z_energy = sol.energy;
  } else {
    a.z = ScalarField::zeros(mesh);
  }
  a.params = delta_from_xi(xi, lambda, a.z, a.green);

  a.z_q = interpolate_at(q, m, a.z.values);
  {
    Vec e(nq);
    kernels::vexp(a.z_q.data(), e.data(), nq);
    kernels::mul_inplace(e.data(), a.h_q.data(), nq);
    a.gh_q = e / quad_sum(q, e);
  }

  Vec sumPw = Vec::Zero(nq);
  Vec sumPw_nodal = Vec::Zero(m.num_nodes());
  for (int i = 0; i < xi.k(); ++i) {
    const double d = a.params.delta[i];
    const Point c = xi[i];
    a.Pw.push_back(project(
        a.op, [d, c](const Point& x) { return bubble_w(d, c, x); },
        [d, c](const Point& x) { return bubble_grad_w(d, c, x); }));
    Vec ew(nq);
    kernels::bubble_density(q.x.data(), q.y.data(), nq, c.x(), c.y(), d * d, ew.data());
    // w = log e^w keeps the analytic part and the density in step
    Vec pw = interpolate_at(q, m, a.Pw.back().correction().values);
    for (std::size_t k = 0; k < nq; ++k) pw[k] += std::log(ew[k]);
    sumPw += pw;
    sumPw_nodal += a.Pw.back().nodal();
    a.ew.push_back(std::move(ew));
  }
  a.W1_q = sumPw - 0.5 * a.z_q;
  a.W2_q = -0.5 * sumPw + a.z_q;
  a.W1 = ScalarField{mesh, sumPw_nodal - 0.5 * a.z.values, true};
  a.W2 = ScalarField{mesh, -0.5 * sumPw_nodal + a.z.values, true};
  return a;
}

Projection project_Z(const Ansatz& a, int i, int j) {
  if (i < 0 || i >= a.xi.k()) throw ArgumentError("bubble index out of range");
  const double d = a.params.delta[i];
  const Point c = a.xi[i];
  return project(
      a.op, [=](const Point& x) { return bubble_Z(j, d, c, x); },
      [=](const Point& x) { return bubble_grad_Z(j, d, c, x); });
}

// --- residuals ----------------------------------------------------------------

double quad_lp(const QuadPoints& q, const Vec& f, double p) {
  if (!(p >= 1)) throw ArgumentError("L^p norm needs p >= 1");
  double s = 0;
  for (std::size_t k = 0; k < q.size(); ++k) s += q.w[k] * std::pow(std::abs(f[k]), p);
  return std::pow(s, 1.0 / p);
}

ResidualReport residual_fields(const Ansatz& a) {
  const auto& q = a.op->quad();
  const std::size_t nq = q.size();
  ResidualReport r;
  r.lambda = a.lambda;
  r.delta_min = a.delta_min();
  r.nodes = a.mesh().num_nodes();

  Vec eW1(nq), eW2(nq);
  kernels::vexp(a.W1_q.data(), eW1.data(), nq);
  kernels::vexp(a.W2_q.data(), eW2.data(), nq);
  Vec E = -2.0 * a.lambda * eW1;
  for (const auto& ew : a.ew) E += ew;
  const Vec E0 = 2.0 * a.rho2 * (eW2 / quad_sum(q, eW2) - a.gh_q);
  const Vec R1 = E + 0.5 * E0;
  const Vec R2 = -0.5 * E - E0;

  r.E_p12 = quad_lp(q, E, 1.2);
  r.E_p15 = quad_lp(q, E, 1.5);
  r.E0_inf = E0.cwiseAbs().maxCoeff();
  auto both = [&](double p) {
    return std::pow(std::pow(quad_lp(q, R1, p), p) + std::pow(quad_lp(q, R2, p), p), 1.0 / p);
  };
  r.Rt_p12 = both(1.2);
  r.Rt_p15 = both(1.5);
  Vec hez(nq);
  kernels::vexp(a.z_q.data(), hez.data(), nq);
  kernels::mul_inplace(hez.data(), a.h_q.data(), nq);
  r.ew2_defect = (eW2 - hez).cwiseAbs().maxCoeff();
  r.mass1 = a.lambda * quad_sum(q, eW1);

  for (int i = 0; i < a.xi.k(); ++i) {
    const Point& c = a.xi[i];
    double e = 0;
    for (int j = 0; j < a.xi.k(); ++j) e += std::exp(bubble_w(a.params.delta[j], a.xi[j], c));
    e -= 2.0 * a.lambda * std::exp(a.W1_at(c));
    r.E_center_scaled.push_back(std::abs(e) * a.params.delta[i] * a.params.delta[i]);
  }

  std::vector<Projection> pz;
  for (int i = 0; i < a.xi.k(); ++i) {
    r.Pw_norm.push_back(a.Pw[i].dirichlet_norm());
    std::array<double, 3> n{};
    for (int j = 0; j < 3; ++j) {
      auto p = project_Z(a, i, j);
      n[j] = p.dirichlet_norm();
      if (j > 0) pz.push_back(std::move(p));
    }
    r.PZ_norm.push_back(n);
  }
  for (std::size_t s = 0; s < pz.size(); ++s)
    for (std::size_t t = s + 1; t < pz.size(); ++t)
      r.PZ_cross = std::max(r.PZ_cross, std::abs(pz[s].inner(pz[t])));
  return r;
}

// --- scaling fits -------------------------------------------------------------

ScalingFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw DimensionError("fit_loglog: size mismatch");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] > 0 && y[i] > 0 && std::isfinite(x[i]) && std::isfinite(y[i])) {
      lx.push_back(std::log(x[i]));
      ly.push_back(std::log(y[i]));
    }
  ScalingFit f;
  f.samples = static_cast<int>(lx.size());
  if (f.samples >= 1)
    f.decades = (*std::max_element(lx.begin(), lx.end()) - *std::min_element(lx.begin(), lx.end())) /
                std::log(10.0);
  if (f.samples < 4 || f.decades < 2.0 - 1e-9) {
    std::ostringstream os;
    os << "insufficient data for a scaling fit: " << f.samples << " usable samples over "
       << f.decades << " decades (need 4 over 2)";
    throw InsufficientDataError(os.str());
  }
  const int n = f.samples;
  double mx = 0, my = 0;
  for (int i = 0; i < n; ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (int i = 0; i < n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double rr = 0;
  for (int i = 0; i < n; ++i) rr += std::pow(ly[i] - f.intercept - f.slope * lx[i], 2);
  f.residual = std::sqrt(rr / n);
  return f;
}

ScalingStudy norm_scaling_study(const DomainSpec& domain, const ConfigPoints& xi, double rho2,
                                const std::vector<double>& lambdas, const AnsatzOptions& opts,
                                int threads) {
  ScalingStudy st;
  {
    // fail before the expensive part
    std::vector<double> ones(lambdas.size(), 1.0);
    fit_loglog(lambdas, ones);
  }
  st.reports.resize(lambdas.size());
  parallel_for(static_cast<int>(lambdas.size()), threads, [&](int i) {
    st.reports[i] = residual_fields(build_ansatz(domain, xi, lambdas[i], rho2, opts));
  });
  auto column = [&](auto get) {
    std::vector<double> v;
    for (const auto& r : st.reports) v.push_back(get(r));
    return v;
  };
  auto fit = [&](const std::string& name, auto get) {
    try {
      st.fits[name] = fit_loglog(lambdas, column(get));
    } catch (const InsufficientDataError&) {
      // a quantity that vanishes identically (E0 at rho2 = 0) has no slope
    }
  };
  fit("E_p1.2", [](const ResidualReport& r) { return r.E_p12; });
  fit("E_p1.5", [](const ResidualReport& r) { return r.E_p15; });
  fit("E0_inf", [](const ResidualReport& r) { return r.E0_inf; });
  fit("Rt_p1.2", [](const ResidualReport& r) { return r.Rt_p12; });
  fit("Rt_p1.5", [](const ResidualReport& r) { return r.Rt_p15; });
  fit("ew2_defect", [](const ResidualReport& r) { return r.ew2_defect; });
  fit("PZ1", [](const ResidualReport& r) { return r.PZ_norm[0][1]; });
  fit("Pw", [](const ResidualReport& r) { return r.Pw_norm[0]; });
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    const auto& r = st.reports[i];
    st.Pw_ratio.push_back(r.Pw_norm[0] * r.Pw_norm[0] / std::abs(std::log(lambdas[i])));
    st.PZ_plateau.push_back(r.PZ_norm[0][1] * std::sqrt(lambdas[i]));
    st.PZ_cross_scaled.push_back(r.PZ_cross * lambdas[i]);
  }
  return st;
}

// --- projection expansions -------------------------------------------------------

ExpansionDefects projection_expansion_defects(const DomainSpec& domain, const Point& xi,
                                              double delta, const AnsatzOptions& opts) {
  if (!(delta > 0)) throw ArgumentError("delta must be positive");
  auto base = std::make_shared<const Mesh>(build_mesh(domain, opts.h_far));
  auto mesh = std::make_shared<const Mesh>(refine_mesh(
      *base, domain,
      graded_size({{xi, opts.core_radius * delta, opts.core_h * delta}}, opts.h_far, opts.grading)));
  auto op = std::make_shared<const DirichletOperator>(mesh);
  const auto green = GreenEvaluator::numeric(op, domain);
  const Vec& H = *green.robin_field(xi);
  const auto pw = project(
      op, [=](const Point& x) { return bubble_w(delta, xi, x); },
      [=](const Point& x) { return bubble_grad_w(delta, xi, x); });
  const auto pz = project(
      op, [=](const Point& x) { return bubble_Z(0, delta, xi, x); },
      [=](const Point& x) { return bubble_grad_Z(0, delta, xi, x); });
  ExpansionDefects d;
  d.delta = delta;
  d.nodes = mesh->num_nodes();
  const double l8 = std::log(8 * delta * delta);
  // Pw - w = c and PZ0 - Z0 = c at every node
  for (int i = 0; i < mesh->num_nodes(); ++i) {
    d.pw = std::max(d.pw, std::abs(pw.correction().values[i] - (-l8 + 8 * kPi * H[i])));
    d.pz0 = std::max(d.pz0, std::abs(pz.correction().values[i] - 1.0));
  }
  return d;
}

// --- mass constants ----------------------------------------------------------------

double integrate_disk_polar(const std::function<double(const Point&)>& f, double R, int panels,
                            int gauss, int angles) {
  std::vector<double> gx, gw;
  gauss_legendre(gauss, gx, gw);
  // geometric panels from R down to R * 1e-8, then [0, R * 1e-8]
  std::vector<double> edges{0.0};
  const double rmin = std::min(R, 1.0) * 1e-6;
  for (int p = 0; p <= panels; ++p) edges.push_back(rmin * std::pow(R / rmin, double(p) / panels));
  double s = 0;
  for (std::size_t e = 0; e + 1 < edges.size(); ++e) {
    const double a = edges[e], b = edges[e + 1];
    for (int g = 0; g < gauss; ++g) {
      const double r = 0.5 * (a + b) + 0.5 * (b - a) * gx[g];
      double ring = 0;
      for (int t = 0; t < angles; ++t) {
        const double th = 2 * kPi * (t + 0.5) / angles;
        ring += f(Point(r * std::cos(th), r * std::sin(th)));
      }
      s += 0.5 * (b - a) * gw[g] * r * ring * (2 * kPi / angles);
    }
  }
  return s;
}

MassConstants mass_constants(double R) {
  if (!(R > 0)) throw ArgumentError("truncation radius must be positive");
  MassConstants c;
  c.R = R;
  const double S = 1 + R * R;
  c.mass_truncated = integrate_disk_polar([](const Point& y) { return std::pow(1 + y.squaredNorm(), -2); }, R);
  c.mass = c.mass_truncated + kPi / S;
  c.moment_truncated = integrate_disk_polar(
      [](const Point& y) { return y.x() * y.x() * std::pow(1 + y.squaredNorm(), -3); }, R);
  c.moment = c.moment_truncated + 0.5 * kPi * (1 / S - 0.5 / (S * S));
  const double lt = integrate_disk_polar(
      [](const Point& y) {
        const double s = 1 + y.squaredNorm();
        return 8 / (s * s) * -2 * std::log(s);
      },
      R);
  c.log_constant = lt - 16 * kPi * (std::log(S) + 1) / S;
  return c;
}

}  // namespace toda
