#pragma once

#include <array>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "toda/meanfield.hpp"

namespace toda {

// w_{delta,xi}(x) = log(8 delta^2 / (delta^2 + |x - xi|^2)^2)
double bubble_w(double delta, const Point& xi, const Point& x);
Point bubble_grad_w(double delta, const Point& xi, const Point& x);
// Kernel elements Z^0, Z^1, Z^2 of the linearized Liouville operator.
double bubble_Z(int j, double delta, const Point& xi, const Point& x);
Point bubble_grad_Z(int j, double delta, const Point& xi, const Point& x);

// Pu = u + c with c the discrete harmonic extension of -u|boundary: the
// analytic part carries the singular profile, the correction lives on the
// mesh. Delta Pu = Delta u holds exactly, Pu = 0 on the boundary nodes.
class Projection {
 public:
  using Fn = std::function<double(const Point&)>;
  using GradFn = std::function<Point(const Point&)>;

  Projection() = default;
  Projection(std::shared_ptr<const DirichletOperator> op, Fn u, GradFn grad_u);

  const ScalarField& correction() const { return c_; }
  double analytic(const Point& x) const { return u_(x); }
  double at(const Point& x) const;
  double at(const Point& x, const PointLocation& loc) const;
  Vec nodal() const;
  // Analytic part and correction at the operator's quadrature points.
  Vec at_quad() const;
  // int grad Pu . grad Pv over the mesh (degree-8 quadrature for the
  // analytic gradients). Both projections must share the operator.
  double inner(const Projection& other) const;
  double dirichlet_norm() const { return std::sqrt(std::max(0.0, inner(*this))); }

 private:
  std::shared_ptr<const DirichletOperator> op_;
  Fn u_;
  GradFn grad_u_;
  ScalarField c_;
};

Projection project(std::shared_ptr<const DirichletOperator> op, Projection::Fn u,
                   Projection::GradFn grad_u);

// Plain P1 Galerkin solve of -Delta v = f, v = 0 on the boundary, with f given
// at quadrature points. Reference for the projection on resolved meshes.
ScalarField project_galerkin(const DirichletOperator& op, const Vec& f_at_quad);

struct BubbleParams {
  double lambda = 0;
  std::vector<double> d;      // d_i(xi)
  std::vector<double> delta;  // 4 delta_i^2 = lambda d_i
};

// d_i = exp[8 pi H(xi_i,xi_i) + sum_{j != i} 8 pi G(xi_j,xi_i) - z(xi_i)/2].
// `z` may be empty (z = 0).
BubbleParams delta_from_xi(const ConfigPoints& xi, double lambda, const ScalarField& z,
                           const GreenEvaluator& green);

struct AnsatzOptions {
  double h_far = 0.05;
  double core_radius = 10.0;  // in units of delta
  double core_h = 0.25;       // in units of delta
  double grading = 0.3;
  MeanFieldOptions meanfield;
};

struct Ansatz {
  DomainSpec domain = DomainSpec::unit_disk();
  ConfigPoints xi;
  double lambda = 0, rho2 = 0;
  BubbleParams params;
  std::shared_ptr<const DirichletOperator> op;  // delta-resolved mesh
  GreenEvaluator green = GreenEvaluator::analytic_disk();  // numeric on `op`
  ScalarField z;  // mean field solution on `op`
  double z_energy = 0;
  std::vector<Projection> Pw;
  // at the quadrature points of op->quad()
  std::vector<Vec> ew;  // e^{w_i}
  Vec z_q, h_q;  // z and the vortex weight
  Vec gh_q;      // h e^z / int h e^z
  Vec W1_q, W2_q;
  // nodal composites (zero on the boundary)
  ScalarField W1, W2;

  const Mesh& mesh() const { return op->mesh(); }
  double delta_min() const;
  // Values at an arbitrary point (P1 for the mesh parts).
  double W1_at(const Point& x) const;
  double W2_at(const Point& x) const;
};

Ansatz build_ansatz(const DomainSpec& domain, const ConfigPoints& xi, double lambda, double rho2,
                    const AnsatzOptions& opts = {});

// Same, re-using a z already known on some mesh as the mean field Newton seed.
Ansatz build_ansatz(const DomainSpec& domain, const ConfigPoints& xi, double lambda, double rho2,
                    const AnsatzOptions& opts, const ScalarField* z_seed);

// PZ^j_i on the ansatz mesh, j = 0, 1, 2.
Projection project_Z(const Ansatz& a, int i, int j);

struct ResidualReport {
  double lambda = 0;
  double delta_min = 0;
  double E_p12 = 0, E_p15 = 0;  // ||E||_p
  double E0_inf = 0;
  double Rt_p12 = 0, Rt_p15 = 0;  // ||R~||_p, both components
  double ew2_defect = 0;  // max |e^{W2} - h e^z|
  double mass1 = 0;       // lambda int e^{W1}
  std::vector<double> E_center_scaled;  // |E(xi_i)| delta_i^2
  std::vector<double> Pw_norm;
  std::vector<std::array<double, 3>> PZ_norm;  // j = 0, 1, 2
  double PZ_cross = 0;  // max |<PZ_i^j, PZ_l^m>| over (i,j) != (l,m), j,m in {1,2}
  int nodes = 0;
};

// E = sum e^{w_i} - 2 lambda e^{W1}, E0 = 2 rho2 (e^{W2}/int e^{W2} - h e^z/int h e^z),
// R~ = -Delta W - F(W) = (E + E0/2, -E/2 - E0).
ResidualReport residual_fields(const Ansatz& a);

// Quadrature L^p norm over the ansatz mesh.
double quad_lp(const QuadPoints& q, const Vec& f, double p);

struct ScalingFit {
  double slope = 0, intercept = 0;
  double residual = 0;  // rms of the log-log fit
  int samples = 0;
  double decades = 0;
};
// Least squares log y = a log x + b over positive finite samples. Needs >= 4
// of them spanning >= 2 decades in x.
ScalingFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y);

struct ScalingStudy {
  std::vector<ResidualReport> reports;  // ordered as the lambda list
  std::map<std::string, ScalingFit> fits;
  // |log lambda|-normalized ||Pw||^2 and sqrt(lambda)-normalized ||PZ^1||
  std::vector<double> Pw_ratio, PZ_plateau, PZ_cross_scaled;
};

ScalingStudy norm_scaling_study(const DomainSpec& domain, const ConfigPoints& xi, double rho2,
                                const std::vector<double>& lambdas, const AnsatzOptions& opts = {},
                                int threads = 1);

// Max-norm defects of the projection expansions on the delta-resolved mesh
// around xi:
//   Pw - [w - log 8 delta^2 + 8 pi H(., xi)]   and   PZ^0 - [Z^0 + 1],
// with H the Robin function of the same mesh.
struct ExpansionDefects {
  double delta = 0;
  double pw = 0;
  double pz0 = 0;
  int nodes = 0;
};
ExpansionDefects projection_expansion_defects(const DomainSpec& domain, const Point& xi,
                                              double delta, const AnsatzOptions& opts = {});

// Polar quadrature over the disk of radius R (Gauss-Legendre in r on
// geometric panels, trapezoid in angle).
double integrate_disk_polar(const std::function<double(const Point&)>& f, double R,
                            int panels = 60, int gauss = 16, int angles = 64);

struct MassConstants {
  double R = 0;
  double mass_truncated = 0;   // int_{B_R} (1+|y|^2)^{-2}
  double mass = 0;             // plus the closed-form tail pi/(1+R^2)
  double moment_truncated = 0;  // int_{B_R} y_1^2 (1+|y|^2)^{-3}
  double moment = 0;            // plus its tail
  double log_constant = 0;      // int 8 (1+|y|^2)^{-2} log (1+|y|^2)^{-2}, tail added
};
MassConstants mass_constants(double R);

}  // namespace toda
