#include "toda/fem.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "toda/kernels.hpp"

namespace toda {

// --------------------------------------------------------------- ScalarField

ScalarField ScalarField::zeros(MeshPtr mesh) {
  ScalarField f;
  f.values = Vec::Zero(mesh->num_nodes());
  f.mesh = std::move(mesh);
  f.zero_trace = true;
  return f;
}

ScalarField ScalarField::interpolate(MeshPtr mesh, const std::function<double(const Point&)>& fn) {
  ScalarField f;
  f.values.resize(mesh->num_nodes());
  for (int i = 0; i < mesh->num_nodes(); ++i) f.values[i] = fn(mesh->nodes()[i]);
  f.mesh = std::move(mesh);
  return f;
}

void ScalarField::check(double tol) const {
  if (!mesh) throw DimensionError("field has no mesh");
  if (values.size() != mesh->num_nodes()) throw DimensionError("field length does not match mesh");
  if (zero_trace)
    for (int i = 0; i < mesh->num_nodes(); ++i)
      if (mesh->is_boundary(i) && std::abs(values[i]) > tol)
        throw DimensionError("zero-trace field is nonzero on the boundary");
}

double ScalarField::at(const PointLocation& loc) const {
  const auto& t = mesh->triangles()[loc.triangle];
  return loc.bary[0] * values[t[0]] + loc.bary[1] * values[t[1]] + loc.bary[2] * values[t[2]];
}

double ScalarField::at(const Point& p) const { return at(mesh->locate(p)); }

std::array<Point, 3> hat_gradients(const Mesh& mesh, int t) {
  const auto& tri = mesh.triangles()[t];
  const Point& a = mesh.nodes()[tri[0]];
  const Point& b = mesh.nodes()[tri[1]];
  const Point& c = mesh.nodes()[tri[2]];
  const double inv = 1.0 / (2.0 * mesh.triangle_area(t));
  return {Point((b.y() - c.y()) * inv, (c.x() - b.x()) * inv),
          Point((c.y() - a.y()) * inv, (a.x() - c.x()) * inv),
          Point((a.y() - b.y()) * inv, (b.x() - a.x()) * inv)};
}

// ---------------------------------------------------------- DirichletOperator

DirichletOperator::DirichletOperator(MeshPtr mesh) : mesh_(std::move(mesh)) {
  const Mesh& m = *mesh_;
  const int n = m.num_nodes();
  std::vector<Eigen::Triplet<double>> kt, mt;
  kt.reserve(9 * m.num_triangles());
  mt.reserve(9 * m.num_triangles());
  for (int t = 0; t < m.num_triangles(); ++t) {
    const auto& tri = m.triangles()[t];
    const auto g = hat_gradients(m, t);
    const double A = m.triangle_area(t);
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        kt.emplace_back(tri[a], tri[b], A * g[a].dot(g[b]));
        mt.emplace_back(tri[a], tri[b], A / 12.0 * (a == b ? 2.0 : 1.0));
      }
  }
  K_.resize(n, n);
  K_.setFromTriplets(kt.begin(), kt.end());
  M_.resize(n, n);
  M_.setFromTriplets(mt.begin(), mt.end());

  const auto& idx = m.interior_index();
  const int ni = m.num_interior();
  if (ni == 0) throw AssemblyError("mesh has no interior nodes");
  std::vector<Eigen::Triplet<double>> it;
  it.reserve(K_.nonZeros());
  for (int col = 0; col < K_.outerSize(); ++col)
    for (SpMat::InnerIterator e(K_, col); e; ++e)
      if (idx[e.row()] >= 0 && idx[e.col()] >= 0)
        it.emplace_back(idx[e.row()], idx[e.col()], e.value());
  Kii_.resize(ni, ni);
  Kii_.setFromTriplets(it.begin(), it.end());
  ldlt_.compute(Kii_);
  if (ldlt_.info() != Eigen::Success)
    throw AssemblyError("stiffness factorization failed (broken mesh?)");
  for (int i = 0; i < ni; ++i)
    if (!(ldlt_.vectorD()[i] > 0)) throw AssemblyError("stiffness matrix is not positive definite");
}

Vec DirichletOperator::solve_interior(const Vec& load) const {
  Vec u = ldlt_.solve(load);
  // one step of iterative refinement
  const Vec r = load - Kii_ * u;
  u += ldlt_.solve(r);
  return u;
}

Vec DirichletOperator::solve_load(const Vec& load_full) const {
  return extend_interior(*mesh_, solve_interior(restrict_interior(*mesh_, load_full)));
}

Vec DirichletOperator::harmonic_extension(const Vec& values) const {
  const Mesh& m = *mesh_;
  Vec g = Vec::Zero(m.num_nodes());
  for (int i = 0; i < m.num_nodes(); ++i)
    if (m.is_boundary(i)) g[i] = values[i];
  const Vec r = K_ * g;
  Vec u = extend_interior(m, solve_interior(-restrict_interior(m, r)));
  return u + g;
}

double DirichletOperator::energy(const Vec& u) const { return u.dot(K_ * u); }

const QuadPoints& DirichletOperator::quad() const {
  std::call_once(quad_once_, [this] {
    quad_ = std::make_unique<QuadPoints>(make_quadrature(*mesh_, rule_degree8()));
  });
  return *quad_;
}

Vec restrict_interior(const Mesh& mesh, const Vec& full) {
  Vec out(mesh.num_interior());
  const auto& nodes = mesh.interior_nodes();
  for (int i = 0; i < mesh.num_interior(); ++i) out[i] = full[nodes[i]];
  return out;
}

SpMat restrict_interior(const Mesh& m, const SpMat& F) {
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(F.nonZeros());
  const auto& idx = m.interior_index();
  for (int c = 0; c < F.outerSize(); ++c)
    for (SpMat::InnerIterator e(F, c); e; ++e)
      if (idx[e.row()] >= 0 && idx[e.col()] >= 0) t.emplace_back(idx[e.row()], idx[e.col()], e.value());
  SpMat R(m.num_interior(), m.num_interior());
  R.setFromTriplets(t.begin(), t.end());
  return R;
}

Vec extend_interior(const Mesh& mesh, const Vec& interior) {
  Vec out = Vec::Zero(mesh.num_nodes());
  const auto& nodes = mesh.interior_nodes();
  for (int i = 0; i < mesh.num_interior(); ++i) out[nodes[i]] = interior[i];
  return out;
}

// ------------------------------------------------------- quadrature helpers

Vec interpolate_at(const QuadPoints& q, const Mesh& mesh, const Vec& nodal) {
  Vec out(q.size());
  const auto& tris = mesh.triangles();
  for (std::size_t k = 0; k < q.size(); ++k) {
    const auto& t = tris[q.tri[k]];
    out[k] = q.l0[k] * nodal[t[0]] + q.l1[k] * nodal[t[1]] + q.l2[k] * nodal[t[2]];
  }
  return out;
}

Vec assemble_load(const QuadPoints& q, const Mesh& mesh, const Vec& f) {
  Vec b = Vec::Zero(mesh.num_nodes());
  const auto& tris = mesh.triangles();
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    double s0 = 0, s1 = 0, s2 = 0;
    for (int k = q.offset[t]; k < q.offset[t + 1]; ++k) {
      const double wf = q.w[k] * f[k];
      s0 += wf * q.l0[k];
      s1 += wf * q.l1[k];
      s2 += wf * q.l2[k];
    }
    b[tris[t][0]] += s0;
    b[tris[t][1]] += s1;
    b[tris[t][2]] += s2;
  }
  return b;
}

SpMat assemble_weighted_mass(const QuadPoints& q, const Mesh& mesh, const Vec& c) {
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(9 * mesh.num_triangles());
  const auto& tris = mesh.triangles();
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    double m[3][3] = {};
    for (int k = q.offset[t]; k < q.offset[t + 1]; ++k) {
      const double wc = q.w[k] * c[k];
      const double l[3] = {q.l0[k], q.l1[k], q.l2[k]};
      for (int a = 0; a < 3; ++a)
        for (int b = a; b < 3; ++b) m[a][b] += wc * l[a] * l[b];
    }
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        trip.emplace_back(tris[t][a], tris[t][b], a <= b ? m[a][b] : m[b][a]);
  }
  SpMat M(mesh.num_nodes(), mesh.num_nodes());
  M.setFromTriplets(trip.begin(), trip.end());
  return M;
}

double quad_sum(const QuadPoints& q, const Vec& f) {
  return kernels::dot(q.w.data(), f.data(), q.size());
}

// ------------------------------------------------------------- operations

double integrate(const Mesh& mesh, const ScalarField& field) {
  if (field.mesh.get() != &mesh) throw DimensionError("field belongs to a different mesh");
  field.check(std::numeric_limits<double>::infinity());
  double s = 0;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles()[t];
    s += mesh.triangle_area(t) *
         (field.values[tri[0]] + field.values[tri[1]] + field.values[tri[2]]) / 3.0;
  }
  return s;
}

ScalarField solve_poisson(const DirichletOperator& op, const ScalarField& rhs) {
  if (rhs.mesh.get() != &op.mesh()) throw DimensionError("rhs belongs to a different mesh");
  rhs.check(std::numeric_limits<double>::infinity());
  ScalarField u;
  u.mesh = op.mesh_ptr();
  u.values = op.solve_load(op.mass() * rhs.values);
  u.zero_trace = true;
  return u;
}

RecoveredGradient gradient_at(const ScalarField& field, const Point& p) {
  const Mesh& m = *field.mesh;
  const auto loc = m.locate(p);
  const auto& tri0 = m.triangles()[loc.triangle];
  RecoveredGradient out;
  // star averages at the three vertices, blended with the barycentrics so the
  // result is continuous in p
  for (int a = 0; a < 3; ++a) {
    const int v = tri0[a];
    if (loc.bary[a] == 0.0) continue;
    Point gv = Point::Zero();
    double area = 0;
    for (int k = m.node_tri_offsets()[v]; k < m.node_tri_offsets()[v + 1]; ++k) {
      const int t = m.node_tris()[k];
      const auto g = hat_gradients(m, t);
      const auto& tri = m.triangles()[t];
      Point gt = Point::Zero();
      for (int b = 0; b < 3; ++b) {
        gt += field.values[tri[b]] * g[b];
        if (m.is_boundary(tri[b])) out.accuracy_warning = true;
      }
      gv += m.triangle_area(t) * gt;
      area += m.triangle_area(t);
    }
    out.value += loc.bary[a] * gv / area;
  }
  return out;
}

double recovered_value(const ScalarField& field, const Point& p) {
  const Mesh& m = *field.mesh;
  const auto loc = m.locate(p);
  std::vector<int> nodes;
  for (int v : m.triangles()[loc.triangle])
    for (int k = m.node_tri_offsets()[v]; k < m.node_tri_offsets()[v + 1]; ++k)
      for (int w : m.triangles()[m.node_tris()[k]]) nodes.push_back(w);
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  if (nodes.size() < 8) return field.at(loc);
  const auto& tri = m.triangles()[loc.triangle];
  const double scale = (m.nodes()[tri[0]] - m.nodes()[tri[1]]).norm();
  Eigen::MatrixXd A(nodes.size(), 6);
  Vec b(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const Point d = (m.nodes()[nodes[i]] - p) / scale;
    A.row(i) << 1.0, d.x(), d.y(), d.x() * d.x(), d.x() * d.y(), d.y() * d.y();
    b[i] = field.values[nodes[i]];
  }
  const Vec c = A.colPivHouseholderQr().solve(b);
  return c[0];
}

double lp_norm(const ScalarField& field, double p) {
  if (!(p >= 1)) throw ArgumentError("lp_norm needs p >= 1");
  field.check(std::numeric_limits<double>::infinity());
  if (std::isinf(p)) return field.values.size() ? field.values.cwiseAbs().maxCoeff() : 0.0;
  const QuadPoints q = make_quadrature(*field.mesh, rule_degree5());
  const Vec f = interpolate_at(q, *field.mesh, field.values);
  double s = 0;
  for (std::size_t k = 0; k < q.size(); ++k) s += q.w[k] * std::pow(std::abs(f[k]), p);
  return std::pow(s, 1.0 / p);
}

double h1_norm(const DirichletOperator& op, const ScalarField& field) {
  if (field.mesh.get() != &op.mesh()) throw DimensionError("field belongs to a different mesh");
  return std::sqrt(std::max(0.0, op.energy(field.values)));
}

Vec transfer(const ScalarField& field, const Mesh& target, double outside_value) {
  Vec out(target.num_nodes());
  PointLocation loc;
  for (int i = 0; i < target.num_nodes(); ++i)
    out[i] = field.mesh->try_locate(target.nodes()[i], loc) ? field.at(loc) : outside_value;
  return out;
}

}  // namespace toda
