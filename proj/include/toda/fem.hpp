#pragma once

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <functional>
#include <memory>
#include <mutex>

#include "toda/mesh.hpp"
#include "toda/quadrature.hpp"

namespace toda {

using SpMat = Eigen::SparseMatrix<double>;

// P1 nodal field. `zero_trace` tags members of the discrete H^1_0.
struct ScalarField {
  MeshPtr mesh;
  Vec values;
  bool zero_trace = false;

  static ScalarField zeros(MeshPtr mesh);
  static ScalarField interpolate(MeshPtr mesh, const std::function<double(const Point&)>& f);

  // Throws DimensionError if values/mesh disagree or a zero-trace field is
  // nonzero on the boundary (beyond tol).
  void check(double tol = 0.0) const;
  double at(const Point& p) const;
  double at(const PointLocation& loc) const;
};

// Per-triangle gradients of the three barycentric hat functions.
std::array<Point, 3> hat_gradients(const Mesh& mesh, int t);

class DirichletOperator {
 public:
  explicit DirichletOperator(MeshPtr mesh);

  const Mesh& mesh() const { return *mesh_; }
  const MeshPtr& mesh_ptr() const { return mesh_; }
  // Full node-by-node matrices.
  const SpMat& stiffness() const { return K_; }
  const SpMat& mass() const { return M_; }
  // Interior block K_II.
  const SpMat& stiffness_interior() const { return Kii_; }

  // Solves K_II u = load_I. Thread-safe.
  Vec solve_interior(const Vec& load_interior) const;
  // Zero-trace solution for a full nodal load vector (boundary rows ignored).
  Vec solve_load(const Vec& load_full) const;
  // Discrete harmonic extension of the boundary entries of `values`.
  Vec harmonic_extension(const Vec& values) const;
  // u^T K u
  double energy(const Vec& u) const;

  // Degree-8 quadrature on this mesh, built on first use.
  const QuadPoints& quad() const;

 private:
  MeshPtr mesh_;
  SpMat K_, M_, Kii_;
  Eigen::SimplicialLDLT<SpMat> ldlt_;
  mutable std::once_flag quad_once_;
  mutable std::unique_ptr<QuadPoints> quad_;
};

Vec restrict_interior(const Mesh& mesh, const Vec& full);
// Interior-by-interior block of a full node-by-node matrix.
SpMat restrict_interior(const Mesh& mesh, const SpMat& full);
Vec extend_interior(const Mesh& mesh, const Vec& interior);

// Values of a nodal field at quadrature points.
Vec interpolate_at(const QuadPoints& q, const Mesh& mesh, const Vec& nodal);
// Full nodal load b_a = sum_q w_q f_q phi_a(x_q).
Vec assemble_load(const QuadPoints& q, const Mesh& mesh, const Vec& f_at_points);
// Full weighted mass matrix M_ab = sum_q w_q c_q phi_a phi_b.
SpMat assemble_weighted_mass(const QuadPoints& q, const Mesh& mesh, const Vec& c_at_points);
// sum_q w_q f_q
double quad_sum(const QuadPoints& q, const Vec& f_at_points);

// Exact integral of the P1 interpolant.
double integrate(const Mesh& mesh, const ScalarField& field);

ScalarField solve_poisson(const DirichletOperator& op, const ScalarField& rhs);

struct RecoveredGradient {
  Point value = Point::Zero();
  bool accuracy_warning = false;  // patch touches the boundary
};
// Patch-recovered gradient: area-weighted averages of the element gradients
// over each vertex star of the triangle containing p, interpolated linearly.
// Continuous in p; equals the star average when p is a node.
RecoveredGradient gradient_at(const ScalarField& field, const Point& p);

// Value at p from a least-squares quadratic fit to the nodal values on the
// same patch; O(h^3) for smooth fields where plain interpolation is O(h^2).
double recovered_value(const ScalarField& field, const Point& p);

// p >= 1, or p = infinity (nodal maximum).
double lp_norm(const ScalarField& field, double p);
double h1_norm(const DirichletOperator& op, const ScalarField& field);

// Nodal transfer to another mesh by interpolation; nodes of `target` that
// fall outside the source mesh get `outside_value`.
Vec transfer(const ScalarField& field, const Mesh& target, double outside_value = 0.0);

}  // namespace toda
