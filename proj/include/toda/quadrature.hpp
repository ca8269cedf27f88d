#pragma once

#include <array>
#include <vector>

#include "toda/mesh.hpp"

namespace toda {

struct TriangleRule {
  std::vector<std::array<double, 3>> bary;
  std::vector<double> weight;  // sums to 1 (area-normalized)
  int degree = 0;
};

// 3-point edge-midpoint rule, exact for degree 2.
const TriangleRule& rule_edge_midpoint();
// 7-point Dunavant rule, degree 5.
const TriangleRule& rule_degree5();
// 16-point Dunavant rule, degree 8, positive weights.
const TriangleRule& rule_degree8();

// All quadrature points of a mesh, structure-of-arrays. Weights include the
// triangle area. Points of triangle t occupy [offset[t], offset[t+1]).
struct QuadPoints {
  std::vector<double> x, y, w;
  std::vector<double> l0, l1, l2;  // barycentric coordinates in the owning triangle
  std::vector<int> tri;
  std::vector<int> offset;
  std::size_t size() const { return w.size(); }
};

// `levels`, if given, holds a per-triangle uniform subdivision depth (each
// level splits a triangle into four).
QuadPoints make_quadrature(const Mesh& mesh, const TriangleRule& rule,
                           const std::vector<int>* levels = nullptr);

// Points covering the slivers between the boundary chords of `mesh` and the
// curved boundary of `domain` (unit disk only; empty for polygons). tri and
// l0..l2 refer to the adjacent boundary triangle, the barycentrics are its
// linear extension. offset is left empty.
QuadPoints boundary_sliver_quadrature(const Mesh& mesh, const DomainSpec& domain, int n_theta = 6,
                                      int n_r = 4);

// 1D Gauss-Legendre nodes and weights on [-1, 1].
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w);

}  // namespace toda
