#pragma once

#include <array>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "toda/common.hpp"

namespace toda {

class DomainSpec {
 public:
  enum class Kind { UnitDisk, Rectangle, Polygon };

  static DomainSpec unit_disk();
  // [0,width] x [0,height]
  static DomainSpec rectangle(double width, double height);
  // Counterclockwise simple polygon; throws MeshError otherwise.
  static DomainSpec polygon(std::vector<Point> vertices);

  Kind kind() const { return kind_; }
  double width() const { return width_; }
  double height() const { return height_; }
  const std::vector<Point>& vertices() const { return vertices_; }

  // Negative inside, positive outside.
  double signed_distance(const Point& p) const;
  Point project_to_boundary(const Point& p) const;
  double distance_to_boundary(const Point& p) const { return -signed_distance(p); }
  bool contains(const Point& p, double tol = 0.0) const { return signed_distance(p) <= tol; }
  double diameter() const;
  double area() const;
  Point bbox_min() const;
  Point bbox_max() const;
  std::string describe() const;

 private:
  Kind kind_ = Kind::UnitDisk;
  double width_ = 0, height_ = 0;
  std::vector<Point> vertices_;  // polygon corners (also filled for rectangles)
};

struct PointLocation {
  int triangle = -1;
  std::array<double, 3> bary{};
};

class Mesh {
 public:
  Mesh(std::vector<Point> nodes, std::vector<std::array<int, 3>> triangles,
       std::vector<char> boundary);

  const std::vector<Point>& nodes() const { return nodes_; }
  const std::vector<std::array<int, 3>>& triangles() const { return triangles_; }
  const std::vector<char>& boundary_mask() const { return boundary_; }
  int num_nodes() const { return static_cast<int>(nodes_.size()); }
  int num_triangles() const { return static_cast<int>(triangles_.size()); }
  bool is_boundary(int i) const { return boundary_[i] != 0; }
  double h_max() const { return h_max_; }
  double triangle_area(int t) const { return areas_[t]; }
  const std::vector<double>& areas() const { return areas_; }
  double total_area() const;

  // Interior numbering: interior_index()[node] is -1 on boundary nodes.
  const std::vector<int>& interior_index() const { return interior_index_; }
  const std::vector<int>& interior_nodes() const { return interior_nodes_; }
  int num_interior() const { return static_cast<int>(interior_nodes_.size()); }

  // Triangles incident to each node (CSR).
  const std::vector<int>& node_tri_offsets() const { return node_tri_offsets_; }
  const std::vector<int>& node_tris() const { return node_tris_; }

  // Throws OutsideDomainError when no triangle contains p (tolerance 1e-10 in
  // barycentric units).
  PointLocation locate(const Point& p) const;
  bool try_locate(const Point& p, PointLocation& out) const;

  std::array<double, 3> barycentric(int t, const Point& p) const;

  void write(std::ostream& os) const;
  static Mesh read(std::istream& is);

 private:
  void build_locator();

  std::vector<Point> nodes_;
  std::vector<std::array<int, 3>> triangles_;
  std::vector<char> boundary_;
  std::vector<double> areas_;
  double h_max_ = 0;
  std::vector<int> interior_index_, interior_nodes_;
  std::vector<int> node_tri_offsets_, node_tris_;
  // uniform bucket grid over the bounding box
  Point lo_, hi_;
  int bx_ = 1, by_ = 1;
  double cell_ = 1;
  std::vector<int> bucket_offsets_, bucket_tris_;
};

using MeshPtr = std::shared_ptr<const Mesh>;

// Structured background grid clipped to the domain; h_max <= 2 h_target.
// The disk is meshed at a coarse spacing in (1/8, 1/4] and then refined
// uniformly with boundary midpoints snapped to the circle, so halving
// h_target yields nested meshes.
Mesh build_mesh(const DomainSpec& domain, double h_target);

// Splits every triangle into four; midpoints of boundary edges are moved
// onto the boundary.
Mesh refine_uniform(const Mesh& mesh, const DomainSpec& domain);

// Longest-edge bisection until every triangle's longest edge is at most the
// smallest value of `size` over its vertices and centroid. Midpoints of
// boundary edges are moved onto the boundary.
using SizeFunction = std::function<double(const Point&)>;
Mesh refine_mesh(const Mesh& mesh, const DomainSpec& domain, const SizeFunction& size);

// Graded size field: h_core within radius r_core of each center, growing
// linearly with slope `grading` up to h_far.
struct RefinementBall {
  Point center;
  double r_core;
  double h_core;
};
SizeFunction graded_size(std::vector<RefinementBall> balls, double h_far, double grading = 0.3);

// Distance from p to triangle t.
double point_triangle_distance(const Mesh& mesh, int t, const Point& p);

}  // namespace toda
