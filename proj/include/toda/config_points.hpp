#pragma once

#include <vector>

#include "toda/mesh.hpp"

namespace toda {

// A configuration xi = (xi_1, ..., xi_k) of distinct interior points.
struct ConfigPoints {
  std::vector<Point> points;

  ConfigPoints() = default;
  explicit ConfigPoints(std::vector<Point> p) : points(std::move(p)) {}

  int k() const { return static_cast<int>(points.size()); }
  const Point& operator[](int i) const { return points[i]; }
  double min_separation() const;  // +inf for k = 1
  double boundary_margin(const DomainSpec& domain) const;
  // Throws ArgumentError if a point is outside, on the boundary, or two
  // points coincide.
  void validate(const DomainSpec& domain) const;

  // Flat (x1, y1, x2, y2, ...) view used by the optimizers.
  Vec flat() const;
  static ConfigPoints from_flat(const Vec& v);
};

}  // namespace toda
