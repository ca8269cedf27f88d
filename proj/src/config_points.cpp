#include "toda/config_points.hpp"

#include <limits>
#include <sstream>

namespace toda {

double ConfigPoints::min_separation() const {
  double d = std::numeric_limits<double>::infinity();
  for (int i = 0; i < k(); ++i)
    for (int j = i + 1; j < k(); ++j) d = std::min(d, (points[i] - points[j]).norm());
  return d;
}

double ConfigPoints::boundary_margin(const DomainSpec& domain) const {
  double d = std::numeric_limits<double>::infinity();
  for (const auto& p : points) d = std::min(d, domain.distance_to_boundary(p));
  return d;
}

void ConfigPoints::validate(const DomainSpec& domain) const {
  if (points.empty()) throw ArgumentError("configuration needs at least one point");
  if (!(boundary_margin(domain) > 0)) {
    std::ostringstream os;
    os << "configuration point outside or on the boundary of " << domain.describe();
    throw ArgumentError(os.str());
  }
  if (!(min_separation() > 0)) throw ArgumentError("configuration points must be distinct");
}

Vec ConfigPoints::flat() const {
  Vec v(2 * k());
  for (int i = 0; i < k(); ++i) v.segment<2>(2 * i) = points[i];
  return v;
}

ConfigPoints ConfigPoints::from_flat(const Vec& v) {
  ConfigPoints c;
  for (int i = 0; i + 1 < v.size(); i += 2) c.points.emplace_back(v[i], v[i + 1]);
  return c;
}

}  // namespace toda
