#include "toda/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <unordered_map>

namespace toda {

namespace {

double cross(const Point& a, const Point& b) { return a.x() * b.y() - a.y() * b.x(); }

double signed_area(const Point& a, const Point& b, const Point& c) {
  return 0.5 * cross(b - a, c - a);
}

Point closest_on_segment(const Point& p, const Point& a, const Point& b) {
  const Point ab = b - a;
  const double len2 = ab.squaredNorm();
  double t = len2 > 0 ? (p - a).dot(ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return a + t * ab;
}

bool segments_intersect(const Point& p1, const Point& p2, const Point& q1, const Point& q2) {
  auto orient = [](const Point& a, const Point& b, const Point& c) {
    const double v = cross(b - a, c - a);
    return (v > 0) - (v < 0);
  };
  auto on_seg = [](const Point& a, const Point& b, const Point& c) {
    return std::min(a.x(), b.x()) <= c.x() && c.x() <= std::max(a.x(), b.x()) &&
           std::min(a.y(), b.y()) <= c.y() && c.y() <= std::max(a.y(), b.y());
  };
  const int o1 = orient(p1, p2, q1), o2 = orient(p1, p2, q2);
  const int o3 = orient(q1, q2, p1), o4 = orient(q1, q2, p2);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_seg(p1, p2, q1)) return true;
  if (o2 == 0 && on_seg(p1, p2, q2)) return true;
  if (o3 == 0 && on_seg(q1, q2, p1)) return true;
  if (o4 == 0 && on_seg(q1, q2, p2)) return true;
  return false;
}

std::uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
         static_cast<std::uint32_t>(b);
}

}  // namespace

// ---------------------------------------------------------------- DomainSpec

DomainSpec DomainSpec::unit_disk() { return DomainSpec(); }

DomainSpec DomainSpec::rectangle(double width, double height) {
  if (!(width > 0) || !(height > 0))
    throw MeshError("rectangle needs positive width and height");
  DomainSpec d;
  d.kind_ = Kind::Rectangle;
  d.width_ = width;
  d.height_ = height;
  d.vertices_ = {Point(0, 0), Point(width, 0), Point(width, height), Point(0, height)};
  return d;
}

DomainSpec DomainSpec::polygon(std::vector<Point> v) {
  const std::size_t n = v.size();
  if (n < 3) throw MeshError("polygon needs at least 3 vertices");
  double a2 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if ((v[(i + 1) % n] - v[i]).norm() == 0) throw MeshError("polygon has a repeated vertex");
    a2 += cross(v[i], v[(i + 1) % n]);
  }
  if (!(a2 > 0)) throw MeshError("polygon is not counterclockwise (signed area <= 0)");
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      if (j == i + 1 || (i == 0 && j == n - 1)) continue;
      if (segments_intersect(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n])) {
        std::ostringstream os;
        os << "polygon is not simple: edges " << i << " and " << j << " intersect";
        throw MeshError(os.str());
      }
    }
  DomainSpec d;
  d.kind_ = Kind::Polygon;
  d.vertices_ = std::move(v);
  return d;
}

double DomainSpec::signed_distance(const Point& p) const {
  if (kind_ == Kind::UnitDisk) return p.norm() - 1.0;
  double best = std::numeric_limits<double>::infinity();
  bool inside = false;
  const std::size_t n = vertices_.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Point& a = vertices_[j];
    const Point& b = vertices_[i];
    best = std::min(best, (p - closest_on_segment(p, a, b)).norm());
    if ((b.y() > p.y()) != (a.y() > p.y()) &&
        p.x() < (a.x() - b.x()) * (p.y() - b.y()) / (a.y() - b.y()) + b.x())
      inside = !inside;
  }
  return inside ? -best : best;
}

Point DomainSpec::project_to_boundary(const Point& p) const {
  if (kind_ == Kind::UnitDisk) {
    const double r = p.norm();
    return r > 0 ? Point(p / r) : Point(1.0, 0.0);
  }
  double best = std::numeric_limits<double>::infinity();
  Point out = p;
  const std::size_t n = vertices_.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point q = closest_on_segment(p, vertices_[i], vertices_[(i + 1) % n]);
    const double d = (p - q).norm();
    if (d < best) {
      best = d;
      out = q;
    }
  }
  return out;
}

double DomainSpec::diameter() const {
  if (kind_ == Kind::UnitDisk) return 2.0;
  double d = 0;
  for (const auto& a : vertices_)
    for (const auto& b : vertices_) d = std::max(d, (a - b).norm());
  return d;
}

double DomainSpec::area() const {
  if (kind_ == Kind::UnitDisk) return kPi;
  double a2 = 0;
  const std::size_t n = vertices_.size();
  for (std::size_t i = 0; i < n; ++i) a2 += cross(vertices_[i], vertices_[(i + 1) % n]);
  return 0.5 * a2;
}

Point DomainSpec::bbox_min() const {
  if (kind_ == Kind::UnitDisk) return Point(-1, -1);
  Point m = vertices_[0];
  for (const auto& v : vertices_) m = m.cwiseMin(v);
  return m;
}

Point DomainSpec::bbox_max() const {
  if (kind_ == Kind::UnitDisk) return Point(1, 1);
  Point m = vertices_[0];
  for (const auto& v : vertices_) m = m.cwiseMax(v);
  return m;
}

std::string DomainSpec::describe() const {
  std::ostringstream os;
  os.precision(17);
  switch (kind_) {
    case Kind::UnitDisk: os << "unit-disk"; break;
    case Kind::Rectangle: os << "rectangle(" << width_ << "," << height_ << ")"; break;
    case Kind::Polygon:
      os << "polygon(";
      for (std::size_t i = 0; i < vertices_.size(); ++i)
        os << (i ? ";" : "") << vertices_[i].x() << "," << vertices_[i].y();
      os << ")";
      break;
  }
  return os.str();
}

// ---------------------------------------------------------------------- Mesh

Mesh::Mesh(std::vector<Point> nodes, std::vector<std::array<int, 3>> triangles,
           std::vector<char> boundary)
    : nodes_(std::move(nodes)), triangles_(std::move(triangles)), boundary_(std::move(boundary)) {
  const int n = num_nodes();
  if (static_cast<int>(boundary_.size()) != n)
    throw MeshError("boundary mask length does not match node count");
  if (triangles_.empty()) throw MeshError("mesh has no triangles");
  areas_.resize(triangles_.size());
  std::unordered_map<std::uint64_t, int> edge_use;
  edge_use.reserve(triangles_.size() * 2);
  for (std::size_t t = 0; t < triangles_.size(); ++t) {
    const auto& tri = triangles_[t];
    for (int v : tri)
      if (v < 0 || v >= n) throw MeshError("triangle references a missing node");
    const double a = signed_area(nodes_[tri[0]], nodes_[tri[1]], nodes_[tri[2]]);
    if (!(a > 0)) {
      std::ostringstream os;
      os << "triangle " << t << " has non-positive signed area " << a;
      throw MeshError(os.str());
    }
    areas_[t] = a;
    for (int e = 0; e < 3; ++e) {
      const int p = tri[e], q = tri[(e + 1) % 3];
      h_max_ = std::max(h_max_, (nodes_[p] - nodes_[q]).norm());
      if (++edge_use[edge_key(p, q)] > 2) throw MeshError("edge shared by more than two triangles");
    }
  }
  interior_index_.assign(n, -1);
  for (int i = 0; i < n; ++i)
    if (!boundary_[i]) {
      interior_index_[i] = static_cast<int>(interior_nodes_.size());
      interior_nodes_.push_back(i);
    }
  node_tri_offsets_.assign(n + 1, 0);
  for (const auto& tri : triangles_)
    for (int v : tri) ++node_tri_offsets_[v + 1];
  for (int i = 0; i < n; ++i) node_tri_offsets_[i + 1] += node_tri_offsets_[i];
  node_tris_.resize(node_tri_offsets_[n]);
  std::vector<int> fill(node_tri_offsets_.begin(), node_tri_offsets_.end() - 1);
  for (int t = 0; t < num_triangles(); ++t)
    for (int v : triangles_[t]) node_tris_[fill[v]++] = t;
  build_locator();
}

double Mesh::total_area() const {
  double s = 0;
  for (double a : areas_) s += a;
  return s;
}

void Mesh::build_locator() {
  lo_ = nodes_[0];
  hi_ = nodes_[0];
  for (const auto& p : nodes_) {
    lo_ = lo_.cwiseMin(p);
    hi_ = hi_.cwiseMax(p);
  }
  const double w = std::max(hi_.x() - lo_.x(), 1e-300);
  const double h = std::max(hi_.y() - lo_.y(), 1e-300);
  // about two triangles per bucket
  const double target = std::sqrt(w * h / std::max(1.0, 0.5 * num_triangles()));
  cell_ = std::max(target, 1e-300);
  bx_ = std::clamp(static_cast<int>(std::ceil(w / cell_)), 1, 4096);
  by_ = std::clamp(static_cast<int>(std::ceil(h / cell_)), 1, 4096);
  cell_ = std::max(w / bx_, h / by_);
  bx_ = std::clamp(static_cast<int>(std::ceil(w / cell_)), 1, 4096);
  by_ = std::clamp(static_cast<int>(std::ceil(h / cell_)), 1, 4096);
  auto cell_of = [&](double v, double o, int m) {
    return std::clamp(static_cast<int>(std::floor((v - o) / cell_)), 0, m - 1);
  };
  std::vector<std::vector<int>> buckets(static_cast<std::size_t>(bx_) * by_);
  for (int t = 0; t < num_triangles(); ++t) {
    Point a = nodes_[triangles_[t][0]], b = a;
    for (int v : triangles_[t]) {
      a = a.cwiseMin(nodes_[v]);
      b = b.cwiseMax(nodes_[v]);
    }
    const int i0 = cell_of(a.x(), lo_.x(), bx_), i1 = cell_of(b.x(), lo_.x(), bx_);
    const int j0 = cell_of(a.y(), lo_.y(), by_), j1 = cell_of(b.y(), lo_.y(), by_);
    for (int j = j0; j <= j1; ++j)
      for (int i = i0; i <= i1; ++i) buckets[static_cast<std::size_t>(j) * bx_ + i].push_back(t);
  }
  bucket_offsets_.assign(buckets.size() + 1, 0);
  for (std::size_t k = 0; k < buckets.size(); ++k)
    bucket_offsets_[k + 1] = bucket_offsets_[k] + static_cast<int>(buckets[k].size());
  bucket_tris_.reserve(bucket_offsets_.back());
  for (const auto& b : buckets) bucket_tris_.insert(bucket_tris_.end(), b.begin(), b.end());
}

std::array<double, 3> Mesh::barycentric(int t, const Point& p) const {
  const auto& tri = triangles_[t];
  const Point& a = nodes_[tri[0]];
  const Point& b = nodes_[tri[1]];
  const Point& c = nodes_[tri[2]];
  const double inv = 1.0 / (2.0 * areas_[t]);
  const double l1 = cross(c - b, p - b) * inv;
  const double l2 = cross(a - c, p - c) * inv;
  return {l1, l2, 1.0 - l1 - l2};
}

bool Mesh::try_locate(const Point& p, PointLocation& out) const {
  const double slack = 1e-10 * std::max(hi_.x() - lo_.x(), hi_.y() - lo_.y());
  if (p.x() < lo_.x() - slack || p.x() > hi_.x() + slack || p.y() < lo_.y() - slack ||
      p.y() > hi_.y() + slack)
    return false;
  const int i = std::clamp(static_cast<int>(std::floor((p.x() - lo_.x()) / cell_)), 0, bx_ - 1);
  const int j = std::clamp(static_cast<int>(std::floor((p.y() - lo_.y()) / cell_)), 0, by_ - 1);
  const std::size_t k = static_cast<std::size_t>(j) * bx_ + i;
  int best = -1;
  double best_min = -std::numeric_limits<double>::infinity();
  std::array<double, 3> best_bary{};
  for (int q = bucket_offsets_[k]; q < bucket_offsets_[k + 1]; ++q) {
    const int t = bucket_tris_[q];
    const auto l = barycentric(t, p);
    const double m = std::min({l[0], l[1], l[2]});
    if (m > best_min) {
      best_min = m;
      best = t;
      best_bary = l;
    }
  }
  if (best < 0 || best_min < -1e-10) return false;
  double s = 0;
  for (auto& l : best_bary) {
    l = std::max(l, 0.0);
    s += l;
  }
  for (auto& l : best_bary) l /= s;
  out.triangle = best;
  out.bary = best_bary;
  return true;
}

PointLocation Mesh::locate(const Point& p) const {
  PointLocation loc;
  if (!try_locate(p, loc)) {
    std::ostringstream os;
    os.precision(17);
    os << "point (" << p.x() << ", " << p.y() << ") is outside the mesh";
    throw OutsideDomainError(os.str());
  }
  return loc;
}

void Mesh::write(std::ostream& os) const {
  char buf[128];
  os << "nodes " << nodes_.size() << "\n";
  for (int i = 0; i < num_nodes(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g %d\n", nodes_[i].x(), nodes_[i].y(),
                  boundary_[i] ? 1 : 0);
    os << buf;
  }
  os << "triangles " << triangles_.size() << "\n";
  for (const auto& t : triangles_) os << t[0] << " " << t[1] << " " << t[2] << "\n";
}

Mesh Mesh::read(std::istream& is) {
  std::string word;
  std::size_t n = 0, m = 0;
  if (!(is >> word >> n) || word != "nodes") throw MeshError("mesh file: expected 'nodes N'");
  std::vector<Point> nodes(n);
  std::vector<char> flags(n);
  for (std::size_t i = 0; i < n; ++i) {
    double x, y;
    int f;
    if (!(is >> x >> y >> f)) throw MeshError("mesh file: truncated node list");
    nodes[i] = Point(x, y);
    flags[i] = static_cast<char>(f != 0);
  }
  if (!(is >> word >> m) || word != "triangles")
    throw MeshError("mesh file: expected 'triangles M'");
  std::vector<std::array<int, 3>> tris(m);
  for (std::size_t t = 0; t < m; ++t)
    if (!(is >> tris[t][0] >> tris[t][1] >> tris[t][2]))
      throw MeshError("mesh file: truncated triangle list");
  return Mesh(std::move(nodes), std::move(tris), std::move(flags));
}

// ------------------------------------------------------------------ builders

namespace {

struct Builder {
  std::vector<Point> nodes;
  std::vector<std::array<int, 3>> tris;

  // Drops unused nodes and flags the endpoints of free edges.
  Mesh finish(const DomainSpec& domain) {
    std::vector<int> remap(nodes.size(), -1);
    std::vector<Point> out_nodes;
    for (auto& t : tris)
      for (int& v : t) {
        if (remap[v] < 0) {
          remap[v] = static_cast<int>(out_nodes.size());
          out_nodes.push_back(nodes[v]);
        }
        v = remap[v];
      }
    std::unordered_map<std::uint64_t, int> use;
    for (const auto& t : tris)
      for (int e = 0; e < 3; ++e) ++use[edge_key(t[e], t[(e + 1) % 3])];
    std::vector<char> flags(out_nodes.size(), 0);
    for (const auto& t : tris)
      for (int e = 0; e < 3; ++e)
        if (use[edge_key(t[e], t[(e + 1) % 3])] == 1) flags[t[e]] = flags[t[(e + 1) % 3]] = 1;
    const double tol = 1e-9 * domain.diameter();
    for (std::size_t i = 0; i < out_nodes.size(); ++i)
      if (flags[i] && std::abs(domain.signed_distance(out_nodes[i])) > tol)
        throw MeshError("mesher produced a free edge away from the boundary (feature below mesh "
                        "resolution?)");
    return Mesh(std::move(out_nodes), std::move(tris), std::move(flags));
  }
};

Mesh build_rectangle(const DomainSpec& domain, double h) {
  const int nx = std::max(1, static_cast<int>(std::ceil(domain.width() / h - 1e-12)));
  const int ny = std::max(1, static_cast<int>(std::ceil(domain.height() / h - 1e-12)));
  const double dx = domain.width() / nx, dy = domain.height() / ny;
  Builder b;
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i)
      b.nodes.emplace_back(i == nx ? domain.width() : i * dx, j == ny ? domain.height() : j * dy);
  auto id = [&](int i, int j) { return j * (nx + 1) + i; };
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const int a = id(i, j), bb = id(i + 1, j), c = id(i + 1, j + 1), d = id(i, j + 1);
      if ((i + j) % 2 == 0) {
        b.tris.push_back({a, bb, c});
        b.tris.push_back({a, c, d});
      } else {
        b.tris.push_back({a, bb, d});
        b.tris.push_back({bb, c, d});
      }
    }
  return b.finish(domain);
}

// Clipped union-jack grid with node warping and shared edge cut points.
Mesh build_clipped(const DomainSpec& domain, double h) {
  const double s = h;
  Point origin;
  int i0, i1, j0, j1;
  if (domain.kind() == DomainSpec::Kind::UnitDisk) {
    origin = Point(0, 0);
    const int n = static_cast<int>(std::ceil(1.0 / s)) + 1;
    i0 = j0 = -n;
    i1 = j1 = n;
  } else {
    origin = domain.bbox_min();
    const Point ext = domain.bbox_max() - origin;
    i0 = j0 = -1;
    i1 = static_cast<int>(std::ceil(ext.x() / s)) + 1;
    j1 = static_cast<int>(std::ceil(ext.y() / s)) + 1;
  }
  const int nx = i1 - i0 + 1;
  const int ny = j1 - j0 + 1;
  Builder b;
  b.nodes.reserve(static_cast<std::size_t>(nx) * ny);
  for (int j = j0; j <= j1; ++j)
    for (int i = i0; i <= i1; ++i) b.nodes.emplace_back(origin + s * Point(i, j));
  auto id = [&](int i, int j) { return (j - j0) * nx + (i - i0); };

  // sign: -1 inside, 0 on boundary, +1 outside
  std::vector<int> sign(b.nodes.size());
  std::vector<char> pinned(b.nodes.size(), 0);
  if (domain.kind() == DomainSpec::Kind::Polygon) {
    for (const auto& c : domain.vertices()) {
      const Point g = (c - origin) / s;
      const int ci = static_cast<int>(std::lround(g.x()));
      const int cj = static_cast<int>(std::lround(g.y()));
      const int v = id(ci, cj);
      if (pinned[v]) throw MeshError("two polygon corners snap to one grid node; reduce h_target");
      b.nodes[v] = c;
      pinned[v] = 1;
    }
  }
  const double warp = 0.3 * s;
  for (std::size_t v = 0; v < b.nodes.size(); ++v) {
    if (pinned[v]) {
      sign[v] = 0;
      continue;
    }
    const double d = domain.signed_distance(b.nodes[v]);
    if (std::abs(d) < warp) {
      b.nodes[v] = domain.project_to_boundary(b.nodes[v]);
      sign[v] = 0;
    } else {
      sign[v] = d < 0 ? -1 : 1;
    }
  }

  std::unordered_map<std::uint64_t, int> cuts;
  auto cut = [&](int p, int q) {
    const auto key = edge_key(p, q);
    auto it = cuts.find(key);
    if (it != cuts.end()) return it->second;
    Point a = b.nodes[p], c = b.nodes[q];
    if (sign[p] > 0) std::swap(a, c);  // a inside, c outside
    double lo = 0, hi = 1;
    for (int k = 0; k < 80; ++k) {
      const double mid = 0.5 * (lo + hi);
      (domain.signed_distance(a + mid * (c - a)) < 0 ? lo : hi) = mid;
    }
    const Point x = domain.project_to_boundary(a + 0.5 * (lo + hi) * (c - a));
    const int idx = static_cast<int>(b.nodes.size());
    b.nodes.push_back(x);
    sign.push_back(0);
    cuts.emplace(key, idx);
    return idx;
  };

  auto emit = [&](int p, int q, int r) {
    const Point &A = b.nodes[p], &B = b.nodes[q], &C = b.nodes[r];
    const double a = signed_area(A, B, C);
    if (a <= 1e-12 * s * s) return;
    if (domain.signed_distance((A + B + C) / 3.0) > 1e-12) return;
    b.tris.push_back({p, q, r});
  };

  for (int j = j0; j < j1; ++j)
    for (int i = i0; i < i1; ++i) {
      const int a = id(i, j), bb = id(i + 1, j), c = id(i + 1, j + 1), d = id(i, j + 1);
      std::array<std::array<int, 3>, 2> pair;
      const bool slash = ((i + j) % 2 + 2) % 2 == 0;
      if (slash)
        pair = {{{a, bb, c}, {a, c, d}}};
      else
        pair = {{{a, bb, d}, {bb, c, d}}};
      for (const auto& t : pair) {
        int neg = 0, pos = 0;
        for (int v : t) {
          neg += sign[v] < 0;
          pos += sign[v] > 0;
        }
        if (neg == 0 && pos == 0) {
          emit(t[0], t[1], t[2]);
          continue;
        }
        if (neg == 0) continue;  // only outside/boundary vertices
        if (pos == 0) {
          emit(t[0], t[1], t[2]);
          continue;
        }
        std::vector<int> poly;
        for (int e = 0; e < 3; ++e) {
          const int p = t[e], q = t[(e + 1) % 3];
          if (sign[p] <= 0) poly.push_back(p);
          if (sign[p] * sign[q] < 0) poly.push_back(cut(p, q));
        }
        if (poly.size() == 3) {
          emit(poly[0], poly[1], poly[2]);
        } else if (poly.size() == 4) {
          const double d02 = (b.nodes[poly[0]] - b.nodes[poly[2]]).squaredNorm();
          const double d13 = (b.nodes[poly[1]] - b.nodes[poly[3]]).squaredNorm();
          if (d02 <= d13) {
            emit(poly[0], poly[1], poly[2]);
            emit(poly[0], poly[2], poly[3]);
          } else {
            emit(poly[0], poly[1], poly[3]);
            emit(poly[1], poly[2], poly[3]);
          }
        }
      }
    }
  return b.finish(domain);
}

}  // namespace

Mesh build_mesh(const DomainSpec& domain, double h_target) {
  if (!(h_target > 0) || !(h_target < domain.diameter() / 4)) {
    std::ostringstream os;
    os << "h_target must lie in (0, diameter/4); got " << h_target;
    throw ArgumentError(os.str());
  }
  if (domain.kind() == DomainSpec::Kind::Rectangle) return build_rectangle(domain, h_target);
  if (domain.kind() == DomainSpec::Kind::Polygon) return build_clipped(domain, h_target);
  int levels = 0;
  double h0 = h_target;
  while (h0 * 2 <= 0.25 * (1 + 1e-12)) {
    h0 *= 2;
    ++levels;
  }
  Mesh m = build_clipped(domain, h0);
  for (int l = 0; l < levels; ++l) m = refine_uniform(m, domain);
  return m;
}

Mesh refine_uniform(const Mesh& mesh, const DomainSpec& domain) {
  std::vector<Point> nodes = mesh.nodes();
  std::unordered_map<std::uint64_t, int> use;
  for (const auto& t : mesh.triangles())
    for (int e = 0; e < 3; ++e) ++use[edge_key(t[e], t[(e + 1) % 3])];
  std::unordered_map<std::uint64_t, int> mids;
  auto mid = [&](int a, int b) {
    const auto key = edge_key(a, b);
    auto it = mids.find(key);
    if (it != mids.end()) return it->second;
    Point m = 0.5 * (nodes[a] + nodes[b]);
    if (use[key] == 1) m = domain.project_to_boundary(m);
    const int idx = static_cast<int>(nodes.size());
    nodes.push_back(m);
    mids.emplace(key, idx);
    return idx;
  };
  std::vector<std::array<int, 3>> tris;
  tris.reserve(4 * mesh.triangles().size());
  for (const auto& t : mesh.triangles()) {
    const int m01 = mid(t[0], t[1]), m12 = mid(t[1], t[2]), m20 = mid(t[2], t[0]);
    tris.push_back({t[0], m01, m20});
    tris.push_back({m01, t[1], m12});
    tris.push_back({m20, m12, t[2]});
    tris.push_back({m01, m12, m20});
  }
  std::vector<char> flags(nodes.size(), 0);
  for (int i = 0; i < mesh.num_nodes(); ++i) flags[i] = mesh.boundary_mask()[i];
  for (const auto& [key, idx] : mids) flags[idx] = use[key] == 1;
  return Mesh(std::move(nodes), std::move(tris), std::move(flags));
}

// ---------------------------------------------------------------- refinement

double point_triangle_distance(const Mesh& mesh, int t, const Point& p) {
  const auto l = mesh.barycentric(t, p);
  if (l[0] >= 0 && l[1] >= 0 && l[2] >= 0) return 0.0;
  const auto& tri = mesh.triangles()[t];
  double d = std::numeric_limits<double>::infinity();
  for (int e = 0; e < 3; ++e) {
    const Point& a = mesh.nodes()[tri[e]];
    const Point& b = mesh.nodes()[tri[(e + 1) % 3]];
    d = std::min(d, (p - closest_on_segment(p, a, b)).norm());
  }
  return d;
}

SizeFunction graded_size(std::vector<RefinementBall> balls, double h_far, double grading) {
  return [balls = std::move(balls), h_far, grading](const Point& x) {
    double s = h_far;
    for (const auto& b : balls) {
      const double r = (x - b.center).norm();
      s = std::min(s, b.h_core + grading * std::max(0.0, r - b.r_core));
    }
    return s;
  };
}

namespace {

class Bisector {
 public:
  Bisector(const Mesh& m, const DomainSpec& d, const SizeFunction& size)
      : domain_(d), size_(size), nodes_(m.nodes()), tris_(m.triangles()),
        alive_(tris_.size(), 1) {
    for (std::size_t t = 0; t < tris_.size(); ++t) link(static_cast<int>(t));
  }

  Mesh run() {
    std::vector<int> work;
    for (std::size_t t = 0; t < tris_.size(); ++t) work.push_back(static_cast<int>(t));
    std::size_t head = 0;
    while (head < work.size()) {
      const int t = work[head++];
      while (alive_[t] && needs(t)) split_lepp(t, work);
    }
    std::vector<std::array<int, 3>> out;
    for (std::size_t t = 0; t < tris_.size(); ++t)
      if (alive_[t]) out.push_back(tris_[t]);
    std::vector<char> flags(nodes_.size(), 0);
    std::unordered_map<std::uint64_t, int> use;
    for (const auto& t : out)
      for (int e = 0; e < 3; ++e) ++use[edge_key(t[e], t[(e + 1) % 3])];
    for (const auto& t : out)
      for (int e = 0; e < 3; ++e)
        if (use[edge_key(t[e], t[(e + 1) % 3])] == 1) flags[t[e]] = flags[t[(e + 1) % 3]] = 1;
    return Mesh(nodes_, std::move(out), std::move(flags));
  }

 private:
  double len2(int a, int b) const { return (nodes_[a] - nodes_[b]).squaredNorm(); }

  // Local index e of the longest edge (tri[e], tri[e+1]); ties go to the
  // smaller edge key so both neighbours agree.
  int longest(int t) const {
    const auto& tri = tris_[t];
    int best = 0;
    double bl = -1;
    std::uint64_t bk = 0;
    for (int e = 0; e < 3; ++e) {
      const double l = len2(tri[e], tri[(e + 1) % 3]);
      const std::uint64_t k = edge_key(tri[e], tri[(e + 1) % 3]);
      if (l > bl * (1 + 1e-12) || (std::abs(l - bl) <= 1e-12 * bl && k < bk)) {
        best = e;
        bl = l;
        bk = k;
      }
    }
    return best;
  }

  bool needs(int t) const {
    const auto& tri = tris_[t];
    const Point c = (nodes_[tri[0]] + nodes_[tri[1]] + nodes_[tri[2]]) / 3.0;
    double s = size_(c);
    for (int v : tri) s = std::min(s, size_(nodes_[v]));
    const int e = longest(t);
    return std::sqrt(len2(tri[e], tri[(e + 1) % 3])) > s;
  }

  void link(int t) {
    for (int e = 0; e < 3; ++e) {
      auto& slot =
          edges_.try_emplace(edge_key(tris_[t][e], tris_[t][(e + 1) % 3]), std::array<int, 2>{-1, -1})
              .first->second;
      if (slot[0] < 0)
        slot[0] = t;
      else
        slot[1] = t;
    }
  }
  void unlink(int t) {
    for (int e = 0; e < 3; ++e) {
      auto it = edges_.find(edge_key(tris_[t][e], tris_[t][(e + 1) % 3]));
      auto& slot = it->second;
      if (slot[0] == t) {
        slot[0] = slot[1];
        slot[1] = -1;
      } else if (slot[1] == t) {
        slot[1] = -1;
      }
      if (slot[0] < 0) edges_.erase(it);
    }
  }
  int neighbor(int t, int e) const {
    const auto& slot = edges_.at(edge_key(tris_[t][e], tris_[t][(e + 1) % 3]));
    return slot[0] == t ? slot[1] : slot[0];
  }

  int midpoint(int a, int b, bool on_boundary) {
    const auto key = edge_key(a, b);
    auto it = mids_.find(key);
    if (it != mids_.end()) return it->second;
    Point m = 0.5 * (nodes_[a] + nodes_[b]);
    if (on_boundary) m = domain_.project_to_boundary(m);
    const int idx = static_cast<int>(nodes_.size());
    nodes_.push_back(m);
    mids_.emplace(key, idx);
    return idx;
  }

  void bisect(int t, int e, int m, std::vector<int>& work) {
    const auto tri = tris_[t];
    const int a = tri[e], b = tri[(e + 1) % 3], c = tri[(e + 2) % 3];
    unlink(t);
    alive_[t] = 0;
    for (const std::array<int, 3> nt : {std::array<int, 3>{a, m, c}, std::array<int, 3>{m, b, c}}) {
      tris_.push_back(nt);
      alive_.push_back(1);
      const int id = static_cast<int>(tris_.size()) - 1;
      link(id);
      work.push_back(id);
    }
  }

  void split_lepp(int t, std::vector<int>& work) {
    int cur = t;
    for (;;) {
      const int e = longest(cur);
      const int nb = neighbor(cur, e);
      const int a = tris_[cur][e], b = tris_[cur][(e + 1) % 3];
      if (nb < 0) {
        bisect(cur, e, midpoint(a, b, true), work);
        return;
      }
      const int en = longest(nb);
      const auto& tn = tris_[nb];
      if (edge_key(tn[en], tn[(en + 1) % 3]) == edge_key(a, b)) {
        const int m = midpoint(a, b, false);
        bisect(cur, e, m, work);
        bisect(nb, en, m, work);
        return;
      }
      cur = nb;
    }
  }

  const DomainSpec& domain_;
  const SizeFunction& size_;
  std::vector<Point> nodes_;
  std::vector<std::array<int, 3>> tris_;
  std::vector<char> alive_;
  std::unordered_map<std::uint64_t, std::array<int, 2>> edges_;
  std::unordered_map<std::uint64_t, int> mids_;
};

}  // namespace

Mesh refine_mesh(const Mesh& mesh, const DomainSpec& domain, const SizeFunction& size) {
  return Bisector(mesh, domain, size).run();
}

}  // namespace toda
