#include "toda/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <unordered_map>

namespace toda {

namespace {

void add_orbit(TriangleRule& r, double a, double b, double c, double w) {
  std::array<std::array<double, 3>, 6> perms = {{{a, b, c}, {a, c, b}, {b, a, c},
                                                 {b, c, a}, {c, a, b}, {c, b, a}}};
  std::vector<std::array<double, 3>> seen;
  for (const auto& p : perms) {
    if (std::find(seen.begin(), seen.end(), p) != seen.end()) continue;
    seen.push_back(p);
    r.bary.push_back(p);
    r.weight.push_back(w);
  }
}

TriangleRule make_midpoint() {
  TriangleRule r;
  r.degree = 2;
  add_orbit(r, 0.5, 0.5, 0.0, 1.0 / 3.0);
  return r;
}

TriangleRule make_deg5() {
  TriangleRule r;
  r.degree = 5;
  add_orbit(r, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 0.225);
  add_orbit(r, 0.059715871789770, 0.470142064105115, 0.470142064105115, 0.132394152788506);
  add_orbit(r, 0.797426985353087, 0.101286507323456, 0.101286507323456, 0.125939180544827);
  return r;
}

TriangleRule make_deg8() {
  TriangleRule r;
  r.degree = 8;
  add_orbit(r, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 0.144315607677787);
  add_orbit(r, 0.081414823414554, 0.459292588292723, 0.459292588292723, 0.095091634267285);
  add_orbit(r, 0.658861384496480, 0.170569307751760, 0.170569307751760, 0.103217370534718);
  add_orbit(r, 0.898905543365938, 0.050547228317031, 0.050547228317031, 0.032458497623198);
  add_orbit(r, 0.008394777409958, 0.263112829634638, 0.728492392955404, 0.027230314174435);
  return r;
}

// Renormalize: published weights carry 15 digits; make them sum to 1 exactly.
TriangleRule normalized(TriangleRule r) {
  double s = 0;
  for (double w : r.weight) s += w;
  for (double& w : r.weight) w /= s;
  for (auto& b : r.bary) b[2] = 1.0 - b[0] - b[1];
  return r;
}

}  // namespace

const TriangleRule& rule_edge_midpoint() {
  static const TriangleRule r = make_midpoint();
  return r;
}
const TriangleRule& rule_degree5() {
  static const TriangleRule r = normalized(make_deg5());
  return r;
}
const TriangleRule& rule_degree8() {
  static const TriangleRule r = normalized(make_deg8());
  return r;
}

QuadPoints make_quadrature(const Mesh& mesh, const TriangleRule& rule,
                           const std::vector<int>* levels) {
  QuadPoints q;
  const int nt = mesh.num_triangles();
  q.offset.resize(nt + 1);
  std::size_t total = 0;
  for (int t = 0; t < nt; ++t) {
    const int lv = levels ? (*levels)[t] : 0;
    total += rule.weight.size() << (2 * lv);
  }
  for (auto* v : {&q.x, &q.y, &q.w, &q.l0, &q.l1, &q.l2}) v->reserve(total);
  q.tri.reserve(total);

  // sub-triangles in barycentric coordinates
  using Tri = std::array<std::array<double, 3>, 3>;
  std::vector<Tri> subs, next;
  for (int t = 0; t < nt; ++t) {
    q.offset[t] = static_cast<int>(q.w.size());
    const int lv = levels ? (*levels)[t] : 0;
    subs.assign(1, Tri{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}});
    for (int l = 0; l < lv; ++l) {
      next.clear();
      for (const auto& s : subs) {
        auto mid = [&](int i, int j) {
          return std::array<double, 3>{0.5 * (s[i][0] + s[j][0]), 0.5 * (s[i][1] + s[j][1]),
                                       0.5 * (s[i][2] + s[j][2])};
        };
        const auto m01 = mid(0, 1), m12 = mid(1, 2), m20 = mid(2, 0);
        next.push_back({s[0], m01, m20});
        next.push_back({m01, s[1], m12});
        next.push_back({m20, m12, s[2]});
        next.push_back({m01, m12, m20});
      }
      subs.swap(next);
    }
    const auto& tri = mesh.triangles()[t];
    const Point& A = mesh.nodes()[tri[0]];
    const Point& B = mesh.nodes()[tri[1]];
    const Point& C = mesh.nodes()[tri[2]];
    const double wscale = mesh.triangle_area(t) / static_cast<double>(subs.size());
    for (const auto& s : subs)
      for (std::size_t k = 0; k < rule.weight.size(); ++k) {
        const auto& b = rule.bary[k];
        double l[3];
        for (int i = 0; i < 3; ++i) l[i] = b[0] * s[0][i] + b[1] * s[1][i] + b[2] * s[2][i];
        q.l0.push_back(l[0]);
        q.l1.push_back(l[1]);
        q.l2.push_back(l[2]);
        q.x.push_back(l[0] * A.x() + l[1] * B.x() + l[2] * C.x());
        q.y.push_back(l[0] * A.y() + l[1] * B.y() + l[2] * C.y());
        q.w.push_back(rule.weight[k] * wscale);
        q.tri.push_back(t);
      }
  }
  q.offset[nt] = static_cast<int>(q.w.size());
  return q;
}

void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1, p1 = 0;
      for (int j = 1; j <= n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p2) / j;
      }
      dp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    x[i] = -z;
    x[n - 1 - i] = z;
    w[i] = w[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
}

QuadPoints boundary_sliver_quadrature(const Mesh& mesh, const DomainSpec& domain, int n_theta,
                                      int n_r) {
  QuadPoints q;
  if (domain.kind() != DomainSpec::Kind::UnitDisk) return q;
  std::vector<double> gt, wt, gr, wr;
  gauss_legendre(n_theta, gt, wt);
  gauss_legendre(n_r, gr, wr);
  const auto& nodes = mesh.nodes();
  auto key = [](int a, int b) {
    return (static_cast<std::uint64_t>(std::min(a, b)) << 32) | static_cast<std::uint32_t>(std::max(a, b));
  };
  std::unordered_map<std::uint64_t, int> use;
  for (const auto& tri : mesh.triangles())
    for (int e = 0; e < 3; ++e) ++use[key(tri[e], tri[(e + 1) % 3])];
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles()[t];
    for (int e = 0; e < 3; ++e) {
      const int a = tri[e], b = tri[(e + 1) % 3];
      if (!mesh.is_boundary(a) || !mesh.is_boundary(b) || use[key(a, b)] != 1) continue;
      const Point pa = nodes[a], pb = nodes[b];
      if (std::abs(pa.norm() - 1) > 1e-9 || std::abs(pb.norm() - 1) > 1e-9) continue;
      const double ta = std::atan2(pa.y(), pa.x());
      double dt = std::atan2(pb.y(), pb.x()) - ta;
      if (dt > kPi) dt -= 2 * kPi;
      if (dt < -kPi) dt += 2 * kPi;
      if (std::abs(dt) > kPi / 2) continue;  // not a short chord
      const double half = 0.5 * dt, tm = ta + half;
      const double d = std::cos(half);  // distance of the chord from the origin
      for (int i = 0; i < n_theta; ++i) {
        const double th = tm + half * gt[i];
        const double wth = std::abs(half) * wt[i];
        const double rc = d / std::cos(th - tm);
        for (int j = 0; j < n_r; ++j) {
          const double r = rc + 0.5 * (1 - rc) * (gr[j] + 1);
          const double w = wth * 0.5 * (1 - rc) * wr[j] * r;
          const Point x(r * std::cos(th), r * std::sin(th));
          const auto l = mesh.barycentric(t, x);
          q.x.push_back(x.x());
          q.y.push_back(x.y());
          q.w.push_back(w);
          q.l0.push_back(l[0]);
          q.l1.push_back(l[1]);
          q.l2.push_back(l[2]);
          q.tri.push_back(t);
        }
      }
    }
  }
  return q;
}

}  // namespace toda
