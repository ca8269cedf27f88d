#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "toda/fem.hpp"
#include "toda/mesh.hpp"

using namespace toda;

TEST_SUITE("mesh") {
  TEST_CASE("unit disk area within 1 percent and O(h^2) convergence") {
    const auto d = DomainSpec::unit_disk();
    const Mesh m = build_mesh(d, 0.1);
    CHECK(std::abs(m.total_area() - kPi) / kPi < 0.01);
    CHECK(m.h_max() <= 0.2);
    double prev = std::abs(m.total_area() - kPi);
    for (double h : {0.05, 0.025}) {
      const Mesh mh = build_mesh(d, h);
      const double err = std::abs(mh.total_area() - kPi);
      CHECK(err < prev);
      CHECK(prev / err > 2.5);
      CHECK(prev / err < 6.5);
      prev = err;
    }
  }

  TEST_CASE("rectangle is meshed exactly") {
    const Mesh m = build_mesh(DomainSpec::rectangle(1, 1), 0.25);
    CHECK(m.total_area() == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(m.h_max() <= 0.5);
    const Mesh r = build_mesh(DomainSpec::rectangle(2, 0.7), 0.1);
    CHECK(r.total_area() == doctest::Approx(1.4).epsilon(1e-14));
  }

  TEST_CASE("boundary nodes lie on the boundary") {
    const auto d = DomainSpec::unit_disk();
    const Mesh m = build_mesh(d, 0.07);
    int nb = 0;
    for (int i = 0; i < m.num_nodes(); ++i)
      if (m.is_boundary(i)) {
        ++nb;
        CHECK(std::abs(m.nodes()[i].norm() - 1.0) <= m.h_max() * m.h_max());
      }
    CHECK(nb > 50);
    const auto L = DomainSpec::polygon({{0, 0}, {2, 0}, {2, 1}, {1, 1}, {1, 2}, {0, 2}});
    const Mesh ml = build_mesh(L, 0.1);
    CHECK(ml.total_area() == doctest::Approx(3.0).epsilon(1e-12));
    for (int i = 0; i < ml.num_nodes(); ++i)
      if (ml.is_boundary(i)) CHECK(std::abs(L.signed_distance(ml.nodes()[i])) <= 1e-12 * 2.9);
  }

  TEST_CASE("skewed convex polygon is resolved to rounding") {
    const auto P = DomainSpec::polygon({{0, 0}, {1.3, 0.1}, {1.1, 0.9}, {0.2, 1.2}});
    for (double h : {0.1, 0.05, 0.025}) {
      const Mesh m = build_mesh(P, h);
      CHECK(std::abs(m.total_area() - P.area()) < 1e-12);
      for (int i = 0; i < m.num_nodes(); ++i)
        if (m.is_boundary(i)) CHECK(std::abs(P.signed_distance(m.nodes()[i])) < 1e-12);
    }
  }

  TEST_CASE("degenerate polygons are rejected") {
    CHECK_THROWS_AS(DomainSpec::polygon({{0, 0}, {1, 0}}), MeshError);
    CHECK_THROWS_AS(DomainSpec::polygon({{0, 0}, {0, 1}, {1, 1}, {1, 0}}), MeshError);  // clockwise
    CHECK_THROWS_AS(DomainSpec::polygon({{0, 0}, {1, 1}, {1, 0}, {0, 1}}), MeshError);  // bow tie
    CHECK_THROWS_AS(DomainSpec::rectangle(0, 1), MeshError);
    CHECK_THROWS_AS(build_mesh(DomainSpec::unit_disk(), 0.6), ArgumentError);
  }

  TEST_CASE("locate: centroid, vertex and exterior point") {
    const Mesh m = build_mesh(DomainSpec::unit_disk(), 0.1);
    const auto& t0 = m.triangles()[0];
    const Point c = (m.nodes()[t0[0]] + m.nodes()[t0[1]] + m.nodes()[t0[2]]) / 3.0;
    const auto loc = m.locate(c);
    CHECK(loc.triangle == 0);
    for (double b : loc.bary) CHECK(b == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    for (int i = 0; i < m.num_nodes(); ++i) {
      if (m.is_boundary(i)) continue;
      const auto l = m.locate(m.nodes()[i]);
      const auto& t = m.triangles()[l.triangle];
      Point r = Point::Zero();
      for (int a = 0; a < 3; ++a) r += l.bary[a] * m.nodes()[t[a]];
      CHECK((r - m.nodes()[i]).norm() <= 1e-10 * 2.0);
      CHECK(std::max({l.bary[0], l.bary[1], l.bary[2]}) == doctest::Approx(1.0));
    }
    CHECK_THROWS_AS(m.locate(Point(2, 0)), OutsideDomainError);
  }

  TEST_CASE("text format round trip is byte stable") {
    const Mesh m = build_mesh(DomainSpec::unit_disk(), 0.2);
    std::ostringstream a;
    m.write(a);
    std::istringstream in(a.str());
    const Mesh r = Mesh::read(in);
    std::ostringstream b;
    r.write(b);
    CHECK(a.str() == b.str());
    CHECK(a.str().rfind("nodes ", 0) == 0);
  }

  TEST_CASE("graded refinement stays conforming and resolves the core") {
    const auto d = DomainSpec::unit_disk();
    const Mesh m = build_mesh(d, 0.1);
    const Point xi(0.3, -0.1);
    const double delta = 0.01;
    const Mesh r = refine_mesh(m, d, graded_size({{xi, 10 * delta, delta / 4}}, 0.1));
    CHECK(r.total_area() >= m.total_area() - 1e-12);
    double hcore = 0;
    for (int t = 0; t < r.num_triangles(); ++t) {
      if (point_triangle_distance(r, t, xi) > 5 * delta) continue;
      const auto& tri = r.triangles()[t];
      for (int e = 0; e < 3; ++e)
        hcore = std::max(hcore, (r.nodes()[tri[e]] - r.nodes()[tri[(e + 1) % 3]]).norm());
    }
    CHECK(hcore <= delta / 4 * (1 + 1e-12));
    for (int i = 0; i < r.num_nodes(); ++i)
      if (r.is_boundary(i)) CHECK(std::abs(r.nodes()[i].norm() - 1.0) < 1e-12);
    // boundary refinement moves area toward pi
    const Mesh rb = refine_mesh(m, d, [](const Point& p) { return p.norm() > 0.8 ? 0.02 : 1.0; });
    CHECK(std::abs(rb.total_area() - kPi) < std::abs(m.total_area() - kPi));
  }
}
