#include <cmath>
#include <map>
#include <memory>
#include <sstream>
#include <random>

#include "doctest.h"
#include <Eigen/Geometry>

#include "toda/reduced_energy.hpp"

using namespace toda;

namespace {
std::shared_ptr<const DirichletOperator> disk_op(double h) {
  static std::map<double, std::shared_ptr<const DirichletOperator>> cache;
  auto& op = cache[h];
  if (!op)
    op = std::make_shared<const DirichletOperator>(
        std::make_shared<const Mesh>(build_mesh(DomainSpec::unit_disk(), h)));
  return op;
}

ReducedEnergyContext closed_form() { return {}; }

ReducedEnergyContext with_meanfield(double rho2, double h) {
  ReducedEnergyContext c;
  c.op = disk_op(h);
  c.rho2 = rho2;
  return c;
}

// Lambda on the disk for rho2 = 0
double disk_lambda_k1(const Point& x) { return -8 * kPi * std::log(1 - x.squaredNorm()); }
double disk_lambda_pair(double a) { return -16 * kPi * std::log((1 - std::pow(a, 4)) / (2 * a)); }
}  // namespace

TEST_SUITE("reduced_energy") {
  TEST_CASE("closed-form values for one point") {
    const auto ctx = closed_form();
    CHECK(lambda_value(ConfigPoints({Point(0, 0)}), ctx).value == doctest::Approx(0.0));
    const auto ev = lambda_value(ConfigPoints({Point(0.3, 0)}), ctx);
    CHECK(ev.value == doctest::Approx(2.37026).epsilon(1e-5));
    CHECK(ev.value == doctest::Approx(disk_lambda_k1(Point(0.3, 0))).epsilon(1e-13));
    CHECK(ev.value - (ev.half_I + ev.robin_part + ev.interaction_part) == doctest::Approx(0.0));
    double prev = -1;
    for (double r = 0.0; r < 0.999; r += 0.05) {
      const double v = lambda_value(ConfigPoints({Point(0, r)}), ctx).value;
      CHECK(v > prev);
      prev = v;
    }
    CHECK(prev > 50);
  }

  TEST_CASE("closed-form pair energy") {
    const auto ctx = closed_form();
    for (double a : {0.1, 0.3, 0.6}) {
      const auto ev = lambda_value(ConfigPoints({Point(a, 0), Point(-a, 0)}), ctx);
      CHECK(ev.value == doctest::Approx(disk_lambda_pair(a)).epsilon(1e-12));
    }
  }

  TEST_CASE("gradient formula") {
    const auto ctx = closed_form();
    const auto g = lambda_grad(ConfigPoints({Point(0.3, 0)}), ctx);
    CHECK(g[0].x() == doctest::Approx(16 * kPi * 0.3 / 0.91).epsilon(1e-12));
    CHECK(g[0].x() == doctest::Approx(16.571).epsilon(1e-4));
    CHECK(std::abs(g[0].y()) < 1e-14);

    const auto fd = lambda_grad_fd(ConfigPoints({Point(0.3, 0)}), ctx, 1e-3);
    // third derivative of the closed form is below 2000 here
    CHECK(std::abs(fd[0].x() - g[0].x()) < 1e-6 * 2000);

    // mirror pair
    const auto gp = lambda_grad(ConfigPoints({Point(0.4, 0), Point(-0.4, 0)}), ctx);
    CHECK((gp[0] + gp[1]).norm() < 1e-6);
    CHECK(std::abs(gp[0].y()) < 1e-12);
    const double dpair = (disk_lambda_pair(0.4 + 1e-6) - disk_lambda_pair(0.4 - 1e-6)) / 2e-6;
    CHECK(2 * gp[0].x() == doctest::Approx(dpair).epsilon(1e-6));
    const auto fp = lambda_grad_fd(ConfigPoints({Point(0.4, 0), Point(-0.4, 0)}), ctx, 1e-4);
    CHECK((fp[0] + fp[1]).norm() < 1e-6);

    // general k = 3 against central differences
    const ConfigPoints c3({Point(0.2, 0.1), Point(-0.3, 0.25), Point(0.05, -0.5)});
    const auto g3 = lambda_grad(c3, ctx);
    const auto f3 = lambda_grad_fd(c3, ctx, 1e-4);
    for (int j = 0; j < 3; ++j) CHECK((g3[j] - f3[j]).norm() < 1e-4 * (1 + g3[j].norm()));
  }

  TEST_CASE("finite difference guards") {
    const auto ctx = closed_form();
    CHECK_THROWS_AS(lambda_grad_fd(ConfigPoints({Point(0.3, 0)}), ctx, 1e-5), ArgumentError);
    CHECK_THROWS_AS(lambda_grad_fd(ConfigPoints({Point(0.3, 0)}), ctx, 0.1), ArgumentError);
    CHECK_THROWS_AS(lambda_grad_fd(ConfigPoints({Point(0.995, 0)}), ctx, 1e-2), ArgumentError);
    CHECK_THROWS_AS(lambda_value(ConfigPoints({Point(1.2, 0)}), ctx), ArgumentError);
  }

  TEST_CASE("rotation invariance") {
    const auto ctx = closed_form();
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> ang(0, 2 * kPi);
    const ConfigPoints c({Point(0.2, 0.1), Point(-0.3, 0.25), Point(0.05, -0.5)});
    const double v0 = lambda_value(c, ctx).value;
    for (int r = 0; r < 10; ++r) {
      const Eigen::Rotation2D<double> R(ang(rng));
      ConfigPoints cr;
      for (const auto& p : c.points) cr.points.push_back(R * p);
      CHECK(std::abs(lambda_value(cr, ctx).value - v0) < 1e-6);
    }
    // with a mean field: quarter turns are mesh symmetries
    const auto mf = with_meanfield(0.5, 0.1);
    const ConfigPoints c1({Point(0.3, 0.1)});
    const double m0 = lambda_value(c1, mf).value;
    const double m1 = lambda_value(ConfigPoints({Point(-0.1, 0.3)}), mf).value;
    CHECK(std::abs(m1 - m0) < 1e-9);
  }

  TEST_CASE("mean field term and gradient consistency") {
    const auto ctx = with_meanfield(0.5, 0.05);
    const ConfigPoints c({Point(0.3, 0)});
    const auto ev = lambda_value(c, ctx);
    CHECK(ev.meanfield_iterations > 0);
    CHECK(ev.half_I < 0);  // z = 0 is admissible and I decreases from 0
    CHECK(std::abs(ev.value - (ev.half_I + ev.robin_part + ev.interaction_part)) <=
          1e-12 * std::abs(ev.value));
    const auto g = lambda_grad(c, ctx);
    const auto f = lambda_grad_fd(c, ctx, 1e-3);
    const double rel = (g[0] - f[0]).norm() / (1 + f[0].norm());
    MESSAGE("rho2 = 0.5 gradient " << g[0].transpose() << " fd " << f[0].transpose() << " rel " << rel);
    CHECK(rel < 2e-2);
    // symmetric point
    CHECK(lambda_grad(ConfigPoints({Point(0, 0)}), ctx)[0].norm() < 1e-10);
    // too close to the boundary for gradient recovery
    CHECK_THROWS_AS(lambda_grad(ConfigPoints({Point(0.9, 0)}), ctx), ArgumentError);
  }

  TEST_CASE("find_critical, closed form") {
    std::ostringstream trace;
    CriticalOptions opts;
    opts.trace = &trace;
    const auto cp = find_critical(ConfigPoints({Point(0.4, 0.2)}), closed_form(), opts);
    CHECK(cp.xi[0].norm() < 1e-6);
    CHECK(cp.gradient_norm < 1e-5);
    CHECK(cp.tol == 1e-5);
    CHECK(cp.classification == "minimum");
    REQUIRE(cp.hessian_eigenvalues.size() == 2);
    for (double e : cp.hessian_eigenvalues) CHECK(e == doctest::Approx(16 * kPi).epsilon(1e-4));
    for (std::size_t i = 1; i < cp.value_trace.size(); ++i)
      CHECK(cp.value_trace[i] < cp.value_trace[i - 1]);
    CHECK(!trace.str().empty());
  }

  TEST_CASE("find_critical with the mean field") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-0.4, 0.4);
    const Point x0(u(rng), u(rng));
    double prev_err = 1;
    for (double h : {0.1, 0.05}) {
      const auto cp = find_critical(ConfigPoints({x0}), with_meanfield(0.5, h));
      MESSAGE("h " << h << " xi* " << cp.xi[0].transpose() << " |grad| " << cp.gradient_norm);
      CHECK(cp.gradient_norm < 1e-3);
      CHECK(cp.xi[0].norm() < h);
      CHECK(cp.classification == "minimum");
      for (std::size_t i = 1; i < cp.value_trace.size(); ++i)
        CHECK(cp.value_trace[i] < cp.value_trace[i - 1]);
      prev_err = cp.xi[0].norm();
    }
    CHECK(prev_err < 0.05);
  }

  TEST_CASE("find_critical on a numeric Green function") {
    const auto dom = DomainSpec::rectangle(1, 1);
    auto op = std::make_shared<const DirichletOperator>(std::make_shared<const Mesh>(build_mesh(dom, 0.05)));
    ReducedEnergyContext ctx;
    ctx.green = GreenEvaluator::numeric(op, dom);
    ctx.op = op;
    const auto cp = find_critical(ConfigPoints({Point(0.3, 0.6)}), ctx);
    CHECK(cp.gradient_norm < 1e-3);
    CHECK((cp.xi[0] - Point(0.5, 0.5)).norm() < 0.05);
  }

  TEST_CASE("two points on the disk collide") {
    // Lambda along antipodal pairs is increasing in a and tends to -inf as
    // a -> 0, so minimization has nowhere to stop.
    for (double a = 0.05; a < 0.9; a += 0.05) CHECK(disk_lambda_pair(a + 0.05) > disk_lambda_pair(a));
    std::vector<ConfigPoints> seeds;
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> ang(0, 2 * kPi), rad(0.2, 0.6);
    for (int s = 0; s < 4; ++s) {
      const double t = ang(rng), r = rad(rng);
      seeds.push_back(ConfigPoints({Point(r * std::cos(t), r * std::sin(t)),
                                    Point(-0.8 * r * std::cos(t + 0.3), -0.8 * r * std::sin(t + 0.3))}));
    }
    const auto res = find_critical_multistart(seeds, closed_form(), {}, 2);
    REQUIRE(res.size() == seeds.size());
    for (const auto& e : res) {
      CHECK(!e.result);
      CHECK(e.error_kind == "escaped-config");
    }
    try {
      find_critical(seeds[0], closed_form());
      FAIL("expected escape");
    } catch (const EscapedConfigError& e) {
      // direction pulls the two points together
      REQUIRE(e.direction.size() == 4);
      CHECK(e.direction.norm() == doctest::Approx(1.0));
    }
  }
}
