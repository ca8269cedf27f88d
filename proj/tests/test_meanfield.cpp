#include <cmath>
#include <memory>
#include <random>

#include "doctest.h"
#include "toda/meanfield.hpp"

using namespace toda;

namespace {
std::shared_ptr<const DirichletOperator> disk_op(double h) {
  return std::make_shared<const DirichletOperator>(
      std::make_shared<const Mesh>(build_mesh(DomainSpec::unit_disk(), h)));
}
const GreenEvaluator& disk_green() {
  static const GreenEvaluator g = GreenEvaluator::analytic_disk();
  return g;
}
}  // namespace

TEST_SUITE("meanfield") {
  TEST_CASE("energy of the zero field") {
    auto op = disk_op(0.04);
    const ConfigPoints c0({Point(0, 0)});
    MeanFieldProblem p0(op, disk_green(), c0, 0.0);
    CHECK(energy_I(ScalarField::zeros(op->mesh_ptr()), p0) == 0.0);
    MeanFieldProblem p1(op, disk_green(), c0, 1.0);
    CHECK(energy_I(ScalarField::zeros(op->mesh_ptr()), p1) ==
          doctest::Approx(-2 * std::log(kPi / 2)).epsilon(1e-3));
    // rho2 = 0: I is half the squared H1 norm
    auto z = ScalarField::interpolate(op->mesh_ptr(), [](const Point& x) { return 1 - x.squaredNorm(); });
    for (int i = 0; i < z.mesh->num_nodes(); ++i)
      if (z.mesh->is_boundary(i)) z.values[i] = 0;
    z.zero_trace = true;
    CHECK(energy_I(z, p0) == doctest::Approx(0.5 * std::pow(h1_norm(*op, z), 2)));
  }

  TEST_CASE("regime guard") {
    auto op = disk_op(0.1);
    const ConfigPoints c0({Point(0, 0)});
    CHECK_THROWS_AS(MeanFieldProblem(op, disk_green(), c0, 4 * kPi), RegimeError);
    CHECK_NOTHROW(MeanFieldProblem(op, disk_green(), c0, 4 * kPi, true));
  }

  TEST_CASE("rho2 = 0 returns zero immediately") {
    auto op = disk_op(0.05);
    MeanFieldProblem p(op, disk_green(), ConfigPoints({Point(0.2, 0.1)}), 0.0);
    const auto s = solve_meanfield(p);
    CHECK(s.newton_iterations <= 1);
    CHECK(s.z.values.cwiseAbs().maxCoeff() == 0.0);
    for (const auto& g : grad_Itilde(p, s)) CHECK(g.norm() == 0.0);
  }

  TEST_CASE("rho2 = 0.5 minimizer beats the zero trial, energy decreases monotonically") {
    auto op = disk_op(0.04);
    MeanFieldProblem p(op, disk_green(), ConfigPoints({Point(0, 0)}), 0.5);
    const auto s = solve_meanfield(p);
    CHECK(s.energy < -2 * 0.5 * std::log(kPi / 2));
    CHECK(s.energy < energy_I(ScalarField::zeros(op->mesh_ptr()), p));
    for (std::size_t i = 1; i < s.energy_trace.size(); ++i)
      CHECK(s.energy_trace[i] <= s.energy_trace[i - 1]);
    CHECK(s.gradient_norm < 1e-10 * (1 + std::abs(s.energy)));
    s.z.check();
    // Euler-Lagrange residual against random zero-trace test fields
    std::mt19937_64 rng(4);
    std::normal_distribution<double> N;
    const auto& q = op->quad();
    const Vec zq = interpolate_at(q, op->mesh(), s.z.values);
    Vec e(q.size());
    for (std::size_t k = 0; k < q.size(); ++k) e[k] = p.h_at_quad()[k] * std::exp(zq[k]);
    const Vec load = assemble_load(q, op->mesh(), e);
    for (int r = 0; r < 10; ++r) {
      Vec v = Vec::Zero(op->mesh().num_nodes());
      for (int i : op->mesh().interior_nodes()) v[i] = N(rng);
      const double res = v.dot(op->stiffness() * s.z.values) - 2 * 0.5 * v.dot(load) / s.mass_normalizer;
      CHECK(std::abs(res) < 1e-8);
    }
  }

  TEST_CASE("radial symmetry under a quarter turn") {
    auto op = disk_op(0.05);
    MeanFieldProblem p(op, disk_green(), ConfigPoints({Point(0, 0)}), 1.0);
    const auto s = solve_meanfield(p);
    double worst = 0;
    for (int i = 0; i < op->mesh().num_nodes(); ++i) {
      const Point x = op->mesh().nodes()[i];
      if (x.norm() > 0.95) continue;
      worst = std::max(worst, std::abs(s.z.at(x) - s.z.at(Point(-x.y(), x.x()))));
    }
    CHECK(worst < 0.05);
    CHECK(grad_Itilde(p, s)[0].norm() < 0.05);
  }

  TEST_CASE("nondegeneracy probe") {
    auto op = disk_op(0.05);
    MeanFieldProblem p0(op, disk_green(), ConfigPoints({Point(0, 0)}), 0.0);
    const auto r0 = nondegeneracy_check(solve_meanfield(p0), p0);
    CHECK(r0.sigma_min == doctest::Approx(5.7832).epsilon(0.02));  // j_{0,1}^2
    CHECK(r0.nondegenerate);
    double prev = 0;
    bool verdict = false;
    for (double h : {0.05, 0.025}) {
      auto oph = disk_op(h);
      MeanFieldProblem p(oph, disk_green(), ConfigPoints({Point(0, 0)}), 0.5);
      const auto r = nondegeneracy_check(solve_meanfield(p), p);
      CHECK(r.sigma_min > 0);
      CHECK_FALSE(r.inconclusive);
      if (prev > 0) {
        CHECK(std::abs(r.sigma_min - prev) / prev < 0.1);
        CHECK(r.nondegenerate == verdict);
      }
      prev = r.sigma_min;
      verdict = r.nondegenerate;
    }
  }

  TEST_CASE("grad Itilde matches finite differences of the reduced functional") {
    auto op = disk_op(0.025);
    const double rho2 = 0.5, step = 1e-3;
    auto Itilde = [&](const Point& xi) {
      MeanFieldProblem p(op, disk_green(), ConfigPoints({xi}), rho2);
      return solve_meanfield(p).energy;
    };
    MeanFieldProblem p(op, disk_green(), ConfigPoints({Point(0.3, 0)}), rho2);
    const auto s = solve_meanfield(p);
    const Point g = grad_Itilde(p, s)[0];
    const double fd = (Itilde(Point(0.3 + step, 0)) - Itilde(Point(0.3 - step, 0))) / (2 * step);
    MESSAGE("grad Itilde " << g.x() << " fd " << fd);
    CHECK(std::abs(g.x() - fd) <= 0.02 * std::abs(fd));
    CHECK(std::abs(g.y()) < 0.025);  // O(h): the recovery patch is one-sided on a grid line
  }

  TEST_CASE("z tends to zero with rho2") {
    auto op = disk_op(0.05);
    double prev = 1e9;
    for (double rho2 : {2.0, 1.0, 0.5, 0.25, 0.125}) {
      MeanFieldProblem p(op, disk_green(), ConfigPoints({Point(0.1, 0.2)}), rho2);
      const double n = h1_norm(*op, solve_meanfield(p).z);
      CHECK(n < prev);
      prev = n;
    }
  }
}
