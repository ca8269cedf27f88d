#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "doctest.h"
#include "toda/kernels.hpp"

using namespace toda::kernels;

TEST_SUITE("kernels") {
  TEST_CASE("scalar and avx2 exp agree to a few ulp") {
    if (!isa_available(Isa::Avx2)) return;
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> U(-700.0, 700.0);
    std::vector<double> x(10007), a(x.size()), b(x.size());
    for (auto& v : x) v = U(rng);
    // edges: window limits, tiny and huge, NaN, infinities
    x[0] = 0.0;
    x[1] = -708.0;
    x[2] = 709.0;
    x[3] = -745.5;
    x[4] = 710.0;
    x[5] = std::numeric_limits<double>::quiet_NaN();
    x[6] = -std::numeric_limits<double>::infinity();
    x[7] = 1e-300;
    scalar::vexp(x.data(), a.data(), x.size());
    avx2::vexp(x.data(), b.data(), x.size());
    CHECK(std::isnan(b[5]));
    CHECK(b[6] == 0.0);
    CHECK(std::isinf(b[4]));
    double worst = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (i == 5 || i == 4) continue;
      if (a[i] == 0) {
        CHECK(b[i] == 0);
        continue;
      }
      worst = std::max(worst, std::abs(a[i] - b[i]) / a[i]);
    }
    CHECK(worst < 1e-15);
  }

  TEST_CASE("dot, bubble density and product kernels match the reference") {
    if (!isa_available(Isa::Avx2)) return;
    std::mt19937_64 rng(11);
    std::normal_distribution<double> N;
    for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 17u, 1000u}) {
      std::vector<double> x(n), y(n), r1(n), r2(n), m1(n), m2(n);
      for (std::size_t i = 0; i < n; ++i) {
        x[i] = N(rng);
        y[i] = N(rng);
        m1[i] = m2[i] = N(rng);
      }
      const double d1 = scalar::dot(x.data(), y.data(), n);
      const double d2 = avx2::dot(x.data(), y.data(), n);
      double scale = 0;
      for (std::size_t i = 0; i < n; ++i) scale += std::abs(x[i] * y[i]);
      CHECK(std::abs(d1 - d2) <= 1e-14 * (1 + scale));
      scalar::bubble_density(x.data(), y.data(), n, 0.1, -0.2, 1e-4, r1.data());
      avx2::bubble_density(x.data(), y.data(), n, 0.1, -0.2, 1e-4, r2.data());
      for (std::size_t i = 0; i < n; ++i) CHECK(r1[i] == doctest::Approx(r2[i]).epsilon(1e-15));
      scalar::mul_inplace(m1.data(), x.data(), n);
      avx2::mul_inplace(m2.data(), x.data(), n);
      for (std::size_t i = 0; i < n; ++i) CHECK(m1[i] == m2[i]);
    }
  }

  TEST_CASE("bubble density center value and dispatch switching") {
    const double px = 0.0, py = 0.0;
    double out = 0;
    const Isa before = active_isa();
    for (Isa isa : {Isa::Scalar, Isa::Avx2}) {
      if (!isa_available(isa)) continue;
      set_isa(isa);
      CHECK(active_isa() == isa);
      bubble_density(&px, &py, 1, 0.0, 0.0, 0.25, &out);
      CHECK(out == doctest::Approx(8.0 / 0.25));
    }
    set_isa(before);
  }
}
