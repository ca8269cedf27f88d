#include "toda/kernels.hpp"

#include <cmath>

namespace toda::kernels::scalar {

void vexp(const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = std::exp(x[i]);
}

double dot(const double* a, const double* b, std::size_t n) {
  // Four partial sums, same association order as the AVX2 path.
  double s[4] = {0, 0, 0, 0};
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    for (int l = 0; l < 4; ++l) s[l] += a[i + l] * b[i + l];
  double t = (s[0] + s[2]) + (s[1] + s[3]);
  for (; i < n; ++i) t += a[i] * b[i];
  return t;
}

void bubble_density(const double* px, const double* py, std::size_t n, double cx,
                    double cy, double d2, double* out) {
  const double num = 8.0 * d2;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = px[i] - cx, dy = py[i] - cy;
    const double q = d2 + dx * dx + dy * dy;
    out[i] = num / (q * q);
  }
}

void mul_inplace(double* out, const double* a, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] *= a[i];
}

}  // namespace toda::kernels::scalar
