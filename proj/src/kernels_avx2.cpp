// Compiled with -mavx2 -mfma; only reached when CPUID reports both.
#include "toda/kernels.hpp"

#include <immintrin.h>

#include <cmath>
#include <cstdint>

namespace toda::kernels::avx2 {

namespace {

constexpr double kLog2e = 1.4426950408889634074;
constexpr double kLn2Hi = 6.93147180369123816490e-01;
constexpr double kLn2Lo = 1.90821492927058770002e-10;
// Inputs outside this window (and NaN) go through std::exp lane by lane.
constexpr double kLo = -708.0;
constexpr double kHi = 709.0;

inline __m256d exp4(__m256d x) {
  const __m256d n = _mm256_round_pd(_mm256_mul_pd(x, _mm256_set1_pd(kLog2e)),
                                    _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(n, _mm256_set1_pd(kLn2Hi), x);
  r = _mm256_fnmadd_pd(n, _mm256_set1_pd(kLn2Lo), r);
  // Taylor series to degree 13 on |r| <= ln2/2, truncation error ~4e-18.
  static const double c[] = {1.0 / 6227020800.0, 1.0 / 479001600.0, 1.0 / 39916800.0,
                             1.0 / 3628800.0,    1.0 / 362880.0,    1.0 / 40320.0,
                             1.0 / 5040.0,       1.0 / 720.0,       1.0 / 120.0,
                             1.0 / 24.0,         1.0 / 6.0,         0.5,
                             1.0,                1.0};
  __m256d p = _mm256_set1_pd(c[0]);
  for (int k = 1; k < 14; ++k) p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(c[k]));
  // 2^n via exponent bits; n is integral and within [-1022, 1023] here.
  const __m256d magic = _mm256_set1_pd(6755399441055744.0);  // 2^52 + 2^51
  __m256i ni = _mm256_castpd_si256(_mm256_add_pd(n, magic));
  ni = _mm256_sub_epi64(ni, _mm256_castpd_si256(magic));
  ni = _mm256_slli_epi64(_mm256_add_epi64(ni, _mm256_set1_epi64x(1023)), 52);
  return _mm256_mul_pd(p, _mm256_castsi256_pd(ni));
}

}  // namespace

void vexp(const double* x, double* y, std::size_t n) {
  std::size_t i = 0;
  const __m256d lo = _mm256_set1_pd(kLo), hi = _mm256_set1_pd(kHi);
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_loadu_pd(x + i);
    const __m256d ok = _mm256_and_pd(_mm256_cmp_pd(v, lo, _CMP_GE_OQ),
                                     _mm256_cmp_pd(v, hi, _CMP_LE_OQ));
    _mm256_storeu_pd(y + i, exp4(v));
    if (_mm256_movemask_pd(ok) != 0xF)
      for (int l = 0; l < 4; ++l)
        if (!(x[i + l] >= kLo && x[i + l] <= kHi)) y[i + l] = std::exp(x[i + l]);
  }
  for (; i < n; ++i) y[i] = std::exp(x[i]);
}

double dot(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc);
  alignas(32) double s[4];
  _mm256_store_pd(s, acc);
  double t = (s[0] + s[2]) + (s[1] + s[3]);
  for (; i < n; ++i) t += a[i] * b[i];
  return t;
}

void bubble_density(const double* px, const double* py, std::size_t n, double cx,
                    double cy, double d2, double* out) {
  const __m256d vcx = _mm256_set1_pd(cx), vcy = _mm256_set1_pd(cy);
  const __m256d vd2 = _mm256_set1_pd(d2), num = _mm256_set1_pd(8.0 * d2);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d dx = _mm256_sub_pd(_mm256_loadu_pd(px + i), vcx);
    const __m256d dy = _mm256_sub_pd(_mm256_loadu_pd(py + i), vcy);
    __m256d q = _mm256_add_pd(vd2, _mm256_mul_pd(dx, dx));
    q = _mm256_add_pd(q, _mm256_mul_pd(dy, dy));
    _mm256_storeu_pd(out + i, _mm256_div_pd(num, _mm256_mul_pd(q, q)));
  }
  const double s = 8.0 * d2;
  for (; i < n; ++i) {
    const double dx = px[i] - cx, dy = py[i] - cy;
    const double q = d2 + dx * dx + dy * dy;
    out[i] = s / (q * q);
  }
}

void mul_inplace(double* out, const double* a, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(out + i), _mm256_loadu_pd(a + i)));
  for (; i < n; ++i) out[i] *= a[i];
}

}  // namespace toda::kernels::avx2
