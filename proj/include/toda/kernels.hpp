#pragma once

#include <cstddef>

// Data-parallel inner loops over quadrature points. Each kernel has a scalar
// reference and an AVX2/FMA variant; the variant is picked once at startup
// from CPUID and can be pinned with TODA_SIMD=scalar.
namespace toda::kernels {

enum class Isa { Scalar, Avx2 };

Isa active_isa();
const char* isa_name(Isa isa);
bool isa_available(Isa isa);
// Test hook; throws ArgumentError if the requested ISA is not available.
void set_isa(Isa isa);

// y[i] = exp(x[i])
void vexp(const double* x, double* y, std::size_t n);
// sum a[i]*b[i]
double dot(const double* a, const double* b, std::size_t n);
// out[i] = 8 d2 / (d2 + |p_i - c|^2)^2, the Liouville bubble density e^{w}
void bubble_density(const double* px, const double* py, std::size_t n, double cx,
                    double cy, double d2, double* out);
// out[i] *= a[i]
void mul_inplace(double* out, const double* a, std::size_t n);

namespace scalar {
void vexp(const double* x, double* y, std::size_t n);
double dot(const double* a, const double* b, std::size_t n);
void bubble_density(const double* px, const double* py, std::size_t n, double cx,
                    double cy, double d2, double* out);
void mul_inplace(double* out, const double* a, std::size_t n);
}  // namespace scalar

namespace avx2 {
void vexp(const double* x, double* y, std::size_t n);
double dot(const double* a, const double* b, std::size_t n);
void bubble_density(const double* px, const double* py, std::size_t n, double cx,
                    double cy, double d2, double* out);
void mul_inplace(double* out, const double* a, std::size_t n);
}  // namespace avx2

}  // namespace toda::kernels
