#include "toda/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>

#include "toda/common.hpp"

namespace toda::kernels {

namespace {

struct Table {
  void (*vexp)(const double*, double*, std::size_t);
  double (*dot)(const double*, const double*, std::size_t);
  void (*bubble_density)(const double*, const double*, std::size_t, double, double,
                         double, double*);
  void (*mul_inplace)(double*, const double*, std::size_t);
};

const Table kScalar{scalar::vexp, scalar::dot, scalar::bubble_density, scalar::mul_inplace};
const Table kAvx2{avx2::vexp, avx2::dot, avx2::bubble_density, avx2::mul_inplace};

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Isa initial_isa() {
  const char* env = std::getenv("TODA_SIMD");
  if (env && std::strcmp(env, "scalar") == 0) return Isa::Scalar;
  return cpu_has_avx2() ? Isa::Avx2 : Isa::Scalar;
}

std::atomic<Isa>& current() {
  static std::atomic<Isa> isa{initial_isa()};
  return isa;
}

const Table& table() { return current().load(std::memory_order_relaxed) == Isa::Avx2 ? kAvx2 : kScalar; }

}  // namespace

Isa active_isa() { return current().load(); }

const char* isa_name(Isa isa) { return isa == Isa::Avx2 ? "avx2" : "scalar"; }

bool isa_available(Isa isa) { return isa == Isa::Scalar || cpu_has_avx2(); }

void set_isa(Isa isa) {
  if (!isa_available(isa)) throw ArgumentError(std::string("ISA not available: ") + isa_name(isa));
  current().store(isa);
}

void vexp(const double* x, double* y, std::size_t n) { table().vexp(x, y, n); }
double dot(const double* a, const double* b, std::size_t n) { return table().dot(a, b, n); }
void bubble_density(const double* px, const double* py, std::size_t n, double cx, double cy,
                    double d2, double* out) {
  table().bubble_density(px, py, n, cx, cy, d2, out);
}
void mul_inplace(double* out, const double* a, std::size_t n) { table().mul_inplace(out, a, n); }

}  // namespace toda::kernels
