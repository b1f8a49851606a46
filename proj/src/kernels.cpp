#include "gls/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace gls::kern {

namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

double sum_scalar(const double* a, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i];
  return acc;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void xpay_scalar(const double* x, double alpha, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = x[i] + alpha * y[i];
}

void scale_scalar(double alpha, double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= alpha;
}

void sub_scalar(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
}

void hadamard_scalar(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

void shift_scalar(double c, double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] += c;
}

struct Backend {
  const char* name;
  double (*dot)(const double*, const double*, std::size_t);
  double (*sum)(const double*, std::size_t);
  void (*axpy)(double, const double*, double*, std::size_t);
  void (*xpay)(const double*, double, double*, std::size_t);
  void (*scale)(double, double*, std::size_t);
  void (*sub)(const double*, const double*, double*, std::size_t);
  void (*hadamard)(const double*, const double*, double*, std::size_t);
  void (*shift)(double, double*, std::size_t);
};

constexpr Backend kScalar = {"scalar",      dot_scalar,      sum_scalar,
                             axpy_scalar,   xpay_scalar,     scale_scalar,
                             sub_scalar,    hadamard_scalar, shift_scalar};

}  // namespace

#if defined(GLS_HAVE_AVX2_TU)
namespace avx2 {
double dot(const double*, const double*, std::size_t);
double sum(const double*, std::size_t);
void axpy(double, const double*, double*, std::size_t);
void xpay(const double*, double, double*, std::size_t);
void scale(double, double*, std::size_t);
void sub(const double*, const double*, double*, std::size_t);
void hadamard(const double*, const double*, double*, std::size_t);
void shift(double, double*, std::size_t);
}  // namespace avx2
#endif

namespace {

#if defined(GLS_HAVE_AVX2_TU)
constexpr Backend kAvx2 = {"avx2",     avx2::dot,      avx2::sum,
                           avx2::axpy, avx2::xpay,     avx2::scale,
                           avx2::sub,  avx2::hadamard, avx2::shift};

bool avx2_supported() {
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}
#endif

Backend resolve() {
  const char* env = std::getenv("GLS_SIMD");
#if defined(GLS_HAVE_AVX2_TU)
  if (env != nullptr && std::strcmp(env, "scalar") == 0) return kScalar;
  if (env != nullptr && std::strcmp(env, "avx2") == 0) {
    if (avx2_supported()) return kAvx2;
    return kScalar;
  }
  if (avx2_supported()) return kAvx2;
#else
  (void)env;
#endif
  return kScalar;
}

Backend& active() {
  static Backend backend = resolve();
  return backend;
}

}  // namespace

double dot(const double* a, const double* b, std::size_t n) { return active().dot(a, b, n); }
double sum(const double* a, std::size_t n) { return active().sum(a, n); }
void axpy(double alpha, const double* x, double* y, std::size_t n) { active().axpy(alpha, x, y, n); }
void xpay(const double* x, double alpha, double* y, std::size_t n) { active().xpay(x, alpha, y, n); }
void scale(double alpha, double* x, std::size_t n) { active().scale(alpha, x, n); }
void sub(const double* a, const double* b, double* out, std::size_t n) { active().sub(a, b, out, n); }
void hadamard(const double* a, const double* b, double* out, std::size_t n) {
  active().hadamard(a, b, out, n);
}
void shift(double c, double* x, std::size_t n) { active().shift(c, x, n); }

const char* active_backend() { return active().name; }

bool force_backend(const char* name) {
  if (std::strcmp(name, "scalar") == 0) {
    active() = kScalar;
    return true;
  }
#if defined(GLS_HAVE_AVX2_TU)
  if (std::strcmp(name, "avx2") == 0 && avx2_supported()) {
    active() = kAvx2;
    return true;
  }
#endif
  return false;
}

}  // namespace gls::kern
