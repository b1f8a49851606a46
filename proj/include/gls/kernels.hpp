#pragma once

#include <cstddef>

// Dense vector kernels behind the iterative solvers. A scalar reference
// implementation always exists; on x86-64 an AVX2/FMA variant is selected at
// runtime when the CPU supports it. The environment variable GLS_SIMD
// (scalar|avx2|auto) overrides detection. Backends agree up to floating-point
// roundoff (reduction order differs); each backend on its own is bitwise
// deterministic.

namespace gls::kern {

double dot(const double* a, const double* b, std::size_t n);
double sum(const double* a, std::size_t n);

// y += alpha*x
void axpy(double alpha, const double* x, double* y, std::size_t n);
// y = x + alpha*y
void xpay(const double* x, double alpha, double* y, std::size_t n);
// x *= alpha
void scale(double alpha, double* x, std::size_t n);
// out = a - b
void sub(const double* a, const double* b, double* out, std::size_t n);
// out = a .* b
void hadamard(const double* a, const double* b, double* out, std::size_t n);
// x += c
void shift(double c, double* x, std::size_t n);

// Name of the backend in use: "scalar" or "avx2".
const char* active_backend();

// Force a backend by name (tests); returns false if unavailable on this CPU.
bool force_backend(const char* name);

}  // namespace gls::kern
