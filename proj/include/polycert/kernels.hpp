#pragma once

#include <cstddef>

// Dense double-precision kernels used by the linear algebra layer.
// Every kernel has a scalar reference implementation plus a SIMD variant
// (AVX2+FMA on x86-64, NEON on aarch64) selected once at startup.
// Setting the environment variable POLYCERT_KERNELS=scalar forces the
// reference path; POLYCERT_KERNELS=simd fails if no SIMD backend exists.

namespace polycert::kernels {

struct Backend {
    // sum_i a[i]*b[i]
    double (*dot)(const double* a, const double* b, std::size_t n);
    // y += alpha * x
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
    // x *= alpha
    void (*scal)(double alpha, double* x, std::size_t n);
    // Givens rotation of two rows: x' = c*x - s*y, y' = s*x + c*y
    void (*rot)(double* x, double* y, double c, double s, std::size_t n);
    // A += alpha * x * y^T, A row-major n-by-n
    void (*ger)(double* a, double alpha, const double* x, const double* y,
                std::size_t n);
    // C = A * B, all row-major n-by-n, C must not alias A or B
    void (*matmul)(double* c, const double* a, const double* b, std::size_t n);
    const char* name;
};

// Backend selected for this process (stable for the process lifetime).
const Backend& backend();
// Reference implementation, always available (used by equivalence tests).
const Backend& scalar_backend();
// SIMD implementation if compiled in, nullptr otherwise.
const Backend* simd_backend();

inline double dot(const double* a, const double* b, std::size_t n) {
    return backend().dot(a, b, n);
}
inline void axpy(double alpha, const double* x, double* y, std::size_t n) {
    backend().axpy(alpha, x, y, n);
}
inline void scal(double alpha, double* x, std::size_t n) {
    backend().scal(alpha, x, n);
}
inline void rot(double* x, double* y, double c, double s, std::size_t n) {
    backend().rot(x, y, c, s, n);
}
inline void ger(double* a, double alpha, const double* x, const double* y,
                std::size_t n) {
    backend().ger(a, alpha, x, y, n);
}
inline void matmul(double* c, const double* a, const double* b,
                   std::size_t n) {
    backend().matmul(c, a, b, n);
}

}  // namespace polycert::kernels
