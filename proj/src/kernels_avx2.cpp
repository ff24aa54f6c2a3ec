// AVX2+FMA kernel variants. This translation unit is compiled with
// -mavx2 -mfma on x86-64 only; dispatch checks cpu support at runtime
// before handing out this backend.

#include "polycert/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

namespace polycert::kernels {
namespace {

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d swapped = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, swapped));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i),
                               acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4),
                               _mm256_loadu_pd(b + i + 4), acc1);
    }
    for (; i + 4 <= n; i += 4) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i),
                               acc0);
    }
    double s = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d vy = _mm256_loadu_pd(y + i);
        vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), vy);
        _mm256_storeu_pd(y + i, vy);
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

void scal_avx2(double alpha, double* x, std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(x + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
    }
    for (; i < n; ++i) x[i] *= alpha;
}

void rot_avx2(double* x, double* y, double c, double s, std::size_t n) {
    const __m256d vc = _mm256_set1_pd(c);
    const __m256d vs = _mm256_set1_pd(s);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d vx = _mm256_loadu_pd(x + i);
        const __m256d vy = _mm256_loadu_pd(y + i);
        _mm256_storeu_pd(x + i,
                         _mm256_fmsub_pd(vc, vx, _mm256_mul_pd(vs, vy)));
        _mm256_storeu_pd(y + i,
                         _mm256_fmadd_pd(vs, vx, _mm256_mul_pd(vc, vy)));
    }
    for (; i < n; ++i) {
        const double xi = x[i];
        const double yi = y[i];
        x[i] = c * xi - s * yi;
        y[i] = s * xi + c * yi;
    }
}

void ger_avx2(double* a, double alpha, const double* x, const double* y,
              std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        axpy_avx2(alpha * x[i], y, a + i * n, n);
    }
}

void matmul_avx2(double* c, const double* a, const double* b, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        double* crow = c + i * n;
        std::size_t j = 0;
        for (; j + 4 <= n; j += 4) _mm256_storeu_pd(crow + j, _mm256_setzero_pd());
        for (; j < n; ++j) crow[j] = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            axpy_avx2(a[i * n + k], b + k * n, crow, n);
        }
    }
}

}  // namespace

const Backend* simd_backend() {
    static const Backend impl{dot_avx2, axpy_avx2, scal_avx2,
                              rot_avx2, ger_avx2, matmul_avx2,
                              "avx2"};
    return &impl;
}

}  // namespace polycert::kernels

#endif  // x86-64
