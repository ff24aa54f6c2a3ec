// NEON kernel variants for aarch64. NEON is baseline on aarch64, so no
// runtime feature check is needed beyond selecting this backend.

#include "polycert/kernels.hpp"

#if defined(__aarch64__)

#include <arm_neon.h>

namespace polycert::kernels {
namespace {

double dot_neon(const double* a, const double* b, std::size_t n) {
    float64x2_t acc0 = vdupq_n_f64(0.0);
    float64x2_t acc1 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
        acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
    }
    for (; i + 2 <= n; i += 2) {
        acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    }
    double s = vaddvq_f64(vaddq_f64(acc0, acc1));
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

void axpy_neon(double alpha, const double* x, double* y, std::size_t n) {
    const float64x2_t va = vdupq_n_f64(alpha);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

void scal_neon(double alpha, double* x, std::size_t n) {
    const float64x2_t va = vdupq_n_f64(alpha);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        vst1q_f64(x + i, vmulq_f64(va, vld1q_f64(x + i)));
    }
    for (; i < n; ++i) x[i] *= alpha;
}

void rot_neon(double* x, double* y, double c, double s, std::size_t n) {
    const float64x2_t vc = vdupq_n_f64(c);
    const float64x2_t vs = vdupq_n_f64(s);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const float64x2_t vx = vld1q_f64(x + i);
        const float64x2_t vy = vld1q_f64(y + i);
        vst1q_f64(x + i, vfmsq_f64(vmulq_f64(vc, vx), vs, vy));
        vst1q_f64(y + i, vfmaq_f64(vmulq_f64(vc, vy), vs, vx));
    }
    for (; i < n; ++i) {
        const double xi = x[i];
        const double yi = y[i];
        x[i] = c * xi - s * yi;
        y[i] = s * xi + c * yi;
    }
}

void ger_neon(double* a, double alpha, const double* x, const double* y,
              std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        axpy_neon(alpha * x[i], y, a + i * n, n);
    }
}

void matmul_neon(double* c, const double* a, const double* b, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        double* crow = c + i * n;
        for (std::size_t j = 0; j < n; ++j) crow[j] = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            axpy_neon(a[i * n + k], b + k * n, crow, n);
        }
    }
}

}  // namespace

const Backend* simd_backend() {
    static const Backend impl{dot_neon, axpy_neon, scal_neon,
                              rot_neon, ger_neon, matmul_neon,
                              "neon"};
    return &impl;
}

}  // namespace polycert::kernels

#endif  // aarch64
