#include "polycert/kernels.hpp"

namespace polycert::kernels {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void scal_scalar(double alpha, double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) x[i] *= alpha;
}

void rot_scalar(double* x, double* y, double c, double s, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        const double xi = x[i];
        const double yi = y[i];
        x[i] = c * xi - s * yi;
        y[i] = s * xi + c * yi;
    }
}

void ger_scalar(double* a, double alpha, const double* x, const double* y,
                std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        const double axi = alpha * x[i];
        double* row = a + i * n;
        for (std::size_t j = 0; j < n; ++j) row[j] += axi * y[j];
    }
}

void matmul_scalar(double* c, const double* a, const double* b,
                   std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        double* crow = c + i * n;
        for (std::size_t j = 0; j < n; ++j) crow[j] = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            const double aik = a[i * n + k];
            const double* brow = b + k * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += aik * brow[j];
        }
    }
}

}  // namespace

const Backend& scalar_backend() {
    static const Backend impl{dot_scalar, axpy_scalar, scal_scalar,
                              rot_scalar, ger_scalar, matmul_scalar,
                              "scalar"};
    return impl;
}

}  // namespace polycert::kernels
