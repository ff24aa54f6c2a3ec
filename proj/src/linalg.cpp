#include "polycert/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "polycert/kernels.hpp"

namespace polycert::linalg {

namespace k = polycert::kernels;

Matrix mul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows() || a.rows() != a.cols() || b.rows() != b.cols())
        throw std::invalid_argument("mul: square matrices of equal size required");
    Matrix c(a.rows());
    k::matmul(c.data(), a.data(), b.data(), a.rows());
    return c;
}

Matrix transpose(const Matrix& a) {
    Matrix t(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
    return t;
}

void add_scaled(Matrix& a, double alpha, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw std::invalid_argument("add_scaled: shape mismatch");
    k::axpy(alpha, b.data(), a.data(), a.rows() * a.cols());
}

Matrix sym_part(const Matrix& a) {
    Matrix s(a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            s(i, j) = 0.5 * (a(i, j) + a(j, i));
    return s;
}

double frob_inner(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw std::invalid_argument("frob_inner: shape mismatch");
    return k::dot(a.data(), b.data(), a.rows() * a.cols());
}

double frob_norm(const Matrix& a) {
    return std::sqrt(std::max(0.0, frob_inner(a, a)));
}

double trace(const Matrix& a) {
    double t = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) t += a(i, i);
    return t;
}

bool cholesky_inplace(Matrix& a, double reg) {
    const std::size_t n = a.rows();
    for (std::size_t j = 0; j < n; ++j) {
        double d = a(j, j) + reg - k::dot(a.row(j), a.row(j), j);
        if (!(d > 0.0) || !std::isfinite(d)) return false;
        d = std::sqrt(d);
        a(j, j) = d;
        const double inv = 1.0 / d;
        for (std::size_t i = j + 1; i < n; ++i) {
            a(i, j) = (a(i, j) - k::dot(a.row(i), a.row(j), j)) * inv;
        }
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) a(i, j) = 0.0;
    return true;
}

void forward_solve(const Matrix& l, double* b) {
    const std::size_t n = l.rows();
    for (std::size_t i = 0; i < n; ++i) {
        b[i] = (b[i] - k::dot(l.row(i), b, i)) / l(i, i);
    }
}

void backward_solve(const Matrix& l, double* b) {
    const std::size_t n = l.rows();
    for (std::size_t ii = n; ii-- > 0;) {
        b[ii] /= l(ii, ii);
        // eliminate x[ii] from rows above; column ii of L^T is row ii of L
        k::axpy(-b[ii], l.row(ii), b, ii);
    }
}

void chol_solve(const Matrix& l, double* b) {
    forward_solve(l, b);
    backward_solve(l, b);
}

Matrix forward_solve_matrix(const Matrix& l, const Matrix& b) {
    const std::size_t n = l.rows();
    Matrix x = b;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t p = 0; p < i; ++p) {
            k::axpy(-l(i, p), x.row(p), x.row(i), x.cols());
        }
        k::scal(1.0 / l(i, i), x.row(i), x.cols());
    }
    return x;
}

Matrix lower_inverse(const Matrix& l) {
    return forward_solve_matrix(l, Matrix::identity(l.rows()));
}

EigResult jacobi_eigh(const Matrix& a, int max_sweeps) {
    const std::size_t n = a.rows();
    Matrix w = a;
    Matrix v = Matrix::identity(n);
    const double base = frob_norm(w) + 1.0;

    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += w(p, q) * w(p, q);
        if (std::sqrt(2.0 * off) <= 1e-15 * base) break;

        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = w(p, q);
                if (std::abs(apq) <= 1e-18 * base) continue;
                const double tau = (w(q, q) - w(p, p)) / (2.0 * apq);
                const double t = (tau >= 0.0)
                                     ? 1.0 / (tau + std::sqrt(1.0 + tau * tau))
                                     : -1.0 / (-tau + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                // two-sided rotation W <- J^T W J, J acting on plane (p,q)
                k::rot(w.row(p), w.row(q), c, s, n);
                for (std::size_t i = 0; i < n; ++i) {
                    const double wip = w(i, p);
                    const double wiq = w(i, q);
                    w(i, p) = c * wip - s * wiq;
                    w(i, q) = s * wip + c * wiq;
                }
                k::rot(v.row(p), v.row(q), c, s, n);
            }
        }
    }

    EigResult r;
    r.values.resize(n);
    for (std::size_t i = 0; i < n; ++i) r.values[i] = w(i, i);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        return r.values[x] < r.values[y];
    });
    EigResult sorted;
    sorted.values.resize(n);
    sorted.vectors = Matrix(n);
    for (std::size_t i = 0; i < n; ++i) {
        sorted.values[i] = r.values[order[i]];
        for (std::size_t j = 0; j < n; ++j)
            sorted.vectors(i, j) = v(order[i], j);
    }
    return sorted;
}

double min_eigenvalue(const Matrix& a) {
    if (a.rows() == 0) return 0.0;
    return jacobi_eigh(a).values.front();
}

Matrix eig_reconstruct(const EigResult& e, const std::vector<double>& d) {
    const std::size_t n = e.values.size();
    if (d.size() != n) throw std::invalid_argument("eig_reconstruct: size mismatch");
    Matrix out(n);
    for (std::size_t kidx = 0; kidx < n; ++kidx) {
        k::ger(out.data(), d[kidx], e.vectors.row(kidx), e.vectors.row(kidx), n);
    }
    return out;
}

}  // namespace polycert::linalg
