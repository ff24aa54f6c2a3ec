#pragma once

#include <cstddef>
#include <vector>

// Small dense linear algebra on top of the kernel layer. Everything is
// row-major and sized for desk-scale SDP blocks (dimensions in the tens
// to low hundreds).

namespace polycert::linalg {

class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), a_(rows * cols, 0.0) {}
    explicit Matrix(std::size_t n) : Matrix(n, n) {}

    static Matrix identity(std::size_t n) {
        Matrix m(n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t i, std::size_t j) { return a_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a_[i * cols_ + j]; }

    double* data() { return a_.data(); }
    const double* data() const { return a_.data(); }
    double* row(std::size_t i) { return a_.data() + i * cols_; }
    const double* row(std::size_t i) const { return a_.data() + i * cols_; }

    bool operator==(const Matrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> a_;
};

// C = A * B (square)
Matrix mul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);
void add_scaled(Matrix& a, double alpha, const Matrix& b);  // a += alpha*b
Matrix sym_part(const Matrix& a);                           // (A + A^T)/2

double frob_inner(const Matrix& a, const Matrix& b);
double frob_norm(const Matrix& a);
double trace(const Matrix& a);

// In-place lower Cholesky of a symmetric matrix with `reg` added to the
// diagonal. Returns false if a pivot is not strictly positive. On success
// the lower triangle holds L (upper triangle is zeroed).
bool cholesky_inplace(Matrix& a, double reg = 0.0);

// Solve L * y = b in place (L lower triangular).
void forward_solve(const Matrix& l, double* b);
// Solve L^T * y = b in place.
void backward_solve(const Matrix& l, double* b);
// Solve (L L^T) x = b in place.
void chol_solve(const Matrix& l, double* b);

// X = L^{-1} * B, row-sweep forward substitution on whole matrices.
Matrix forward_solve_matrix(const Matrix& l, const Matrix& b);
// Inverse of L (lower triangular).
Matrix lower_inverse(const Matrix& l);

struct EigResult {
    std::vector<double> values;  // ascending
    Matrix vectors;              // row k is the eigenvector of values[k]
};

// Cyclic Jacobi eigendecomposition of a symmetric matrix.
EigResult jacobi_eigh(const Matrix& a, int max_sweeps = 64);

double min_eigenvalue(const Matrix& a);

// P * diag(d) * P^T where columns of P are the rows of `vectors`.
Matrix eig_reconstruct(const EigResult& e, const std::vector<double>& d);

}  // namespace polycert::linalg
